import numpy as np
import pytest

from peierls.lattice import Lattice, bz_grid, dual_shell
from peierls.symbols import (
    Nonrelativistic,
    PeriodicSymbol,
    cosine_potential,
    separable_cosine_2d,
)


@pytest.fixture(scope="session")
def lat1():
    return Lattice(basis=np.array([[2.0 * np.pi]]))


@pytest.fixture(scope="session")
def lat2():
    return Lattice(basis=2.0 * np.pi * np.eye(2))


@pytest.fixture(scope="session")
def mathieu(lat1):
    """d=1 fixture: -d^2/dy^2 + cos(y) on a 2*pi-periodic cell."""
    return PeriodicSymbol(Nonrelativistic(), cosine_potential(lat1, 0.5))


@pytest.fixture(scope="session")
def separable(lat2):
    """d=2 fixture: -Laplace + cos(y1) + cos(y2)."""
    return PeriodicSymbol(Nonrelativistic(), separable_cosine_2d(lat2, 0.5))


@pytest.fixture(scope="session")
def mathieu_bands(mathieu, lat1):
    from peierls.bloch import compute_bands

    grid = bz_grid(lat1, 64)
    shell = dual_shell(lat1, 8.0)
    return compute_bands(mathieu, grid, shell, 3, keep_vectors=True)


@pytest.fixture(scope="session")
def separable_bands(separable, lat2):
    from peierls.bloch import compute_bands

    grid = bz_grid(lat2, 32)
    shell = dual_shell(lat2, 8.0)
    return compute_bands(separable, grid, shell, 2, keep_vectors=True)


@pytest.fixture(scope="session")
def nn_hoppings():
    """Nearest-neighbor hoppings of the symbol -2cos(xi1) - 2cos(xi2)."""
    from peierls.effective import HoppingSet

    m = np.array([[-1.0 + 0j]])
    return HoppingSet(
        n=1,
        dim=2,
        hoppings={(1, 0): m, (-1, 0): m, (0, 1): m, (0, -1): m},
        source_tag="nn",
    )

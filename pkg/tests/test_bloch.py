import numpy as np
import pytest

from peierls.bloch import (
    assemble_fiber_matrix,
    band_intervals,
    compute_bands,
    garding_check,
)
from peierls.lattice import bz_grid, dual_shell
from peierls.symbols import (
    Nonrelativistic,
    PeriodicPotential,
    PeriodicSymbol,
    Polynomial,
    zero_potential,
)


def test_fiber_matrix_is_hermitian(mathieu, lat1):
    shell = dual_shell(lat1, 6.0)
    H = assemble_fiber_matrix(mathieu, [0.3], shell).entries
    assert np.allclose(H, np.conj(H.T), atol=1e-14)


def test_fiber_matrix_rejects_empty_shell(mathieu, lat1):
    shell = dual_shell(lat1, 6.0)
    empty = type(shell).__new__(type(shell))
    object.__setattr__(empty, "lattice", lat1)
    object.__setattr__(empty, "cutoff", 0.0)
    object.__setattr__(empty, "members", np.zeros((0, 1), dtype=int))
    with pytest.raises(ValueError, match="empty"):
        assemble_fiber_matrix(mathieu, [0.0], empty)


def test_free_fiber_diagonal(lat1):
    free = PeriodicSymbol(Nonrelativistic(), zero_potential(lat1))
    shell = dual_shell(lat1, 3.0)
    fm = assemble_fiber_matrix(free, [0.2], shell)
    expected = (0.2 + shell.points()[:, 0]) ** 2
    assert np.allclose(fm.entries, np.diag(expected), atol=1e-14)


def test_polynomial_weyl_midpoint_reduces_to_kinetic(lat1):
    """eta^2 with constant coefficient must match the nonrelativistic fiber."""
    const = PeriodicPotential(lat1, {(0,): 1.0})
    cos_part = PeriodicPotential(lat1, {(1,): 0.5, (-1,): 0.5})
    poly = Polynomial(terms={(2,): const, (0,): cos_part}, order=2)
    sym_poly = PeriodicSymbol(poly, zero_potential(lat1))
    sym_nr = PeriodicSymbol(Nonrelativistic(), cos_part)
    shell = dual_shell(lat1, 5.0)
    a = assemble_fiber_matrix(sym_poly, [0.17], shell).entries
    b = assemble_fiber_matrix(sym_nr, [0.17], shell).entries
    # the Weyl midpoint correction to the diagonal eta^2 term vanishes for
    # a constant coefficient, but off-diagonal kinetic terms would differ
    assert np.allclose(np.diag(a), np.diag(b), atol=1e-13)
    assert np.allclose(a, b, atol=1e-13)


def test_compute_bands_sorted_and_periodic(mathieu_bands):
    vals = mathieu_bands.bands
    assert np.all(np.diff(vals, axis=1) >= 0)
    # band functions are even in xi: lambda(-t) == lambda(t) on the grid
    res = mathieu_bands.grid.resolution
    for i in range(1, res // 2):
        assert np.allclose(vals[i], vals[res - i], atol=1e-10)


def test_compute_bands_rejects_oversized_request(mathieu, lat1):
    grid = bz_grid(lat1, 4)
    shell = dual_shell(lat1, 1.0)
    with pytest.raises(ValueError, match="exceeds"):
        compute_bands(mathieu, grid, shell, shell.size + 1)


def test_band_intervals_simplicity_flags(mathieu_bands):
    iv = band_intervals(mathieu_bands, gap_tol=1e-6)
    # Mathieu bands 1 and 2 are simple and disjoint; the last computed band
    # can never be certified simple
    assert iv.simple_flags[0]
    assert iv.simple_flags[1]
    assert not iv.simple_flags[-1]
    assert np.all(iv.intervals[:, 0] <= iv.intervals[:, 1])


def test_garding_lower_bound(mathieu, lat1):
    shell = dual_shell(lat1, 6.0)
    fm = assemble_fiber_matrix(mathieu, [0.1], shell)
    lam0 = np.linalg.eigvalsh(fm.entries)[0]
    assert garding_check(fm, lam0 - 1.0) > 0.0
    assert garding_check(fm, lam0 + 1.0) < 0.0

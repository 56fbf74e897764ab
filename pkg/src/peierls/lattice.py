"""Period lattices, dual lattices and Brillouin-zone sampling (d = 1 or 2).

The dual basis satisfies <e*_j, e_k> = 2*pi*delta_jk, so the fundamental
dual cell has volume (2*pi)^d / |E|.  The dual cell is centered: fractional
coordinates live in [-1/2, 1/2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DegenerateLatticeError(ValueError):
    """Basis vectors are linearly dependent (or numerically singular)."""


def dual_basis(basis: np.ndarray) -> np.ndarray:
    """Return the dual generators, rows e*_j with <e*_j, e_k> = 2*pi*delta_jk."""
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    d = basis.shape[0]
    if basis.shape != (d, d):
        raise ValueError(f"basis must be square, got shape {basis.shape}")
    det = np.linalg.det(basis)
    if abs(det) < 1e-14 * max(1.0, np.abs(basis).max() ** d):
        raise DegenerateLatticeError("lattice basis is singular")
    return 2.0 * np.pi * np.linalg.inv(basis).T


@dataclass(frozen=True)
class Lattice:
    """A Bravais lattice Gamma with its dual Gamma* and cell volumes."""

    basis: np.ndarray  # rows e_j
    dual: np.ndarray = field(init=False)

    def __post_init__(self):
        basis = np.atleast_2d(np.asarray(self.basis, dtype=float))
        if basis.shape[0] not in (1, 2):
            raise ValueError("only d in {1, 2} is supported")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "dual", dual_basis(basis))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def cell_volume(self) -> float:
        return abs(np.linalg.det(self.basis))

    @property
    def dual_cell_volume(self) -> float:
        return abs(np.linalg.det(self.dual))

    def dual_point(self, coeffs) -> np.ndarray:
        """Cartesian dual-lattice point for integer coefficients."""
        return np.asarray(coeffs, dtype=float) @ self.dual

    def lattice_point(self, coeffs) -> np.ndarray:
        """Cartesian lattice point for integer coefficients."""
        return np.asarray(coeffs, dtype=float) @ self.basis

    def fractional(self, xi) -> np.ndarray:
        """Coordinates t with xi = sum_j t_j e*_j."""
        return np.linalg.solve(self.dual.T, np.asarray(xi, dtype=float))


def reduce_to_cell(xi, lattice: Lattice):
    """Split xi = xi0 + gamma* with xi0 in the centered dual cell.

    Returns (xi0, gamma*, n) where n are the integer dual coefficients of
    gamma*.  The fractional coordinates of xi0 lie in [-1/2, 1/2).
    """
    xi = np.asarray(xi, dtype=float)
    t = lattice.fractional(xi)
    n = np.floor(t + 0.5).astype(int)
    gamma_star = lattice.dual_point(n)
    return xi - gamma_star, gamma_star, n


@dataclass(frozen=True)
class BZGrid:
    """Uniform tensor grid over the centered dual cell, half-open endpoints."""

    lattice: Lattice
    resolution: int

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError("resolution must be >= 2")

    @property
    def dim(self) -> int:
        return self.lattice.dim

    @property
    def axis_coords(self) -> np.ndarray:
        res = self.resolution
        return -0.5 + np.arange(res) / res

    @property
    def n_points(self) -> int:
        return self.resolution ** self.dim

    def coords(self) -> np.ndarray:
        """Fractional coordinates of every grid point, shape (n_points, d)."""
        axes = [self.axis_coords] * self.dim
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def points(self) -> np.ndarray:
        """Cartesian momenta, shape (n_points, d)."""
        return self.coords() @ self.lattice.dual

    def index_of_zero(self) -> int:
        """Flat index of the xi = 0 grid point (requires even resolution)."""
        if self.resolution % 2:
            raise ValueError("zero is a grid point only for even resolution")
        half = self.resolution // 2
        idx = 0
        for _ in range(self.dim):
            idx = idx * self.resolution + half
        return idx


def bz_grid(lattice: Lattice, resolution: int) -> BZGrid:
    return BZGrid(lattice, resolution)


@dataclass(frozen=True)
class DualShell:
    """Dual-lattice points with |gamma*| <= cutoff (Euclidean radius).

    Members are stored as integer coefficient rows; the shell is closed
    under negation by construction.
    """

    lattice: Lattice
    cutoff: float
    members: np.ndarray = field(init=False)  # (M, d) int

    def __post_init__(self):
        lat = self.lattice
        # bound on coefficients: |n| <= cutoff / (shortest dual height)
        heights = 2.0 * np.pi / np.linalg.norm(lat.basis, axis=1)
        nmax = np.ceil(self.cutoff / heights).astype(int)
        ranges = [np.arange(-m, m + 1) for m in nmax]
        mesh = np.meshgrid(*ranges, indexing="ij")
        cand = np.stack([m.ravel() for m in mesh], axis=-1)
        pts = cand @ lat.dual
        keep = np.linalg.norm(pts, axis=1) <= self.cutoff + 1e-12
        members = cand[keep]
        # deterministic order: lexicographic on coefficients
        order = np.lexsort(members.T[::-1])
        object.__setattr__(self, "members", members[order])

    @property
    def size(self) -> int:
        return self.members.shape[0]

    def points(self) -> np.ndarray:
        return self.members @ self.lattice.dual

    def index_map(self) -> dict:
        return {tuple(m): i for i, m in enumerate(self.members)}


def dual_shell(lattice: Lattice, cutoff: float) -> DualShell:
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    return DualShell(lattice, cutoff)

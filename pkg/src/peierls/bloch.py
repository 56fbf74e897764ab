"""Floquet fiber matrices in a truncated plane-wave basis and band functions.

The fiber at momentum xi acts on coefficients of Gamma-periodic functions
u = sum_{gamma*} c_{gamma*} exp(i<gamma*, y>):

    H(xi)[g, b] = kinetic(xi + g) * delta_{gb} + V_hat(g - b)

For polynomial kinds the monomials are Weyl-symmetrized at the midpoint,
H(xi)[g, b] += a_alpha_hat(g - b) * (xi + (g + b)/2)^alpha.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .lattice import BZGrid, DualShell
from .symbols import PeriodicSymbol, Polynomial


class EigensolverError(RuntimeError):
    def __init__(self, xi, message="eigensolver failed"):
        super().__init__(f"{message} at xi={np.asarray(xi)}")
        self.xi = np.asarray(xi)


@dataclass(frozen=True)
class FiberMatrix:
    xi: np.ndarray
    shell: DualShell
    entries: np.ndarray

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def assemble_fiber_matrix(
    symbol: PeriodicSymbol, xi, shell: DualShell
) -> FiberMatrix:
    if shell.size == 0:
        raise ValueError("empty dual shell")
    xi = np.asarray(xi, dtype=float).reshape(-1)
    lat = symbol.lattice
    members = shell.members  # (M, d) int
    M = members.shape[0]
    momenta = xi[None, :] + members @ lat.dual  # xi + gamma*
    H = np.zeros((M, M), dtype=complex)

    index = shell.index_map()

    def stripe(key):
        # row/column indices with member[row] - member[col] == key
        rows, cols = [], []
        karr = np.asarray(key, dtype=int)
        for g, m in enumerate(members):
            j = index.get(tuple(m - karr))
            if j is not None:
                rows.append(g)
                cols.append(j)
        return np.asarray(rows, dtype=int), np.asarray(cols, dtype=int)

    if isinstance(symbol.kind, Polynomial):
        for alpha, coeff in symbol.kind.terms.items():
            for key, val in coeff.coeffs.items():
                rows, cols = stripe(key)
                # Weyl midpoint rule: monomial evaluated at (xi_g + xi_b)/2
                mids = 0.5 * (momenta[rows] + momenta[cols])
                mono = np.ones(rows.size)
                for ax, power in enumerate(alpha):
                    if power:
                        mono = mono * mids[:, ax] ** power
                H[rows, cols] += val * mono
    else:
        H[np.diag_indices(M)] = symbol.kinetic(momenta)
        for key, val in symbol.potential.coeffs.items():
            rows, cols = stripe(key)
            H[rows, cols] += val

    return FiberMatrix(xi=xi, shell=shell, entries=H)


@dataclass(frozen=True)
class BandStructure:
    grid: BZGrid
    shell: DualShell
    bands: np.ndarray  # (n_points, n_bands), ascending per point
    vectors: np.ndarray | None = None  # (n_points, M, n_bands)

    @property
    def n_bands(self) -> int:
        return self.bands.shape[1]


def compute_bands(
    symbol: PeriodicSymbol,
    grid: BZGrid,
    shell: DualShell,
    n_bands: int,
    keep_vectors: bool = False,
) -> BandStructure:
    if n_bands > shell.size:
        raise ValueError("n_bands exceeds the plane-wave basis size")
    points = grid.points()
    bands = np.empty((points.shape[0], n_bands))
    vectors = (
        np.empty((points.shape[0], shell.size, n_bands), dtype=complex)
        if keep_vectors
        else None
    )
    for i, xi in enumerate(points):
        H = assemble_fiber_matrix(symbol, xi, shell).entries
        try:
            if keep_vectors:
                vals, vecs = scipy.linalg.eigh(
                    H, subset_by_index=[0, n_bands - 1]
                )
                vectors[i] = vecs
            else:
                vals = scipy.linalg.eigh(
                    H, eigvals_only=True, subset_by_index=[0, n_bands - 1]
                )
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
            raise EigensolverError(xi) from exc
        bands[i] = vals[:n_bands]
    return BandStructure(grid=grid, shell=shell, bands=bands, vectors=vectors)


@dataclass(frozen=True)
class BandIntervals:
    intervals: np.ndarray  # (n_bands, 2) [min, max]
    simple_flags: np.ndarray  # (n_bands,) bool
    gap_tol: float


def band_intervals(bands: BandStructure, gap_tol: float = 1e-6) -> BandIntervals:
    """Per-band [min, max] over the grid plus simplicity flags.

    A band is flagged simple when its eigenvalue stays separated from its
    neighbors by more than gap_tol at every grid point and its interval is
    disjoint from every other band interval.
    """
    vals = bands.bands
    lo = vals.min(axis=0)
    hi = vals.max(axis=0)
    n = vals.shape[1]
    flags = np.zeros(n, dtype=bool)
    for k in range(n):
        separated = True
        if k > 0 and np.min(vals[:, k] - vals[:, k - 1]) <= gap_tol:
            separated = False
        if k + 1 < n and np.min(vals[:, k + 1] - vals[:, k]) <= gap_tol:
            separated = False
        disjoint = all(
            hi[k] < lo[j] - gap_tol or lo[k] > hi[j] + gap_tol
            for j in range(n)
            if j != k
        )
        # the last computed band cannot certify disjointness from bands above
        if k == n - 1:
            disjoint = disjoint and False
        flags[k] = separated and disjoint
    return BandIntervals(
        intervals=np.stack([lo, hi], axis=-1), simple_flags=flags, gap_tol=gap_tol
    )


def garding_check(matrix: FiberMatrix, lam: float) -> float:
    """Smallest eigenvalue of H(xi) - lam (numerical lower-bound check)."""
    vals = np.linalg.eigvalsh(matrix.entries - lam * np.eye(matrix.size))
    return float(vals[0])

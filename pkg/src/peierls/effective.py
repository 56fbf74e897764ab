"""Gauge-covariant lattice reduction of a periodic effective symbol.

A dual-periodic symbol q(xi) (N x N Hermitian blocks on the momentum cell)
is expanded in Fourier hoppings q_hat_alpha and quantized on l2 of the
lattice with the magnetic line phases:

    entry(gamma, alpha) = omega_A(-gamma, -alpha) * q_hat_{gamma - alpha}.

For a constant field the phase is exp(-i (Phi_s / 2) (gamma ^ alpha)) with
Phi_s the signed flux through the unit cell and gamma ^ alpha the wedge of
the integer coordinates.  At rational flux Phi_s = 2 pi p / q the operator
commutes with the magnetic translations by (q, 0) and (0, 1) and reduces
to qN x qN Bloch matrices over a magnetic momentum cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .lattice import BZGrid, Lattice
from .magnetic import MagneticField
from .spectra import SpectrumSet


class AliasingError(ValueError):
    pass


class InconsistentSymbolError(ValueError):
    """Fourier data breaks the Hermitian-transport symmetry."""


class IrrationalFluxError(ValueError):
    pass


@dataclass(frozen=True)
class HoppingSet:
    n: int  # block size N
    dim: int
    hoppings: dict  # {tuple(int): (N, N) complex array}
    source_tag: str
    asymmetry: float = 0.0

    def block(self, alpha) -> np.ndarray:
        key = tuple(int(a) for a in alpha)
        blk = self.hoppings.get(key)
        if blk is None:
            return np.zeros((self.n, self.n), dtype=complex)
        return blk

    def resum(self, frac_coords: np.ndarray) -> np.ndarray:
        """q(xi) at fractional momenta (rows), inverting the Fourier series."""
        frac = np.atleast_2d(np.asarray(frac_coords, dtype=float))
        out = np.zeros((frac.shape[0], self.n, self.n), dtype=complex)
        for key, blk in self.hoppings.items():
            phase = np.exp(2j * np.pi * (frac @ np.asarray(key, dtype=float)))
            out += phase[:, None, None] * blk
        return out


def fourier_hoppings(
    symbol_values: np.ndarray,
    grid: BZGrid,
    radius: int,
    source_tag: str = "",
    asym_tol: float = 1e-6,
) -> HoppingSet:
    """Discrete Fourier hoppings q_hat_alpha over the momentum cell grid.

    symbol_values has shape (n_points,) for scalar symbols or
    (n_points, N, N); points are ordered as grid.points().
    """
    vals = np.asarray(symbol_values, dtype=complex)
    if vals.ndim == 1:
        vals = vals[:, None, None]
    d = grid.dim
    if grid.resolution < 2 * radius + 1:
        raise AliasingError(
            f"grid resolution {grid.resolution} cannot resolve hopping "
            f"radius {radius}"
        )
    frac = grid.coords()
    n_pts = frac.shape[0]
    hoppings = {}
    for alpha in product(range(-radius, radius + 1), repeat=d):
        a = np.asarray(alpha, dtype=float)
        phase = np.exp(-2j * np.pi * (frac @ a))
        blk = np.tensordot(phase, vals, axes=(0, 0)) / n_pts
        hoppings[alpha] = blk

    # Hermitian-transport symmetrization q_hat_{-alpha} = q_hat_alpha^*
    asym = 0.0
    fixed = {}
    for alpha, blk in hoppings.items():
        neg = tuple(-a for a in alpha)
        other = hoppings.get(neg)
        target = np.conj(other.T) if other is not None else blk
        asym = max(asym, float(np.linalg.norm(blk - target, ord=2)))
        fixed[alpha] = 0.5 * (blk + target)
    if asym > asym_tol:
        raise InconsistentSymbolError(
            f"Fourier hoppings break Hermitian transport by {asym:.3e}"
        )
    return HoppingSet(
        n=vals.shape[1], dim=d, hoppings=fixed, source_tag=source_tag,
        asymmetry=asym,
    )


def hopping_decay_fit(hops: HoppingSet, k: int = 4) -> float:
    """Smallest constant C with ||q_hat_alpha|| <= C <alpha>^{-k}."""
    best = 0.0
    for alpha, blk in hops.hoppings.items():
        weight = (1.0 + float(np.dot(alpha, alpha))) ** (k / 2.0)
        best = max(best, float(np.linalg.norm(blk, ord=2)) * weight)
    return best


def gauge_shifted_hoppings(
    hops: HoppingSet, shift, lattice: Lattice
) -> HoppingSet:
    """Hoppings after the constant gauge change A -> A + c.

    The line phase over the hop beta gains exp(-i <c, beta>), which is a
    unitary (diagonal) conjugation of the lattice operator; spectra are
    unchanged.
    """
    c = np.asarray(shift, dtype=float)
    out = {}
    for alpha, blk in hops.hoppings.items():
        beta = np.asarray(alpha, dtype=float) @ lattice.basis
        out[alpha] = blk * np.exp(-1j * float(c @ beta))
    return HoppingSet(
        n=hops.n, dim=hops.dim, hoppings=out,
        source_tag=hops.source_tag + "+shift", asymmetry=hops.asymmetry,
    )


def lattice_flux_ratio(field: MagneticField, lattice: Lattice) -> float:
    """Signed flux through the unit cell divided by 2 pi."""
    signed_area = float(np.linalg.det(lattice.basis))
    return field.strength * signed_area / (2.0 * np.pi)


def field_for_flux(flux: Fraction, lattice: Lattice) -> MagneticField:
    """Constant field whose unit-cell flux is exactly 2 pi * flux."""
    signed_area = float(np.linalg.det(lattice.basis))
    return MagneticField(b12=2.0 * np.pi * float(flux) / signed_area)


@dataclass(frozen=True)
class EffectiveLatticeOperator:
    hoppings: HoppingSet
    mode: str  # "box" or "magnetic_bloch"
    flux: Fraction  # signed unit-cell flux / 2 pi (0 for zero field)
    box_size: int | None = None
    box_matrix: np.ndarray | None = None

    def bloch_matrix(self, k) -> np.ndarray:
        return _bloch_matrix(self.hoppings, self.flux, k)


def _wedge_phase(flux_angle: float, gamma: np.ndarray, alpha: np.ndarray):
    """omega_A(-gamma, -alpha) = exp(-i (Phi_s/2) (gamma ^ alpha)) in d=2."""
    wedge = gamma[:, 0][:, None] * alpha[:, 1][None, :] - gamma[:, 1][
        :, None
    ] * alpha[:, 0][None, :]
    return np.exp(-0.5j * flux_angle * wedge)


def assemble_effective(
    hops: HoppingSet,
    mode: str,
    flux: Fraction = Fraction(0),
    box_size: int | None = None,
) -> EffectiveLatticeOperator:
    """Build the lattice operator in box or magnetic-Bloch form.

    flux is the exact signed unit-cell flux divided by 2 pi; pass a
    Fraction (rationality is part of the type, never detected from
    floats).
    """
    if not isinstance(flux, Fraction):
        raise IrrationalFluxError("flux must be an exact Fraction p/q")
    radius = max(
        (max(abs(a) for a in alpha) for alpha in hops.hoppings), default=0
    )
    if mode == "box":
        if box_size is None or box_size < radius:
            raise ValueError("box size must be at least the hopping radius")
        matrix = _box_matrix(hops, flux, box_size)
        return EffectiveLatticeOperator(
            hoppings=hops, mode=mode, flux=flux, box_size=box_size,
            box_matrix=matrix,
        )
    if mode == "magnetic_bloch":
        return EffectiveLatticeOperator(hoppings=hops, mode=mode, flux=flux)
    raise ValueError(f"unknown mode {mode!r}")


def _box_matrix(hops: HoppingSet, flux: Fraction, box_size: int) -> np.ndarray:
    d = hops.dim
    n = hops.n
    sites = np.asarray(
        list(product(range(-box_size, box_size + 1), repeat=d)), dtype=int
    )
    n_sites = sites.shape[0]
    M = np.zeros((n_sites * n, n_sites * n), dtype=complex)
    flux_angle = 2.0 * np.pi * float(flux)
    if d == 2 and flux != 0:
        omega = _wedge_phase(flux_angle, sites.astype(float), sites.astype(float))
    else:
        omega = np.ones((n_sites, n_sites))
    diff = sites[:, None, :] - sites[None, :, :]
    for alpha, blk in hops.hoppings.items():
        mask = np.all(diff == np.asarray(alpha), axis=-1)
        rows, cols = np.nonzero(mask)
        for r, c in zip(rows, cols):
            M[r * n:(r + 1) * n, c * n:(c + 1) * n] = omega[r, c] * blk
    herm = np.linalg.norm(M - np.conj(M.T), ord="fro")
    if herm > 1e-10 * max(1.0, np.linalg.norm(M, ord="fro")):
        raise InconsistentSymbolError("box operator not Hermitian")
    return M


def _bloch_matrix(hops: HoppingSet, flux: Fraction, k) -> np.ndarray:
    """Magnetic-Bloch fiber over the magnetic cell of q unit cells.

    With (T_a f)_gamma = exp(-i (Phi/2) (gamma ^ a)) f_{gamma - a}
    commuting with the operator for every a, the joint Bloch condition for
    a in {(q, 0), (0, 1)} reduces f to the values u_s = f_{(s, 0)},
    s = 0..q-1, and the operator acts by

        (H(k) u)_s = sum_beta q_hat_beta
            exp(i [ (Phi/2) s b2 + k1 m + (Phi/2) q n m + k2 n
                    - (Phi/2) s' n ]) u_{s'}

    with s' = (s - b1) mod q, m = (s - b1 - s') / q, n = -b2.  In d=1 the
    flux is zero and this is the symbol evaluated on the momentum grid.
    """
    q = flux.denominator
    n = hops.n
    d = hops.dim
    k = np.asarray(k, dtype=float).reshape(-1)
    phi = 2.0 * np.pi * float(flux)
    if d == 1:
        H = np.zeros((n, n), dtype=complex)
        for alpha, blk in hops.hoppings.items():
            H += blk * np.exp(-1j * k[0] * alpha[0])
        return H
    H = np.zeros((q * n, q * n), dtype=complex)
    for (b1, b2), blk in hops.hoppings.items():
        nn = -b2
        for s in range(q):
            sp = (s - b1) % q
            m = (s - b1 - sp) // q
            arg = (
                0.5 * phi * s * b2
                + k[0] * m
                + 0.5 * phi * q * nn * m
                + k[1] * nn
                - 0.5 * phi * sp * nn
            )
            H[s * n:(s + 1) * n, sp * n:(sp + 1) * n] += blk * np.exp(1j * arg)
    herm = np.linalg.norm(H - np.conj(H.T), ord=2)
    if herm > 1e-10 * max(1.0, np.linalg.norm(H, ord=2)):
        raise InconsistentSymbolError("magnetic-Bloch fiber not Hermitian")
    return 0.5 * (H + np.conj(H.T))


def bloch_eigenvalue_cloud(
    hops: HoppingSet, flux: Fraction, k_resolution: int
) -> np.ndarray:
    """All magnetic-Bloch eigenvalues over a uniform momentum grid."""
    d = hops.dim
    axis = 2.0 * np.pi * np.arange(k_resolution) / k_resolution
    if d == 1:
        kpts = axis[:, None]
    else:
        m1, m2 = np.meshgrid(axis, axis, indexing="ij")
        kpts = np.stack([m1.ravel(), m2.ravel()], axis=-1)
    vals = [np.linalg.eigvalsh(_bloch_matrix(hops, flux, k)) for k in kpts]
    return np.sort(np.concatenate(vals))


def subband_groups(
    hops: HoppingSet, flux: Fraction, k_resolution: int = 32,
    overlap_tol: float = 1e-9,
) -> int:
    """Number of subband groups of the magnetic-Bloch spectrum.

    Branch intervals [min_k lam_j(k), max_k lam_j(k)] are grouped only when
    they overlap by more than overlap_tol, so subbands that merely touch at
    isolated points (the central pair at even denominators) still count
    separately.
    """
    d = hops.dim
    axis = 2.0 * np.pi * np.arange(k_resolution) / k_resolution
    if d == 1:
        kpts = axis[:, None]
    else:
        m1, m2 = np.meshgrid(axis, axis, indexing="ij")
        kpts = np.stack([m1.ravel(), m2.ravel()], axis=-1)
    branches = np.stack(
        [np.linalg.eigvalsh(_bloch_matrix(hops, flux, k)) for k in kpts]
    )
    lo = branches.min(axis=0)
    hi = branches.max(axis=0)
    groups = 1
    reach = hi[0]
    for j in range(1, lo.size):
        if lo[j] >= reach - overlap_tol:
            groups += 1
        reach = max(reach, hi[j])
    return groups


def effective_spectrum(
    op: EffectiveLatticeOperator,
    window,
    merge_tol: float,
    k_resolution: int = 32,
) -> SpectrumSet:
    if op.mode == "box":
        vals = np.linalg.eigvalsh(op.box_matrix)
    else:
        vals = bloch_eigenvalue_cloud(op.hoppings, op.flux, k_resolution)
    return SpectrumSet(points=vals, window=window, merge_tol=merge_tol)


def lambda_scan(
    band_hoppings: HoppingSet,
    flux: Fraction,
    lam_grid: np.ndarray,
    k_resolution: int = 64,
) -> np.ndarray:
    """margin(lambda) = min |eig of the lattice operator of lambda - q|.

    The symbol of the effective block for a simple band is
    lambda - lambda_k(xi), so its lattice operator is lambda * I minus the
    operator of the band hoppings and the margin is the distance from
    lambda to the band-operator spectrum; the eigenvalue cloud is computed
    once.
    """
    cloud = bloch_eigenvalue_cloud(band_hoppings, flux, k_resolution)
    lam = np.asarray(lam_grid, dtype=float)
    idx = np.searchsorted(cloud, lam)
    idx_lo = np.clip(idx - 1, 0, cloud.size - 1)
    idx_hi = np.clip(idx, 0, cloud.size - 1)
    return np.minimum(
        np.abs(lam - cloud[idx_lo]), np.abs(lam - cloud[idx_hi])
    )


def reconstruct_spectrum(
    lam_grid: np.ndarray, margins: np.ndarray, tol: float, window, merge_tol: float
) -> SpectrumSet:
    """{lambda : margin(lambda) <= tol} as a SpectrumSet."""
    lam = np.asarray(lam_grid, dtype=float)
    return SpectrumSet(
        points=lam[np.asarray(margins) <= tol], window=window, merge_tol=merge_tol
    )

"""Periodic symbols: potentials in Fourier form and kinetic kinds.

A potential is stored by its Fourier coefficients V_hat(gamma*) indexed by
integer dual coefficients, with the Hermitian symmetry
V_hat(-gamma*) = conj(V_hat(gamma*)) checked at construction (real V).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .lattice import DualShell, Lattice


class AliasingError(ValueError):
    """Sample grid too coarse for the requested coefficient shell."""


@dataclass(frozen=True)
class PeriodicPotential:
    lattice: Lattice
    coeffs: dict  # {tuple(int): complex}

    def __post_init__(self):
        clean = {}
        for key, val in self.coeffs.items():
            key = tuple(int(k) for k in np.atleast_1d(key))
            if len(key) != self.lattice.dim:
                raise ValueError(f"coefficient index {key} has wrong dimension")
            if abs(val) > 0:
                clean[key] = complex(val)
        for key, val in clean.items():
            neg = tuple(-k for k in key)
            other = clean.get(neg, 0.0)
            if abs(np.conj(val) - other) > 1e-10 * max(1.0, abs(val)):
                raise ValueError(
                    f"potential is not real: coefficient at {key} breaks "
                    "Hermitian symmetry"
                )
        object.__setattr__(self, "coeffs", clean)

    def value(self, y) -> float:
        """Pointwise V(y) by Fourier resummation (vectorized over rows of y)."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        total = np.zeros(y.shape[0], dtype=complex)
        for key, val in self.coeffs.items():
            gs = self.lattice.dual_point(key)
            total += val * np.exp(1j * (y @ gs))
        out = total.real
        return out[0] if out.size == 1 else out

    def scaled(self, factor: float) -> "PeriodicPotential":
        return PeriodicPotential(
            self.lattice, {k: factor * v for k, v in self.coeffs.items()}
        )


def zero_potential(lattice: Lattice) -> PeriodicPotential:
    return PeriodicPotential(lattice, {})


def cosine_potential(lattice: Lattice, amplitude: float = 1.0) -> PeriodicPotential:
    """V(y) = 2*amplitude*cos(<e*_1, y>) (the Mathieu fixture for Gamma=2*pi*Z)."""
    d = lattice.dim
    plus = tuple([1] + [0] * (d - 1))
    minus = tuple([-1] + [0] * (d - 1))
    return PeriodicPotential(lattice, {plus: amplitude, minus: amplitude})


def separable_cosine_2d(lattice: Lattice, amplitude: float = 1.0) -> PeriodicPotential:
    """V(y) = 2a*cos(<e*_1,y>) + 2a*cos(<e*_2,y>)."""
    if lattice.dim != 2:
        raise ValueError("separable_cosine_2d requires d = 2")
    a = amplitude
    return PeriodicPotential(
        lattice, {(1, 0): a, (-1, 0): a, (0, 1): a, (0, -1): a}
    )


POTENTIAL_CATALOG: dict = {
    "zero": zero_potential,
    "cosine": cosine_potential,
    "separable_cosine_2d": separable_cosine_2d,
}


@dataclass(frozen=True)
class Nonrelativistic:
    """p0(y, eta) = |eta|^2 + V(y)."""

    order: int = 2


@dataclass(frozen=True)
class Relativistic:
    """p0(y, eta) = sqrt(1 + |eta|^2) + V(y)."""

    order: int = 1


@dataclass(frozen=True)
class Polynomial:
    """p0(y, eta) = sum_{|alpha| <= m} a_alpha(y) eta^alpha.

    terms maps multi-index tuples alpha to PeriodicPotential coefficients.
    """

    terms: dict  # {tuple(int): PeriodicPotential}
    order: int

    def __post_init__(self):
        if self.order <= 0:
            raise ValueError("polynomial order must be positive")
        for alpha in self.terms:
            if sum(alpha) > self.order:
                raise ValueError(f"term {alpha} exceeds declared order")


@dataclass(frozen=True)
class PeriodicSymbol:
    kind: object  # Nonrelativistic | Relativistic | Polynomial
    potential: PeriodicPotential

    def __post_init__(self):
        if self.order <= 0:
            raise ValueError("symbol order must be positive")

    @property
    def lattice(self) -> Lattice:
        return self.potential.lattice

    @property
    def order(self) -> int:
        return self.kind.order

    @property
    def even_in_momentum(self) -> bool:
        if isinstance(self.kind, (Nonrelativistic, Relativistic)):
            return True
        return all(sum(a) % 2 == 0 for a in self.kind.terms)

    def kinetic(self, eta) -> np.ndarray:
        """Kinetic part at momenta eta (rows), potential excluded."""
        eta = np.atleast_2d(np.asarray(eta, dtype=float))
        n2 = np.einsum("ij,ij->i", eta, eta)
        if isinstance(self.kind, Nonrelativistic):
            return n2
        if isinstance(self.kind, Relativistic):
            return np.sqrt(1.0 + n2)
        raise TypeError("polynomial kinds have no pure kinetic diagonal")


def evaluate_symbol(symbol: PeriodicSymbol, y, eta) -> float:
    """p0(y, eta) for a single position/momentum pair."""
    y = np.asarray(y, dtype=float).reshape(-1)
    eta = np.asarray(eta, dtype=float).reshape(-1)
    kind = symbol.kind
    if isinstance(kind, Polynomial):
        total = 0.0
        for alpha, coeff in kind.terms.items():
            total += coeff.value(y) * np.prod(eta ** np.asarray(alpha))
        return float(total)
    return float(symbol.kinetic(eta)[0] + symbol.potential.value(y))


def potential_fourier_coeffs(
    samples: np.ndarray, lattice: Lattice, shell: DualShell
) -> PeriodicPotential:
    """Fourier coefficients of V from uniform samples over the cell.

    samples[i1, ..., id] = V(sum_j (i_j / n_j) e_j).  The DFT normalization
    matches V_hat(gamma*) = |E|^{-1} <V, exp(i<gamma*, .>)> on the grid.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != lattice.dim:
        raise ValueError("sample array dimension must match lattice dimension")
    max_coeff = np.abs(shell.members).max(axis=0) if shell.size else np.zeros(
        lattice.dim, dtype=int
    )
    for ax, n in enumerate(samples.shape):
        if n < 2 * max_coeff[ax] + 1:
            raise AliasingError(
                f"axis {ax}: {n} samples cannot resolve coefficient "
                f"{max_coeff[ax]}"
            )
    spectrum = np.fft.fftn(samples) / samples.size
    coeffs = {}
    for member in shell.members:
        idx = tuple(int(m) % samples.shape[ax] for ax, m in enumerate(member))
        val = spectrum[idx]
        if abs(val) > 1e-14:
            coeffs[tuple(int(m) for m in member)] = complex(val)
    return PeriodicPotential(lattice, coeffs)


def sample_on_cell(func: Callable, lattice: Lattice, n: int) -> np.ndarray:
    """Sample func on the uniform n^d grid over the elementary cell."""
    d = lattice.dim
    axes = [np.arange(n) / n] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    frac = np.stack([m.ravel() for m in mesh], axis=-1)
    pos = frac @ lattice.basis
    vals = np.asarray([func(p) for p in pos], dtype=float)
    return vals.reshape((n,) * d)


def symbol_ellipticity_check(
    symbol: PeriodicSymbol, radius: float, samples: int = 16
):
    """Sample p0(y, eta)/|eta|^m over the cell and |eta| >= radius.

    Returns (ok, C) with C the smallest sampled ratio; ok is C > 0.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    lat = symbol.lattice
    d = lat.dim
    m = symbol.order
    frac = np.linspace(0.0, 1.0, samples, endpoint=False)
    if d == 1:
        ys = frac[:, None] * lat.basis[0]
        dirs = np.array([[1.0], [-1.0]])
    else:
        mesh = np.meshgrid(frac, frac, indexing="ij")
        ys = np.stack([m_.ravel() for m_ in mesh], axis=-1) @ lat.basis
        angles = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
        dirs = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    radii = radius * np.array([1.0, 1.5, 2.0, 4.0, 8.0])
    best = np.inf
    for y in ys:
        for u in dirs:
            for r in radii:
                eta = r * u
                ratio = evaluate_symbol(symbol, y, eta) / r**m
                best = min(best, ratio)
    return bool(best > 0.0), float(best)

"""Bloch bands, Grushin reduction, and gauge-covariant Peierls substitution.

Pipeline: periodic symbols -> Floquet fiber matrices and band functions ->
smooth equivariant band sections -> Grushin effective symbols -> magnetic
lattice operators (Peierls substitution) -> spectra, compared as sets
against a direct discretization of the full magnetic Hamiltonian.
"""

from . import (  # noqa: F401
    bloch,
    direct,
    effective,
    grushin,
    lattice,
    magnetic,
    section,
    spectra,
    symbols,
)

__version__ = "0.1.0"

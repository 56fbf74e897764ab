from fractions import Fraction

import numpy as np
import pytest

from peierls.bloch import compute_bands
from peierls.effective import (
    AliasingError,
    IrrationalFluxError,
    assemble_effective,
    bloch_eigenvalue_cloud,
    effective_spectrum,
    field_for_flux,
    fourier_hoppings,
    gauge_shifted_hoppings,
    hopping_decay_fit,
    lambda_scan,
    lattice_flux_ratio,
    reconstruct_spectrum,
    subband_groups,
)
from peierls.lattice import bz_grid, dual_shell
from peierls.spectra import hausdorff_distance


def test_fourier_hoppings_round_trip(mathieu_bands):
    grid = mathieu_bands.grid
    hops = fourier_hoppings(mathieu_bands.bands[:, 0], grid, radius=8)
    back = hops.resum(grid.coords())[:, 0, 0].real
    assert np.max(np.abs(back - mathieu_bands.bands[:, 0])) < 1e-8
    assert hops.asymmetry < 1e-10


def test_fourier_hoppings_aliasing_guard(mathieu_bands):
    with pytest.raises(AliasingError):
        fourier_hoppings(mathieu_bands.bands[:, 0], mathieu_bands.grid, radius=40)


def test_hopping_decay_fit_positive(mathieu_bands):
    hops = fourier_hoppings(mathieu_bands.bands[:, 0], mathieu_bands.grid, 8)
    c = hopping_decay_fit(hops, k=4)
    assert 0.0 < c < 10.0


def test_flux_ratio_and_field_round_trip(lat2):
    flux = Fraction(3, 7)
    field = field_for_flux(flux, lat2)
    assert abs(lattice_flux_ratio(field, lat2) - float(flux)) < 1e-14


def test_irrational_flux_rejected(nn_hoppings):
    with pytest.raises(IrrationalFluxError):
        assemble_effective(nn_hoppings, "magnetic_bloch", 0.5)


def test_box_size_guard(nn_hoppings):
    with pytest.raises(ValueError, match="box size"):
        assemble_effective(nn_hoppings, "box", Fraction(0), box_size=0)


def test_zero_flux_bloch_matrix_is_symbol(nn_hoppings):
    op = assemble_effective(nn_hoppings, "magnetic_bloch", Fraction(0))
    k = np.array([0.7, -1.2])
    val = op.bloch_matrix(k)[0, 0]
    assert abs(val - (-2 * np.cos(0.7) - 2 * np.cos(1.2))) < 1e-12


def test_hofstadter_half_flux_endpoints(nn_hoppings):
    cloud = bloch_eigenvalue_cloud(nn_hoppings, Fraction(1, 2), k_resolution=16)
    assert abs(cloud.min() + 2.0 * np.sqrt(2.0)) < 1e-10
    assert abs(cloud.max() - 2.0 * np.sqrt(2.0)) < 1e-10


def test_subband_counts(nn_hoppings):
    assert subband_groups(nn_hoppings, Fraction(1, 3), k_resolution=16) == 3
    assert subband_groups(nn_hoppings, Fraction(1, 4), k_resolution=16) == 4


def test_box_and_bloch_spectra_agree_at_zero_flux(nn_hoppings):
    win = (-4.5, 4.5)
    box = assemble_effective(nn_hoppings, "box", Fraction(0), box_size=14)
    s_box = effective_spectrum(box, win, merge_tol=0.25)
    blo = assemble_effective(nn_hoppings, "magnetic_bloch", Fraction(0))
    s_blo = effective_spectrum(blo, win, merge_tol=0.25, k_resolution=48)
    d, flagged = hausdorff_distance(s_box, s_blo)
    assert not flagged and d < 0.3


def test_constant_gauge_shift_preserves_box_spectrum(nn_hoppings, lat2):
    shifted = gauge_shifted_hoppings(nn_hoppings, [0.3, -0.8], lat2)
    a = assemble_effective(nn_hoppings, "box", Fraction(1, 3), box_size=6)
    b = assemble_effective(shifted, "box", Fraction(1, 3), box_size=6)
    va = np.sort(np.linalg.eigvalsh(a.box_matrix))
    vb = np.sort(np.linalg.eigvalsh(b.box_matrix))
    assert np.max(np.abs(va - vb)) < 1e-9


def test_lambda_scan_margin_matches_band_distance(mathieu, lat1):
    grid = bz_grid(lat1, 64)
    shell = dual_shell(lat1, 8.0)
    bands = compute_bands(mathieu, grid, shell, 1)
    hops = fourier_hoppings(bands.bands[:, 0], grid, radius=8)
    lo, hi = bands.bands[:, 0].min(), bands.bands[:, 0].max()
    lam_grid = np.linspace(lo - 0.2, hi + 0.2, 101)
    margins = lambda_scan(hops, Fraction(0), lam_grid, k_resolution=256)
    inside = (lam_grid >= lo) & (lam_grid <= hi)
    assert np.max(margins[inside]) < 2e-3
    assert margins[0] > 0.15 and margins[-1] > 0.15
    rec = reconstruct_spectrum(
        lam_grid, margins, tol=5e-3, window=(lo - 0.2, hi + 0.2), merge_tol=5e-3
    )
    iv = rec.merged_intervals
    assert iv.shape[0] == 1
    assert abs(iv[0, 0] - lo) < 1e-2 and abs(iv[0, 1] - hi) < 1e-2

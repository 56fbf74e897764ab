import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from peierls.spectra import (
    EmptySpectraError,
    SpectrumSet,
    detect_gaps,
    from_intervals,
    hausdorff_distance,
    lipschitz_fit,
)

WIN = (0.0, 10.0)


def _points(pts, tol=0.1):
    return SpectrumSet(points=np.asarray(pts, dtype=float), window=WIN, merge_tol=tol)


def test_merge_and_clip():
    s = _points([3.0, 3.05, 3.11, 5.0, -1.0, 12.0])
    assert np.allclose(s.merged_intervals, [[3.0, 3.11], [5.0, 5.0]])
    assert s.points.min() >= WIN[0] and s.points.max() <= WIN[1]


def test_from_intervals_round_trip():
    s = from_intervals([(1.0, 2.0), (4.0, 4.5)], WIN, merge_tol=0.05)
    assert np.allclose(s.merged_intervals, [[1.0, 2.0], [4.0, 4.5]], atol=1e-12)


def test_hausdorff_known_values():
    a = from_intervals([(1.0, 2.0)], WIN, 0.05)
    b = from_intervals([(1.5, 2.7)], WIN, 0.05)
    d, flagged = hausdorff_distance(a, b)
    assert not flagged
    assert abs(d - 0.7) < 1e-12
    # point vs interval: farthest endpoint wins
    c = from_intervals([(5.0, 5.0)], WIN, 0.05)
    d2, _ = hausdorff_distance(a, c)
    assert abs(d2 - 4.0) < 1e-12


def test_hausdorff_sees_interior_gaps():
    # equal hulls, but b has a hole facing the middle of a
    a = from_intervals([(0.0, 4.0)], WIN, 0.05)
    b = from_intervals([(0.0, 1.0), (3.0, 4.0)], WIN, 0.05)
    d, _ = hausdorff_distance(a, b)
    assert abs(d - 1.0) < 1e-12


def test_hausdorff_empty_conventions():
    empty = _points([])
    full = from_intervals([(2.0, 3.0)], WIN, 0.05)
    d, flagged = hausdorff_distance(empty, full)
    assert flagged and d == WIN[1] - WIN[0]
    with pytest.raises(EmptySpectraError):
        hausdorff_distance(empty, _points([]))


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(0.0, 10.0), min_size=1, max_size=8),
    st.lists(st.floats(0.0, 10.0), min_size=1, max_size=8),
    st.lists(st.floats(0.0, 10.0), min_size=1, max_size=8),
)
def test_hausdorff_metric_axioms(xs, ys, zs):
    a, b, c = _points(xs, 0.2), _points(ys, 0.2), _points(zs, 0.2)
    dab, _ = hausdorff_distance(a, b)
    dba, _ = hausdorff_distance(b, a)
    dac, _ = hausdorff_distance(a, c)
    dcb, _ = hausdorff_distance(c, b)
    daa, _ = hausdorff_distance(a, a)
    assert daa <= 1e-12
    assert abs(dab - dba) <= 1e-12
    assert dab <= dac + dcb + 1e-12


def test_detect_gaps():
    s = from_intervals([(1.0, 2.0), (4.0, 6.0)], WIN, 0.05)
    gaps = detect_gaps(s)
    assert np.allclose(gaps, [(0.0, 1.0), (2.0, 4.0), (6.0, 10.0)])


def test_lipschitz_fit_recovers_linear_law():
    pairs = [(0.08, 0.16), (0.04, 0.08), (0.02, 0.04)]
    rep = lipschitz_fit(pairs)
    assert abs(rep.fitted_slope - 2.0) < 1e-12
    assert rep.residual < 1e-12
    assert abs(rep.max_ratio - 2.0) < 1e-12
    with pytest.raises(ValueError):
        lipschitz_fit(pairs[:2])

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from salloss.core import (
    FixationSet,
    SaliencyError,
    distribution_backward,
    fixation_map,
    normalize_distribution,
    normalize_unit,
    stats,
)

maps = arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
              elements=st.floats(0, 100, allow_nan=False))


def test_normalize_unit_examples():
    np.testing.assert_array_equal(normalize_unit([2.0, 4.0, 6.0]), [[0.0, 0.5, 1.0]])
    np.testing.assert_array_equal(normalize_unit([5.0, 5.0, 5.0]), [[0.0, 0.0, 0.0]])
    np.testing.assert_array_equal(normalize_unit([0.0, 0.5, 1.0]), [[0.0, 0.5, 1.0]])


@given(maps)
def test_normalize_unit_idempotent(m):
    once = normalize_unit(m)
    if m.max() > m.min():
        np.testing.assert_allclose(normalize_unit(once), once, atol=1e-12)


def test_normalize_distribution_examples(rng):
    np.testing.assert_allclose(normalize_distribution([1.0, 3.0]), [[0.25, 0.75]], atol=1e-8)
    np.testing.assert_array_equal(normalize_distribution([0.0, 0.0]), [[0.5, 0.5]])
    m = rng.random((4, 4))
    p = normalize_distribution(m)
    total = 0.0
    for v in p.ravel():
        total += v
    assert abs(total - 1.0) <= 1e-9
    assert np.argmax(p) == np.argmax(m)


@given(maps)
def test_normalize_distribution_positive_unit_sum(m):
    p = normalize_distribution(m)
    assert abs(p.sum() - 1.0) <= 1e-9
    assert np.all(p > 0)


def test_distribution_backward_matches_finite_differences(rng):
    x = rng.uniform(0.1, 1.0, (3, 3))
    w = rng.normal(size=(3, 3))
    g = distribution_backward(x, w)
    h = 1e-6
    for i in range(9):
        e = np.zeros(9)
        e[i] = h
        e = e.reshape(3, 3)
        num = (np.sum(w * normalize_distribution(x + e)) - np.sum(w * normalize_distribution(x - e))) / (2 * h)
        assert g.flat[i] == pytest.approx(num, rel=1e-6, abs=1e-10)


def test_stats_examples(rng):
    s = stats([0.0, 1.0, 0.0, 1.0])
    assert (s.mean, s.std, s.min, s.max, s.sum) == (0.5, 0.5, 0.0, 1.0, 2.0)
    assert stats([3.0, 3.0, 3.0]).std == 0.0
    m = rng.random((8, 8))
    vals = m.ravel().tolist()
    mean = sum(vals) / len(vals)
    std = (sum((v - mean) ** 2 for v in vals) / len(vals)) ** 0.5
    s = stats(m)
    assert s.mean == pytest.approx(mean, abs=1e-12)
    assert s.std == pytest.approx(std, abs=1e-12)
    assert s.min <= s.mean <= s.max


@settings(max_examples=50)
@given(maps, st.floats(-5, 5), st.floats(0, 10))
def test_stats_affine_scaling(m, a, b):
    shifted = np.abs(a) * m + b
    assert stats(shifted).std == pytest.approx(abs(a) * stats(m).std, abs=1e-9 * (1 + np.abs(shifted).max()))


def test_fixation_map_examples():
    np.testing.assert_array_equal(fixation_map(FixationSet(((0, 0),), (2, 2))).ravel(), [1, 0, 0, 0])
    np.testing.assert_array_equal(fixation_map(FixationSet((), (2, 2))).ravel(), [0, 0, 0, 0])
    np.testing.assert_array_equal(fixation_map(FixationSet(((1, 0), (0, 1)), (2, 2))).ravel(), [0, 1, 1, 0])


def test_fixation_set_validation():
    with pytest.raises(SaliencyError):
        FixationSet(((2, 0),), (2, 2))
    with pytest.raises(SaliencyError):
        FixationSet(((0, -1),), (2, 2))
    assert len(FixationSet(((1, 1), (1, 1)), (2, 2))) == 1


def test_invalid_maps_rejected():
    with pytest.raises(SaliencyError):
        stats([[np.nan, 1.0]])
    with pytest.raises(SaliencyError):
        stats([[-1.0, 1.0]])

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.lib.stride_tricks import sliding_window_view
from numpy.testing import assert_allclose, assert_array_equal

from bimosum.errors import ConfigurationError, DegenerateWindowError, WindowRangeError
from bimosum.moments import (
    compute_moments,
    rho_from_parts,
    rho_hat,
    validate_windows,
    window_indices,
)


def naive_moments(x, h):
    """Two-pass moments of every window of length ``h`` (oracle)."""
    w = sliding_window_view(np.asarray(x, dtype=float), h)
    mean = w.mean(axis=1)
    d = w - mean[:, None]
    m2 = (d**2).mean(axis=1)
    m3 = (d**3).mean(axis=1)
    m4 = (d**4).mean(axis=1)
    return np.stack([mean, m2, m3, m4, m4 - m2**2])


def rel_err(got, want, scale):
    """Error relative to ``max(|want|, scale)`` per moment order."""
    return np.abs(got - want) / np.maximum(np.abs(want), scale)


def moment_scales(x):
    sd = float(np.std(x)) or 1.0
    return np.array([sd, sd**2, sd**3, sd**4, sd**4])[:, None]


def test_window_indices():
    left, right = window_indices(5, 3)
    assert list(left) == [3, 4, 5]
    assert list(right) == [6, 7, 8]
    with pytest.raises(WindowRangeError):
        window_indices(2, 3)
    with pytest.raises(WindowRangeError):
        window_indices(8, 3, T=10)
    window_indices(7, 3, T=10)


def test_validate_windows():
    assert validate_windows([10, 20], 100) == (10, 20)
    for bad in ([], [20, 10], [10, 10], [1, 10], [10, 51]):
        with pytest.raises(ConfigurationError):
            validate_windows(bad, 100)


def test_left_right_alignment():
    x = np.arange(1.0, 21.0)
    m = compute_moments(x, 4)
    assert_array_equal(m.t, np.arange(4, 17))
    # 1-based t=4: left window holds values 1..4, right 5..8
    assert m.left.mean[0] == pytest.approx(2.5)
    assert m.right.mean[0] == pytest.approx(6.5)
    left, right = m.at(10)
    assert left["mean"] == pytest.approx(8.5)
    assert right["mean"] == pytest.approx(12.5)


@pytest.mark.parametrize("h", [2, 5, 32, 33, 137])
def test_matches_naive(rng, h):
    x = rng.normal(3.0, 2.0, 1500)
    m = compute_moments(x, h)
    want = naive_moments(x, h)
    assert np.max(rel_err(m.stats, want, moment_scales(x))) < 1e-10


def test_refresh_does_not_matter(rng):
    x = rng.gamma(0.5, 2.0, 5000) + 100.0
    a = compute_moments(x, 100, refresh=7).stats
    b = compute_moments(x, 100, refresh=100000).stats
    assert np.max(rel_err(a, b, moment_scales(x))) < 1e-9


def test_large_offset_is_stable(rng):
    x = 1e6 + rng.normal(0, 1, 3000)
    m = compute_moments(x, 200)
    want = naive_moments(x, 200)
    assert_allclose(m.stats[1], want[1], rtol=1e-7)
    assert_allclose(m.stats[4], want[4], rtol=1e-5)


def test_constant_windows_are_exactly_zero():
    x = np.concatenate([np.full(300, 2.5), np.arange(300.0)])
    m = compute_moments(x, 50)
    assert np.all(m.stats[1, :251] == 0.0)
    assert np.all(m.stats[4, :251] == 0.0)
    assert np.all(m.stats[1, 300:] > 0)


def test_h2_has_no_fourth_moment_spread(rng):
    # two points always give mu4 == sigma^4
    m = compute_moments(rng.normal(size=50), 2)
    assert np.all(m.stats[4] == 0.0)


def test_rho_hat_and_degenerate():
    x = np.r_[np.zeros(10), np.zeros(10)]
    m = compute_moments(x, 5)
    with pytest.raises(DegenerateWindowError):
        rho_hat(m, 10)
    y = np.random.default_rng(3).exponential(1.0, 400)
    r = rho_hat(compute_moments(y, 100), 200)
    assert -1.0 < r < 1.0


def test_rho_clamp():
    r = rho_from_parts(1.0, 1.0, 1.0, 0.0, 1.0, 0.0)
    assert r == pytest.approx(1.0 - 1e-6)
    assert np.isnan(rho_from_parts(0.0, 0.0, 0.0, 0.0, 0.0, 0.0))


def test_raw_moments(rng):
    x = rng.normal(1.0, 2.0, 400)
    m = compute_moments(x, 40)
    w = sliding_window_view(x, 40)
    for k in (1, 2, 3, 4):
        assert_allclose(m.left.raw(k), (w**k).mean(axis=1)[: m.t.size], rtol=1e-9)


@settings(max_examples=60, deadline=None)
@given(
    T=st.integers(8, 400),
    h_frac=st.floats(0.05, 0.5),
    loc=st.floats(-1e3, 1e3),
    scale=st.floats(1e-2, 1e2),
    seed=st.integers(0, 2**32 - 1),
)
def test_property_oracle(T, h_frac, loc, scale, seed):
    h = max(2, min(T // 2, int(T * h_frac)))
    x = loc + scale * np.random.default_rng(seed).standard_t(5, T)
    m = compute_moments(x, h)
    want = naive_moments(x, h)
    # positive spreads, oracle agreement relative to the data scale
    assert np.all(m.stats[1] >= 0)
    assert np.max(rel_err(m.stats, want, moment_scales(x))) < 1e-8


@settings(max_examples=30, deadline=None)
@given(shift=st.floats(-100, 100), seed=st.integers(0, 1000))
def test_property_shift_invariance(shift, seed):
    x = np.random.default_rng(seed).normal(size=300)
    a = compute_moments(x, 40).stats
    b = compute_moments(x + shift, 40).stats
    assert_allclose(b[0], a[0] + shift, atol=1e-9 * (1 + abs(shift)))
    assert_allclose(b[1:], a[1:], atol=1e-8 * (1 + abs(shift)) ** 2)

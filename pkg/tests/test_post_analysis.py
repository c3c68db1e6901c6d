from datetime import date, timedelta

import numpy as np
import pytest

from bubblescan.errors import IndexUndefined, WindowTooSparse
from bubblescan.fitting import DEFAULT_FIT, FitResult
from bubblescan.lppl import DEFAULT_FILTER, LpplParams
from bubblescan.market_data import AssetMeta, PriceSeries
from bubblescan.post_analysis import bubble_index, max_drawdown, sg_derivative, up_day_fraction
from bubblescan.scanner import DEFAULT_GRID, ScanReport, WindowFailure

from conftest import START, series_from


def brute_drawdown(closes):
    best = 0.0
    for i in range(len(closes)):
        for j in range(i, len(closes)):
            best = max(best, (closes[i] - closes[j]) / closes[i])
    return best


def test_drawdown_examples():
    r = max_drawdown(series_from([100.0, 120.0, 90.0, 110.0]), START)
    assert (r.peak, r.trough, r.depth_fraction) == (120.0, 90.0, 0.25)
    assert r.peak_date == START + timedelta(days=1)
    assert r.trough_date == START + timedelta(days=2)
    r = max_drawdown(series_from([100.0, 80.0, 130.0, 70.0]), START)
    assert (r.peak, r.trough) == (130.0, 70.0)
    assert r.depth_fraction == pytest.approx(60 / 130, abs=1e-15)


def test_drawdown_monotone_increasing():
    r = max_drawdown(series_from(np.arange(1.0, 20.0)), START)
    assert r.depth_fraction == 0.0
    assert r.peak_date == r.trough_date == START


def test_drawdown_from_date():
    s = series_from([200.0, 100.0, 50.0, 60.0, 55.0])
    r = max_drawdown(s, START + timedelta(days=3))
    assert (r.peak, r.trough) == (60.0, 55.0)
    with pytest.raises(WindowTooSparse):
        max_drawdown(s, START + timedelta(days=4))


def test_drawdown_matches_brute_force(rng):
    for _ in range(1000):
        n = int(rng.integers(2, 60))
        closes = np.exp(rng.normal(0, 0.05, size=n).cumsum()) * 100
        r = max_drawdown(series_from(closes), START)
        assert r.depth_fraction == brute_drawdown(closes)
        assert 0 <= r.depth_fraction < 1
        assert r.peak_date <= r.trough_date


def test_drawdown_scale_invariant(rng):
    for _ in range(100):
        closes = np.exp(rng.normal(0, 0.05, size=50).cumsum())
        k = rng.uniform(0.01, 100)
        a = max_drawdown(series_from(closes), START)
        b = max_drawdown(series_from(closes * k), START)
        assert b.depth_fraction == pytest.approx(a.depth_fraction, rel=1e-12, abs=1e-15)
        assert (a.peak_date, a.trough_date) == (b.peak_date, b.trough_date)


def closes_from_moves(moves, start=100.0):
    return np.concatenate(([start], start + np.cumsum(moves)))


def test_up_fraction_all_up():
    m = up_day_fraction(series_from(np.arange(1.0, 32.0)), 30)
    assert list(m.values) == [1.0]


def test_up_fraction_alternating():
    m = up_day_fraction(series_from(closes_from_moves([1, -1] * 30)), 30)
    assert np.all(m.values == 0.5)
    assert len(m) == 31


def test_up_fraction_zero_returns_are_not_up(rng):
    moves = np.array([1.0] * 18 + [-1.0] * 9 + [0.0] * 3)
    rng.shuffle(moves)
    m = up_day_fraction(series_from(closes_from_moves(moves)), 30)
    assert list(m.values) == [0.6]


def test_up_fraction_hand_counts(rng):
    for window in (30, 60, 90):
        moves = rng.choice([-1.0, 0.0, 1.0], size=200)
        s = series_from(closes_from_moves(moves, 500.0))
        m = up_day_fraction(s, window)
        assert m.dates == s.dates[window:]
        for k in range(len(m)):
            # returns ending at observations k+1 .. k+window
            assert m.values[k] == sum(1 for x in moves[k:k + window] if x > 0) / window


def test_up_fraction_too_short():
    with pytest.raises(WindowTooSparse):
        up_day_fraction(series_from(np.arange(1.0, 31.0)), 30)


@pytest.mark.parametrize("window", [120, 180])
def test_sg_cubic(window):
    tau = np.arange(0, 401, dtype=float)
    s = series_from((tau / 100 + 1) ** 3)
    m = sg_derivative(s, window)
    centers = np.array([(d - START).days for d in m.dates], dtype=float)
    assert centers[0] == window / 2 and centers[-1] == 400 - window / 2
    np.testing.assert_allclose(m.values, 3 * (centers / 100 + 1) ** 2 / 100, rtol=0, atol=1e-8)


@pytest.mark.parametrize("window", [120, 180])
def test_sg_random_cubics(rng, window):
    tau = np.arange(0, 301, dtype=float)
    for _ in range(20):
        c = rng.uniform(-1, 1, size=4)
        c[0] = 10.0
        x = tau / 300
        s = series_from(c[0] + c[1] * x + c[2] * x**2 + c[3] * x**3)
        m = sg_derivative(s, window)
        xc = np.array([(d - START).days for d in m.dates], dtype=float) / 300
        expected = (c[1] + 2 * c[2] * xc + 3 * c[3] * xc**2) / 300
        np.testing.assert_allclose(m.values, expected, rtol=0, atol=1e-8)


def test_sg_constant_and_linear():
    tau = np.arange(0, 300, dtype=float)
    assert np.allclose(sg_derivative(series_from(np.full(300, 7.0)), 120).values, 0.0, atol=1e-12)
    np.testing.assert_allclose(sg_derivative(series_from(2 * tau + 5), 180).values, 2.0, atol=1e-10)


def test_sg_irregular_sampling_and_gaps():
    # weekly sampling: 120-day windows hold 17 points, 14-day windows too few
    days = np.arange(0, 400, 7)
    dates = tuple(START + timedelta(days=int(k)) for k in days)
    s = PriceSeries(AssetMeta("t", "T", "Y"), dates, 2.0 * days + 5)
    m = sg_derivative(s, 120)
    np.testing.assert_allclose(m.values, 2.0, atol=1e-10)
    assert m.gaps == ()
    sparse = sg_derivative(s, 14)
    assert len(sparse) == 0 and len(sparse.gaps) > 0


def _report(flags, t2=date(2011, 1, 1)):
    fits = []
    windows = []
    for i, q in enumerate(flags):
        w = (t2 - timedelta(days=100 + 7 * i), t2)
        windows.append(w)
        p = LpplParams(1.0, -0.1, 0.01, 0.5, 8.0, 0.0, 500.0)
        fits.append(FitResult(p, 0.1, 0.01, 100, w, True, q))
    # an older window that must not count
    old = (t2 - timedelta(days=200), t2 - timedelta(days=7))
    windows.append(old)
    fits.append(FitResult(LpplParams(1.0, -0.1, 0.01, 0.5, 8.0, 0.0, 500.0), 0.1, 0.01, 100, old, True, True))
    return ScanReport(AssetMeta("t", "T", "Y"), DEFAULT_GRID, DEFAULT_FIT, DEFAULT_FILTER,
                      t2 - timedelta(days=400), t2, tuple(windows), tuple(fits), ())


def test_bubble_index_counts():
    assert bubble_index(_report([True] * 7 + [False] * 3)) == 0.7
    assert bubble_index(_report([True] * 4)) == 1.0
    assert bubble_index(_report([False] * 4)) == 0.0


def test_bubble_index_undefined():
    base = _report([])
    t2 = base.last_date
    w = (t2 - timedelta(days=100), t2)
    report = ScanReport(base.meta, base.grid, base.fit_config, base.filter, base.origin, t2,
                        base.windows + (w,), base.fits, (WindowFailure(w, "FitFailed", "no start converged"),))
    with pytest.raises(IndexUndefined):
        bubble_index(report)

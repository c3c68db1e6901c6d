import math
from datetime import date, timedelta

import numpy as np
import pytest

from bubblescan.lppl import LpplParams, generate_synthetic
from bubblescan.market_data import AssetMeta, PriceSeries

START = date(2009, 1, 5)


def daily_dates(n_days, start=START):
    """Consecutive calendar days covering a span of ``n_days`` days."""
    return [start + timedelta(days=i) for i in range(n_days + 1)]


def weekday_dates(n_days, start=START):
    return [d for d in daily_dates(n_days, start) if d.weekday() < 5]


def bubble_params(rng, last_tau, tc_offset=(20.0, 60.0), rise=(0.5, 1.5), osc=(0.05, 0.15),
                  alpha=(0.25, 0.75), omega=(6.0, 13.0)):
    """Random LPPL bubble ending ``tc_offset`` days after ``last_tau``.

    ``B`` is scaled so the log-price rises by ``rise`` over the span, and ``C``
    is a fraction ``osc`` of ``|B|``.
    """
    a = rng.uniform(*alpha)
    w = rng.uniform(*omega)
    tc = last_tau + rng.uniform(*tc_offset)
    total = rng.uniform(*rise)
    B = -total / (tc**a - (tc - last_tau) ** a)
    C = rng.uniform(*osc) * abs(B)
    return LpplParams.canonical(math.log(100.0), B, C, a, w, rng.uniform(0, 2 * math.pi), tc)


def series_from(closes, start=START, meta=None):
    dates = [start + timedelta(days=i) for i in range(len(closes))]
    return PriceSeries(meta or AssetMeta("test", "TST", "Y"), tuple(dates), closes)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def noiseless_bubble():
    """400-day daily series, tc 40 days after the last observation."""
    params = LpplParams.canonical(5.0, -0.05, 0.005, 0.4, 8.0, 1.0, 440.0)
    series = generate_synthetic(params, daily_dates(400))
    return params, series


ACCEPTANCE_LINES = []


def record_acceptance(number, ok, detail):
    line = f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

"""Measures applied to prices after the forecast date: drawdown, fraction of
up days, Savitzky-Golay growth rate, and a provisional bubble index."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import Optional

import numpy as np

from .errors import IndexUndefined, WindowTooSparse
from .market_data import PriceSeries, ReturnSign, daily_return_signs
from .scanner import ScanReport

UP_DAY_WINDOWS = (30, 60, 90)
SG_WINDOWS = (120, 180)
SG_ORDER = 3
SG_MIN_POINTS = 8
# the bubble index is not a settled measure; bump when its definition changes
BUBBLE_INDEX_VERSION = "provisional-1: qualified / converged fits on windows ending at the latest t2"


@dataclass(frozen=True)
class DrawdownReport:
    peak_date: date
    trough_date: date
    peak: float
    trough: float
    depth_fraction: float
    window: tuple

    @property
    def drop(self) -> float:
        return self.peak - self.trough

    def as_dict(self) -> dict:
        return {
            "peak_date": self.peak_date.isoformat(),
            "trough_date": self.trough_date.isoformat(),
            "peak": self.peak,
            "trough": self.trough,
            "drop": self.drop,
            "depth_fraction": self.depth_fraction,
            "window": [self.window[0].isoformat(), self.window[1].isoformat()],
        }


@dataclass(frozen=True)
class MeasureSeries:
    """Dated values of one measure; ``gaps`` lists dates that were skipped."""

    name: str
    dates: tuple
    values: np.ndarray
    gaps: tuple = ()

    def __len__(self):
        return len(self.dates)

    def to_csv(self) -> bytes:
        lines = ["date,value"]
        lines.extend(f"{d.isoformat()},{float(v)!r}" for d, v in zip(self.dates, self.values))
        return ("\n".join(lines) + "\n").encode("utf-8")


def max_drawdown(series: PriceSeries, start: date, end: Optional[date] = None) -> DrawdownReport:
    """Largest fractional peak-to-trough drop among observations in [start, end].

    Ties go to the earliest peak, then the earliest trough.
    """
    idx = [i for i, d in enumerate(series.dates) if d >= start and (end is None or d <= end)]
    if len(idx) < 2:
        raise WindowTooSparse(f"need at least 2 observations from {start}, got {len(idx)}")
    closes = series.closes[idx[0]:idx[-1] + 1]
    dates = series.dates[idx[0]:idx[-1] + 1]

    peak_i = 0
    best = (-1.0, 0, 0)
    for j in range(closes.shape[0]):
        if closes[j] > closes[peak_i]:
            peak_i = j
        depth = (closes[peak_i] - closes[j]) / closes[peak_i]
        if depth > best[0] or (depth == best[0] and peak_i < best[1]):
            best = (depth, peak_i, j)
    depth, i, j = best
    return DrawdownReport(
        peak_date=dates[i],
        trough_date=dates[j],
        peak=float(closes[i]),
        trough=float(closes[j]),
        depth_fraction=float(depth),
        window=(dates[0], dates[-1]),
    )


def up_day_fraction(series: PriceSeries, window_days: int) -> MeasureSeries:
    """Share of UP returns among the trailing ``window_days`` returns.

    Windows count observations, not calendar days; zero returns count as not up.
    """
    if window_days < 1:
        raise ValueError("window_days must be >= 1")
    if len(series) <= window_days:
        raise WindowTooSparse(f"need more than {window_days} observations, got {len(series)}")
    up = np.array([s is ReturnSign.UP for s in daily_return_signs(series)], dtype=float)
    csum = np.concatenate(([0.0], np.cumsum(up)))
    counts = csum[window_days:] - csum[:-window_days]
    return MeasureSeries(
        name=f"up_fraction_{window_days}",
        dates=series.dates[window_days:],
        values=counts / window_days,
    )


def sg_derivative(series: PriceSeries, window_days: int) -> MeasureSeries:
    """First derivative (price units per day) from a centred local cubic fit.

    For each observation whose ``[tau - w/2, tau + w/2]`` neighbourhood lies
    inside the data, a cubic is fit by least squares to the observations in
    that neighbourhood and differentiated at the centre. Irregular spacing is
    handled directly. Centres with fewer than ``SG_MIN_POINTS`` points are
    reported in ``gaps``.
    """
    if window_days < 1:
        raise ValueError("window_days must be >= 1")
    origin = series.first_date
    tau = np.array([(d - origin).days for d in series.dates], dtype=float)
    half = window_days / 2.0
    if tau[-1] - tau[0] < window_days:
        raise WindowTooSparse(f"series spans {tau[-1]:g} days, window needs {window_days}")
    closes = series.closes
    out_dates, out_values, gaps = [], [], []
    for k, t0 in enumerate(tau):
        if t0 - half < tau[0] or t0 + half > tau[-1]:
            continue
        lo = np.searchsorted(tau, t0 - half, side="left")
        hi = np.searchsorted(tau, t0 + half, side="right")
        if hi - lo < SG_MIN_POINTS:
            gaps.append(series.dates[k])
            continue
        x = (tau[lo:hi] - t0) / half
        vander = np.vander(x, SG_ORDER + 1, increasing=True)
        coef = np.linalg.lstsq(vander, closes[lo:hi], rcond=None)[0]
        out_dates.append(series.dates[k])
        out_values.append(coef[1] / half)
    return MeasureSeries(
        name=f"sg_derivative_{window_days}",
        dates=tuple(out_dates),
        values=np.array(out_values, dtype=float),
        gaps=tuple(gaps),
    )


def bubble_index(scan: ScanReport) -> float:
    """Provisional: fraction of converged fits ending at the latest t2 that qualify."""
    if not scan.windows:
        raise IndexUndefined("scan enumerated no windows")
    latest = scan.latest_t2
    fits = [f for f in scan.fits if f.window[1] == latest and f.converged]
    if not fits:
        raise IndexUndefined(f"no converged fit on windows ending {latest}")
    return sum(1 for f in fits if f.qualified) / len(fits)

"""Daily close series: CSV ingestion, validation, slicing, log transform."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from datetime import date
from typing import Sequence

import numpy as np

from .errors import DuplicateDate, NonPositivePrice, ParseError, WindowTooSparse

CSV_HEADER = ("date", "close")


@dataclass(frozen=True)
class AssetMeta:
    name: str = ""
    ticker: str = ""
    source: str = ""
    category: str = "Index"


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Strictly dated, strictly positive daily closes of one asset."""

    meta: AssetMeta
    dates: tuple
    closes: np.ndarray

    def __post_init__(self):
        dates = tuple(self.dates)
        closes = _frozen(self.closes)
        if len(dates) != closes.shape[0]:
            raise ValueError("dates and closes differ in length")
        if len(dates) < 2:
            raise WindowTooSparse(f"a price series needs at least 2 observations, got {len(dates)}")
        for prev, cur in zip(dates, dates[1:]):
            if cur == prev:
                raise DuplicateDate(f"duplicate date {cur.isoformat()}")
            if cur < prev:
                raise ValueError("dates must be strictly increasing")
        if not np.all(np.isfinite(closes)) or np.any(closes <= 0):
            raise NonPositivePrice("closes must be finite and > 0")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "closes", closes)

    def __len__(self):
        return len(self.dates)

    def __eq__(self, other):
        if not isinstance(other, PriceSeries):
            return NotImplemented
        return (
            self.meta == other.meta
            and self.dates == other.dates
            and np.array_equal(self.closes, other.closes)
        )

    __hash__ = None

    @property
    def first_date(self) -> date:
        return self.dates[0]

    @property
    def last_date(self) -> date:
        return self.dates[-1]

    @property
    def span_days(self) -> int:
        return (self.dates[-1] - self.dates[0]).days


@dataclass(frozen=True, eq=False)
class LogSeries:
    """ln(close) against ``tau``, whole calendar days since ``origin``.

    ``origin`` is the first date of the full series, so windows cut from a
    LogSeries share one time axis with fitted critical times.
    """

    dates: tuple
    value: np.ndarray
    tau: np.ndarray
    origin: date

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "value", _frozen(self.value))
        object.__setattr__(self, "tau", _frozen(self.tau))

    def __len__(self):
        return len(self.dates)

    def tau_of(self, day: date) -> float:
        return float((day - self.origin).days)

    def window(self, t1: date, t2: date) -> "LogSeries":
        """Observations with ``t1 <= date <= t2``, on the same time axis."""
        lo = self.tau_of(t1)
        hi = self.tau_of(t2)
        i = int(np.searchsorted(self.tau, lo, side="left"))
        j = int(np.searchsorted(self.tau, hi, side="right"))
        return LogSeries(self.dates[i:j], self.value[i:j], self.tau[i:j], self.origin)

    def with_values(self, value) -> "LogSeries":
        return LogSeries(self.dates, value, self.tau, self.origin)


class ReturnSign(enum.Enum):
    UP = "UP"
    NONUP = "NONUP"


def ingest_csv(data: bytes, meta: AssetMeta | None = None) -> PriceSeries:
    """Parse ``date,close`` CSV bytes into a validated, date-sorted series.

    Line numbers in errors are 1-based and count the header as line 1.
    """
    meta = meta or AssetMeta()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not UTF-8: {exc}") from None

    rows = []
    seen = {}
    reader = csv.reader(io.StringIO(text, newline=""))
    header_seen = False
    for lineno, row in enumerate(reader, start=1):
        if not header_seen:
            if tuple(cell.strip() for cell in row) != CSV_HEADER:
                raise ParseError(f"expected header 'date,close', got {','.join(row)!r}", line=lineno)
            header_seen = True
            continue
        if not row:
            continue
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", line=lineno)
        raw_date, raw_close = (cell.strip() for cell in row)
        try:
            day = date.fromisoformat(raw_date)
        except ValueError:
            raise ParseError(f"bad date {raw_date!r}", line=lineno) from None
        try:
            close = float(raw_close)
        except ValueError:
            raise ParseError(f"bad close {raw_close!r}", line=lineno) from None
        if not math.isfinite(close):
            raise ParseError(f"non-finite close {raw_close!r}", line=lineno)
        if close <= 0:
            raise NonPositivePrice(f"close must be > 0, got {raw_close}", line=lineno)
        if day in seen:
            raise DuplicateDate(f"date {raw_date} already on line {seen[day]}", line=lineno)
        seen[day] = lineno
        rows.append((day, close))
    if not header_seen:
        raise ParseError("empty input", line=1)

    rows.sort(key=lambda r: r[0])
    if len(rows) < 2:
        raise WindowTooSparse(f"a price series needs at least 2 observations, got {len(rows)}")
    return PriceSeries(meta, tuple(r[0] for r in rows), [r[1] for r in rows])


def to_csv(series: PriceSeries) -> bytes:
    """Inverse of :func:`ingest_csv`; closes use shortest round-trip repr."""
    lines = [",".join(CSV_HEADER)]
    lines.extend(f"{d.isoformat()},{float(c)!r}" for d, c in zip(series.dates, series.closes))
    return ("\n".join(lines) + "\n").encode("utf-8")


def to_log(series: PriceSeries) -> LogSeries:
    origin = series.dates[0]
    tau = [float((d - origin).days) for d in series.dates]
    return LogSeries(series.dates, np.log(series.closes), tau, origin)


def daily_return_signs(series: PriceSeries) -> list[ReturnSign]:
    closes = series.closes
    if closes.shape[0] < 2:
        raise WindowTooSparse("need at least 2 closes for a return")
    return [ReturnSign.UP if up else ReturnSign.NONUP for up in closes[1:] > closes[:-1]]


def slice_series(series: PriceSeries, t1: date, t2: date) -> PriceSeries:
    """Sub-series with ``t1 <= date <= t2``; metadata is kept."""
    if t1 > t2:
        raise ValueError(f"t1 {t1} is after t2 {t2}")
    keep = [i for i, d in enumerate(series.dates) if t1 <= d <= t2]
    if len(keep) < 2:
        raise WindowTooSparse(f"window {t1}..{t2} holds {len(keep)} observation(s)")
    lo, hi = keep[0], keep[-1] + 1
    return PriceSeries(series.meta, series.dates[lo:hi], series.closes[lo:hi])


def from_arrays(dates: Sequence[date], closes, meta: AssetMeta | None = None) -> PriceSeries:
    return PriceSeries(meta or AssetMeta(), tuple(dates), closes)

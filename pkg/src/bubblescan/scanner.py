"""Sliding (t1, t2) window grid and the fitting scan over it."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Optional

from . import seeding
from .errors import BubbleScanError, SeriesTooShort
from .fitting import DEFAULT_FIT, FitConfig, FitResult, fit_window
from .lppl import DEFAULT_FILTER, LpplParams, QualificationFilter
from .market_data import AssetMeta, LogSeries, PriceSeries, to_log

T2_ANCHOR = "most_recent"


@dataclass(frozen=True)
class ScanGrid:
    """Window grid: t2 steps back from the last observation by ``dt2`` days;
    for each t2, lengths run from ``min_len`` to ``max_len`` in ``dt1`` steps."""

    dt1: int = 7
    dt2: int = 7
    min_len: int = 91
    max_len: int = 1092
    t2_anchor: str = T2_ANCHOR

    def __post_init__(self):
        for name in ("dt1", "dt2", "min_len", "max_len"):
            value = getattr(self, name)
            if int(value) != value:
                raise ValueError(f"{name} must be an integer number of days")
            object.__setattr__(self, name, int(value))
        if self.dt1 < 1 or self.dt2 < 1:
            raise ValueError("dt1 and dt2 must be >= 1")
        if self.min_len < 1 or self.min_len > self.max_len:
            raise ValueError("need 1 <= min_len <= max_len")
        if self.t2_anchor != T2_ANCHOR:
            raise ValueError(f"unsupported t2 anchor {self.t2_anchor!r}")

    def as_dict(self) -> dict:
        return {
            "dt1": self.dt1,
            "dt2": self.dt2,
            "min_len": self.min_len,
            "max_len": self.max_len,
            "t2_anchor": self.t2_anchor,
            "t1_lattice": "per_t2",
        }


DEFAULT_GRID = ScanGrid()


@dataclass(frozen=True)
class WindowFailure:
    window: tuple
    reason: str
    error: str

    def as_dict(self) -> dict:
        return {
            "window": [self.window[0].isoformat(), self.window[1].isoformat()],
            "reason": self.reason,
            "error": self.error,
        }


@dataclass(frozen=True)
class ScanReport:
    meta: AssetMeta
    grid: ScanGrid
    fit_config: FitConfig
    filter: QualificationFilter
    origin: date
    last_date: date
    windows: tuple
    fits: tuple
    failures: tuple

    @property
    def windows_enumerated(self) -> int:
        return len(self.windows)

    @property
    def fits_converged(self) -> int:
        return sum(1 for f in self.fits if f.converged)

    @property
    def fits_qualified(self) -> int:
        return sum(1 for f in self.fits if f.qualified)

    @property
    def counts(self) -> dict:
        return {
            "windows_enumerated": self.windows_enumerated,
            "fits_converged": self.fits_converged,
            "fits_qualified": self.fits_qualified,
            "fits_failed": len(self.failures),
        }

    @property
    def latest_t2(self) -> date:
        return max(w[1] for w in self.windows)

    @property
    def qualified_fraction(self) -> float:
        return self.fits_qualified / self.fits_converged if self.fits_converged else 0.0

    def as_dict(self) -> dict:
        return {
            "asset": {
                "name": self.meta.name,
                "ticker": self.meta.ticker,
                "source": self.meta.source,
                "category": self.meta.category,
            },
            "origin": self.origin.isoformat(),
            "last_date": self.last_date.isoformat(),
            "grid": self.grid.as_dict(),
            "fit_config": self.fit_config.as_dict(),
            "filter": self.filter.as_dict(),
            "counts": self.counts,
            "windows": [[a.isoformat(), b.isoformat()] for a, b in self.windows],
            "fits": [f.as_dict() for f in self.fits],
            "failures": [f.as_dict() for f in self.failures],
        }


def report_from_dict(data: dict) -> ScanReport:
    """Rebuild a :class:`ScanReport` from its :meth:`ScanReport.as_dict` form."""
    day = date.fromisoformat

    def fit(d):
        prov = d["provenance"]
        return FitResult(
            params=LpplParams(**d["params"]),
            sse=d["sse"],
            rmse=d["rmse"],
            n_obs=d["n_obs"],
            window=(day(d["window"][0]), day(d["window"][1])),
            converged=d["converged"],
            qualified=d["qualified"],
            bootstrap_index=None if prov == "original" else int(prov.split(":")[1]),
            starts_converged=d["starts_converged"],
            n_starts=d["n_starts"],
        )

    grid = {k: v for k, v in data["grid"].items() if k != "t1_lattice"}
    flt = data["filter"]
    fits = tuple(fit(d) for d in data["fits"])
    failures = tuple(
        WindowFailure((day(f["window"][0]), day(f["window"][1])), f["reason"], f["error"])
        for f in data["failures"]
    )
    report = ScanReport(
        meta=AssetMeta(**data["asset"]),
        grid=ScanGrid(**grid),
        fit_config=FitConfig(**data["fit_config"]),
        filter=QualificationFilter(**flt),
        origin=day(data["origin"]),
        last_date=day(data["last_date"]),
        windows=tuple((day(a), day(b)) for a, b in data["windows"]),
        fits=fits,
        failures=failures,
    )
    if report.counts != data["counts"]:
        raise ValueError("scan report counts do not match its fits")
    return report


def enumerate_windows(series: PriceSeries, grid: ScanGrid = DEFAULT_GRID) -> list[tuple]:
    """All (t1, t2) windows, ordered by t2 descending then length ascending."""
    first, last = series.first_date, series.last_date
    span = (last - first).days
    if span < grid.min_len:
        raise SeriesTooShort(f"series spans {span} days, the grid needs at least {grid.min_len}")
    windows = []
    t2 = last
    while (t2 - first).days >= grid.min_len:
        for length in range(grid.min_len, grid.max_len + 1, grid.dt1):
            t1 = t2 - timedelta(days=length)
            if t1 < first:
                break
            windows.append((t1, t2))
        t2 -= timedelta(days=grid.dt2)
    return windows


def window_seed(base_seed: int, window: tuple) -> int:
    return seeding.derive_seed(base_seed, seeding.FIT, window[0], window[1])


def _fit_one(log_series: LogSeries, window, fit_config: FitConfig, flt: QualificationFilter):
    config = fit_config.with_seed(window_seed(fit_config.seed, window))
    try:
        return fit_window(log_series, window, config, flt)
    except BubbleScanError as exc:
        return WindowFailure(window, type(exc).__name__, str(exc))


def map_ordered(fn, items, workers: int):
    """``map`` that may run on a thread pool but always returns input order."""
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def scan(
    series: PriceSeries,
    grid: ScanGrid = DEFAULT_GRID,
    fit_config: FitConfig = DEFAULT_FIT,
    flt: QualificationFilter = DEFAULT_FILTER,
    workers: int = 1,
    log_series: Optional[LogSeries] = None,
) -> ScanReport:
    """Fit every enumerated window. Results do not depend on ``workers``.

    Each window is fit with its own seed hashed from the base seed and the
    window dates. Windows that cannot be fit are recorded in ``failures``.
    """
    windows = enumerate_windows(series, grid)
    log_series = log_series or to_log(series)
    outcomes = map_ordered(lambda w: _fit_one(log_series, w, fit_config, flt), windows, workers)
    fits = tuple(o for o in outcomes if isinstance(o, FitResult))
    failures = tuple(o for o in outcomes if isinstance(o, WindowFailure))
    return ScanReport(
        meta=series.meta,
        grid=grid,
        fit_config=fit_config,
        filter=flt,
        origin=log_series.origin,
        last_date=series.last_date,
        windows=tuple(windows),
        fits=fits,
        failures=failures,
    )

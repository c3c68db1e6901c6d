"""Residual bootstrap around qualified fits and the pooled critical-time ensemble."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from datetime import date

import numpy as np

from . import seeding
from .errors import BubbleScanError, NoBubbleSignal
from .fitting import FitConfig, FitResult, fit_window
from .lppl import QualificationFilter, evaluate, residuals
from .market_data import LogSeries
from .scanner import ScanReport, map_ordered

RESAMPLING = "iid_residual"


@dataclass(frozen=True)
class TcEnsemble:
    members: tuple
    t2: date
    origin: date
    n_bootstrap_per_fit: int
    base_fit_count: int
    tc_horizon_days: int
    refits_attempted: int = 0
    refits_converged: int = 0
    resampling: str = RESAMPLING

    def __len__(self):
        return len(self.members)

    @property
    def t2_tau(self) -> float:
        return float((self.t2 - self.origin).days)

    @property
    def tc_values(self) -> np.ndarray:
        return np.array([m.params.tc for m in self.members], dtype=float)

    def per_t2_counts(self) -> dict:
        """Member counts keyed by the window end date of each member."""
        counts = Counter(m.window[1] for m in self.members)
        return {d.isoformat(): counts[d] for d in sorted(counts, reverse=True)}

    def as_dict(self) -> dict:
        return {
            "t2": self.t2.isoformat(),
            "origin": self.origin.isoformat(),
            "n_members": len(self.members),
            "base_fit_count": self.base_fit_count,
            "n_bootstrap_per_fit": self.n_bootstrap_per_fit,
            "tc_horizon_days": self.tc_horizon_days,
            "refits_attempted": self.refits_attempted,
            "refits_converged": self.refits_converged,
            "resampling": self.resampling,
            "per_t2_counts": self.per_t2_counts(),
        }


def resample_residuals(base: FitResult, log_window: LogSeries, n: int, seed: int) -> list[LogSeries]:
    """``n`` synthetic windows: fitted curve plus residuals drawn with replacement."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not base.converged:
        raise ValueError("cannot bootstrap an unconverged fit")
    fitted = evaluate(base.params, log_window.tau)
    resid = residuals(base.params, log_window)
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, resid.shape[0], size=(n, resid.shape[0]))
    return [log_window.with_values(fitted + resid[idx]) for idx in draws]


def _in_horizon(fit: FitResult, t2_tau: float, horizon: int) -> bool:
    return t2_tau < fit.params.tc <= t2_tau + horizon


def _refit(args):
    synthetic, window, config, flt, j, warm = args
    try:
        return fit_window(synthetic, window, config, flt, bootstrap_index=j, warm_start=warm)
    except BubbleScanError:
        return None


def build_ensemble(
    scan: ScanReport,
    log_series: LogSeries,
    fit_config: FitConfig,
    flt: QualificationFilter,
    n_boot: int = 10,
    seed: int = 0,
    workers: int = 1,
) -> TcEnsemble:
    """Pool qualified original fits with their qualified bootstrap refits.

    Members whose critical time falls outside ``(t2, t2 + horizon]`` of the
    latest observation are dropped, not clamped.
    """
    if n_boot < 0:
        raise ValueError("n_boot must be >= 0")
    originals = [f for f in scan.fits if f.qualified and f.bootstrap_index is None]
    if not originals:
        raise NoBubbleSignal(f"no qualified fit among {scan.fits_converged} converged windows")

    jobs = []
    for base in originals:
        t1, t2 = base.window
        window_series = log_series.window(t1, t2)
        synthetics = resample_residuals(
            base, window_series, n_boot, seeding.derive_seed(seed, seeding.RESAMPLE, t1, t2)
        ) if n_boot else []
        warm = (base.params.tc, base.params.alpha, base.params.omega)
        for j, synthetic in enumerate(synthetics):
            config = fit_config.with_seed(seeding.derive_seed(seed, seeding.REFIT, t1, t2, j))
            jobs.append((synthetic, base.window, config, flt, j, warm))

    refits = map_ordered(_refit, jobs, workers)

    t2_tau = float((scan.last_date - scan.origin).days)
    horizon = flt.tc_horizon_days
    members = []
    for i, base in enumerate(originals):
        group = [base, *refits[i * n_boot:(i + 1) * n_boot]]
        members.extend(
            m for m in group if m is not None and m.qualified and _in_horizon(m, t2_tau, horizon)
        )
    return TcEnsemble(
        members=tuple(members),
        t2=scan.last_date,
        origin=scan.origin,
        n_bootstrap_per_fit=n_boot,
        base_fit_count=len(originals),
        tc_horizon_days=horizon,
        refits_attempted=len(jobs),
        refits_converged=sum(1 for r in refits if r is not None),
    )

"""Fitting the LPPL model to one window.

The four linear coefficients (A, B, C1, C2) are profiled out by least squares,
leaving a three-dimensional search over (tc, alpha, omega). That search is a
seeded multistart of bounded Nelder-Mead runs; the compiled loops live in
:mod:`bubblescan._kernels`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from datetime import date
from typing import NamedTuple, Optional

import numpy as np
from scipy.stats import qmc

from . import _kernels
from .errors import FitFailed, IllConditioned, SingularTime, WindowTooSparse
from .lppl import DEFAULT_FILTER, LpplParams, QualificationFilter, qualifies, residuals
from .market_data import LogSeries

MIN_WINDOW_OBS = 30
MIN_LINEAR_OBS = 8
MAX_CONDITION = 1e12
SIMPLEX_STEP = 0.1


def _widen(interval, fraction):
    lo, hi = interval
    pad = 0.5 * fraction * (hi - lo)
    # rounding keeps echoed configs free of float noise (0.02, not 0.01999...)
    return round(lo - pad, 12), round(hi + pad, 12)


@dataclass(frozen=True)
class FitConfig:
    """Search box and stopping rules for :func:`fit_window`.

    ``tc_search_range`` is in days past the window end t2. ``convergence_tol``
    bounds the spread of simplex objective values; ``simplex_tol`` bounds the
    simplex diameter in unit-box coordinates. Both must hold to converge.
    """

    n_starts: int = 20
    max_iterations: int = 2000
    convergence_tol: float = 1e-10
    simplex_tol: float = 1e-6
    tc_search_range: tuple = (1.0, 183.0)
    alpha_search_range: tuple = (0.02, 0.98)
    omega_search_range: tuple = (1.9, 27.1)
    seed: int = 0

    def __post_init__(self):
        if int(self.n_starts) != self.n_starts or self.n_starts < 1:
            raise ValueError("n_starts must be a positive integer")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError("max_iterations must be a positive integer")
        if not self.convergence_tol > 0 or not self.simplex_tol > 0:
            raise ValueError("tolerances must be > 0")
        for name in ("tc_search_range", "alpha_search_range", "omega_search_range"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} is empty: ({lo}, {hi})")
            object.__setattr__(self, name, (float(lo), float(hi)))
        a_lo, a_hi = self.alpha_search_range
        if a_lo <= 0 or a_hi > 1:
            raise ValueError("alpha_search_range must lie inside (0, 1]")
        if self.omega_search_range[0] <= 0:
            raise ValueError("omega_search_range must be positive")
        if self.tc_search_range[0] <= 0:
            raise ValueError("tc_search_range must start after t2")
        object.__setattr__(self, "n_starts", int(self.n_starts))
        object.__setattr__(self, "max_iterations", int(self.max_iterations))

    @classmethod
    def for_filter(cls, flt: QualificationFilter, widen: float = 0.2, **overrides) -> "FitConfig":
        """Search box slightly wider than the qualification filter."""
        a_lo, a_hi = _widen(flt.alpha_range, widen)
        w_lo, w_hi = _widen(flt.omega_range, widen)
        kwargs = dict(
            tc_search_range=(1.0, float(flt.tc_horizon_days)),
            alpha_search_range=(max(a_lo, 1e-3), min(a_hi, 1.0)),
            omega_search_range=(max(w_lo, 1e-3), w_hi),
        )
        kwargs.update(overrides)
        return cls(**kwargs)

    def with_seed(self, seed: int) -> "FitConfig":
        return replace(self, seed=int(seed))

    def as_dict(self) -> dict:
        return {
            "n_starts": self.n_starts,
            "max_iterations": self.max_iterations,
            "convergence_tol": self.convergence_tol,
            "simplex_tol": self.simplex_tol,
            "tc_search_range": list(self.tc_search_range),
            "alpha_search_range": list(self.alpha_search_range),
            "omega_search_range": list(self.omega_search_range),
            "seed": self.seed,
        }


DEFAULT_FIT = FitConfig.for_filter(DEFAULT_FILTER)


@dataclass(frozen=True)
class FitResult:
    params: LpplParams
    sse: float
    rmse: float
    n_obs: int
    window: tuple
    converged: bool
    qualified: bool
    bootstrap_index: Optional[int] = None
    starts_converged: int = 0
    n_starts: int = 0

    @property
    def provenance(self) -> str:
        return "original" if self.bootstrap_index is None else f"bootstrap:{self.bootstrap_index}"

    @property
    def t1(self) -> date:
        return self.window[0]

    @property
    def t2(self) -> date:
        return self.window[1]

    def as_dict(self) -> dict:
        return {
            "window": [self.window[0].isoformat(), self.window[1].isoformat()],
            "provenance": self.provenance,
            "params": self.params.as_dict(),
            "sse": self.sse,
            "rmse": self.rmse,
            "n_obs": self.n_obs,
            "converged": self.converged,
            "qualified": self.qualified,
            "starts_converged": self.starts_converged,
            "n_starts": self.n_starts,
        }


class LinearSolution(NamedTuple):
    A: float
    B: float
    C1: float
    C2: float
    sse: float


class StartOutcomes(NamedTuple):
    """Per-start results of one multistart run, in start order."""

    tc: np.ndarray
    alpha: np.ndarray
    omega: np.ndarray
    sse: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray


def design_matrix(tau, tc, alpha, omega) -> np.ndarray:
    d = tc - np.asarray(tau, dtype=float)
    f = d**alpha
    g = omega * np.log(d)
    return np.column_stack([np.ones_like(d), f, f * np.cos(g), f * np.sin(g)])


def solve_linear(tc: float, alpha: float, omega: float, log_series: LogSeries) -> LinearSolution:
    """Least-squares (A, B, C1, C2) at fixed nonlinear parameters.

    Uses an SVD solve on a column-equilibrated design and refuses designs
    whose condition number exceeds ``MAX_CONDITION``.
    """
    tau = log_series.tau
    if tau.shape[0] < MIN_LINEAR_OBS:
        raise WindowTooSparse(f"need at least {MIN_LINEAR_OBS} observations, got {tau.shape[0]}")
    if not tc > tau.max():
        raise SingularTime(f"tc = {tc} is not beyond the last observation (tau {tau.max():g})")
    X = design_matrix(tau, tc, alpha, omega)
    scale = np.linalg.norm(X, axis=0)
    if np.any(scale == 0):
        raise IllConditioned(math.inf)
    Xs = X / scale
    y = log_series.value
    coef_s, _, rank, sv = np.linalg.lstsq(Xs, y, rcond=None)
    cond = sv[0] / sv[-1] if sv[-1] > 0 else math.inf
    if rank < X.shape[1] or cond > MAX_CONDITION:
        raise IllConditioned(cond)
    coef = coef_s / scale
    r = y - X @ coef
    return LinearSolution(*(float(c) for c in coef), float(r @ r))


def profiled_sse(tc: float, alpha: float, omega: float, log_series: LogSeries) -> tuple[float, np.ndarray]:
    """Compiled-path objective; returns ``(sse, [A, B, C1, C2])``."""
    tau = np.ascontiguousarray(log_series.tau)
    y = np.ascontiguousarray(log_series.value)
    work = np.empty((tau.shape[0], _kernels.N_LINEAR + 1))
    coef = np.empty(_kernels.N_LINEAR)
    sse = _kernels.profile_sse(tau, y, float(tc), float(alpha), float(omega), work, coef)
    return sse, coef


def _box(t2_tau: float, config: FitConfig):
    lo = np.array([t2_tau + config.tc_search_range[0], config.alpha_search_range[0], config.omega_search_range[0]])
    hi = np.array([t2_tau + config.tc_search_range[1], config.alpha_search_range[1], config.omega_search_range[1]])
    return lo, hi


def start_points(config: FitConfig, t2_tau: float, warm_start=None) -> np.ndarray:
    """Unit-box start points: scrambled Halton draws seeded by ``config.seed``.

    A warm start ``(tc, alpha, omega)`` replaces the first draw.
    """
    starts = qmc.Halton(d=3, scramble=True, seed=config.seed).random(config.n_starts)
    if warm_start is not None:
        lo, hi = _box(t2_tau, config)
        starts[0] = np.clip((np.asarray(warm_start, dtype=float) - lo) / (hi - lo), 0.0, 1.0)
    return starts


def run_starts(window_series: LogSeries, t2_tau: float, config: FitConfig, warm_start=None) -> StartOutcomes:
    lo, hi = _box(t2_tau, config)
    starts = start_points(config, t2_tau, warm_start)
    us, fs, conv, its = _kernels.multistart(
        starts,
        lo,
        hi,
        np.ascontiguousarray(window_series.tau),
        np.ascontiguousarray(window_series.value),
        config.max_iterations,
        config.convergence_tol,
        config.simplex_tol,
        SIMPLEX_STEP,
    )
    x = lo + us * (hi - lo)
    return StartOutcomes(x[:, 0], x[:, 1], x[:, 2], fs, conv, its)


def fit_window(
    log_series: LogSeries,
    window: tuple,
    config: FitConfig = DEFAULT_FIT,
    flt: QualificationFilter = DEFAULT_FILTER,
    *,
    bootstrap_index: Optional[int] = None,
    warm_start=None,
) -> FitResult:
    """Best converged LPPL fit to the observations of ``log_series`` in ``window``.

    Deterministic for fixed data, window, config and filter.
    """
    t1, t2 = window
    sub = log_series.window(t1, t2)
    if len(sub) < MIN_WINDOW_OBS:
        raise WindowTooSparse(f"window {t1}..{t2} has {len(sub)} observations, need {MIN_WINDOW_OBS}")
    t2_tau = log_series.tau_of(t2)

    out = run_starts(sub, t2_tau, config, warm_start)
    candidates = np.where(out.converged & np.isfinite(out.sse), out.sse, np.inf)
    if not np.isfinite(candidates).any():
        raise FitFailed(f"no start converged on window {t1}..{t2}")
    best = int(np.argmin(candidates))
    tc, alpha, omega = float(out.tc[best]), float(out.alpha[best]), float(out.omega[best])

    _, coef = profiled_sse(tc, alpha, omega, sub)
    params = LpplParams.from_linear(coef[0], coef[1], coef[2], coef[3], alpha, omega, tc)
    r = residuals(params, sub)
    sse = float(r @ r)
    return FitResult(
        params=params,
        sse=sse,
        rmse=math.sqrt(sse / len(sub)),
        n_obs=len(sub),
        window=(t1, t2),
        converged=True,
        qualified=qualifies(params, t2_tau, flt),
        bootstrap_index=bootstrap_index,
        starts_converged=int(out.converged.sum()),
        n_starts=config.n_starts,
    )

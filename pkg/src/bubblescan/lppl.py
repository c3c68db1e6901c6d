"""The log-periodic power law model.

    ln P(t) = A + B |t - tc|^alpha + C |t - tc|^alpha cos(omega ln|t - tc| + phi)

Time is measured in calendar days (``tau``) from the first observation of the
series; ``tc`` lives on the same axis.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from datetime import date
from typing import Sequence

import numpy as np

from .errors import SingularTime
from .market_data import AssetMeta, LogSeries, PriceSeries

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class LpplParams:
    A: float
    B: float
    C: float
    alpha: float
    omega: float
    phi: float
    tc: float

    def __post_init__(self):
        if not self.C >= 0:
            raise ValueError(f"C must be >= 0 in canonical form, got {self.C}")
        if not 0.0 <= self.phi < TWO_PI:
            raise ValueError(f"phi must lie in [0, 2pi), got {self.phi}")
        # alpha = 1 is accepted as a boundary value (pure linear trend)
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.omega > 0:
            raise ValueError(f"omega must be > 0, got {self.omega}")

    @classmethod
    def canonical(cls, A, B, C, alpha, omega, phi, tc) -> "LpplParams":
        """Build params with a possibly negative ``C`` or unwrapped ``phi``."""
        if C < 0:
            C, phi = -C, phi + math.pi
        phi = math.fmod(phi, TWO_PI)
        if phi < 0:
            phi += TWO_PI
        if phi >= TWO_PI:  # fmod of values just below a multiple of 2pi can round up
            phi = 0.0
        return cls(float(A), float(B), float(C), float(alpha), float(omega), float(phi), float(tc))

    @classmethod
    def from_linear(cls, A, B, C1, C2, alpha, omega, tc) -> "LpplParams":
        C, phi = to_phase_form(C1, C2)
        return cls.canonical(A, B, C, alpha, omega, phi, tc)

    @property
    def C1(self) -> float:
        return self.C * math.cos(self.phi)

    @property
    def C2(self) -> float:
        return -self.C * math.sin(self.phi)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class QualificationFilter:
    """Admissible parameter region for a fit to count as a bubble signal."""

    alpha_range: tuple = (0.1, 0.9)
    omega_range: tuple = (4.0, 25.0)
    require_negative_B: bool = True
    tc_horizon_days: int = 183

    def __post_init__(self):
        for name in ("alpha_range", "omega_range"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"{name} is empty: {lo} > {hi}")
            object.__setattr__(self, name, (float(lo), float(hi)))
        if int(self.tc_horizon_days) != self.tc_horizon_days or self.tc_horizon_days <= 0:
            raise ValueError("tc_horizon_days must be a positive integer")
        object.__setattr__(self, "tc_horizon_days", int(self.tc_horizon_days))

    def as_dict(self) -> dict:
        return {
            "alpha_range": list(self.alpha_range),
            "omega_range": list(self.omega_range),
            "require_negative_B": self.require_negative_B,
            "tc_horizon_days": self.tc_horizon_days,
        }


DEFAULT_FILTER = QualificationFilter()


def to_phase_form(C1: float, C2: float) -> tuple[float, float]:
    """``C1 cos x + C2 sin x`` rewritten as ``C cos(x + phi)`` with C >= 0."""
    C = math.hypot(C1, C2)
    if C == 0.0:
        return 0.0, 0.0
    phi = math.atan2(-C2, C1)
    if phi < 0:
        phi += TWO_PI
    if phi >= TWO_PI:
        phi = 0.0
    return C, phi


def evaluate(params: LpplParams, tau):
    """Model log-price at ``tau`` (scalar or array)."""
    t = np.asarray(tau, dtype=float)
    dt = np.abs(t - params.tc)
    if np.any(dt == 0.0):
        if params.C != 0.0:
            raise SingularTime(f"tau = tc = {params.tc} makes ln|t - tc| undefined")
    with np.errstate(divide="ignore"):
        power = dt**params.alpha
        osc = np.cos(params.omega * np.log(dt) + params.phi) if params.C != 0.0 else 0.0
    out = params.A + params.B * power + params.C * power * osc
    return float(out) if np.ndim(out) == 0 else out


def residuals(params: LpplParams, log_series: LogSeries) -> np.ndarray:
    return log_series.value - evaluate(params, log_series.tau)


def qualifies(params: LpplParams, window_end_tau: float, flt: QualificationFilter = DEFAULT_FILTER) -> bool:
    a_lo, a_hi = flt.alpha_range
    w_lo, w_hi = flt.omega_range
    return bool(
        a_lo <= params.alpha <= a_hi
        and w_lo <= params.omega <= w_hi
        and (not flt.require_negative_B or params.B < 0)
        and window_end_tau < params.tc <= window_end_tau + flt.tc_horizon_days
    )


SYNTHETIC_META = AssetMeta(name="synthetic LPPL", ticker="SYN", source="synthetic", category="Index")


def generate_synthetic(
    params: LpplParams,
    dates: Sequence[date],
    noise_sigma: float = 0.0,
    seed: int = 0,
    meta: AssetMeta | None = None,
) -> PriceSeries:
    """Price series following the model, with optional i.i.d. Gaussian log noise.

    ``tau`` is counted from ``dates[0]``; every date must fall before ``tc``.
    """
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    dates = tuple(dates)
    origin = dates[0]
    tau = np.array([(d - origin).days for d in dates], dtype=float)
    if np.any(tau >= params.tc):
        raise SingularTime(f"dates reach or pass tc = {params.tc} (last tau {tau.max():g})")
    log_price = evaluate(params, tau)
    if noise_sigma > 0:
        log_price = log_price + np.random.default_rng(seed).normal(0.0, noise_sigma, size=tau.shape[0])
    return PriceSeries(meta or SYNTHETIC_META, dates, np.exp(log_price))

"""Return series containers, validation and the power transform."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    AllZero,
    CurveLengthMismatch,
    EmptySeries,
    InsufficientData,
    NonFiniteValue,
    UsageError,
)

__all__ = [
    "ReturnSeries",
    "PowerSpec",
    "PowerSeries",
    "build_series",
    "power_transform",
    "check_returns",
    "check_curve",
    "log_returns",
]


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def check_returns(raw) -> np.ndarray:
    """Validate a one-dimensional array of returns.

    Accepts lists, tuples, pandas Series and column vectors of shape
    ``(n, 1)``. Returns a fresh float64 array.
    """
    if isinstance(raw, ReturnSeries):
        return np.array(raw.values)
    try:
        x = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise NonFiniteValue(f"returns are not numeric: {exc}") from None
    if x.ndim == 2 and x.shape[1] == 1:
        x = x[:, 0]
    if x.ndim != 1:
        raise UsageError(f"expected a one-dimensional series, got shape {x.shape}")
    if x.size == 0:
        raise EmptySeries("return series is empty")
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise NonFiniteValue(f"non-finite return at position {bad}")
    return x.copy()


def check_curve(curve, n: int, name: str = "curve") -> np.ndarray:
    c = np.asarray(curve, dtype=float)
    if c.ndim != 1 or c.shape[0] != n:
        raise CurveLengthMismatch(f"{name} has shape {c.shape}, expected ({n},)")
    if not np.all(np.isfinite(c)):
        raise NonFiniteValue(f"{name} contains non-finite values")
    return c


def log_returns(prices) -> np.ndarray:
    """Log price differences ``log(p_t / p_{t-1})``; the first price is dropped."""
    p = np.asarray(prices, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise InsufficientData("need at least two prices to form a return")
    if not np.all(np.isfinite(p)) or np.any(p <= 0):
        raise NonFiniteValue("prices must be finite and strictly positive")
    return np.diff(np.log(p))


@dataclass(frozen=True)
class ReturnSeries:
    """Observed returns ``r_t`` together with the trade indicators ``a_t``.

    Build instances with :func:`build_series`; values with ``|r_t| <= eps``
    have already been replaced by exact zeros.
    """

    values: np.ndarray
    indicators: np.ndarray
    zero_threshold: float = 0.0

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def nonzero(self) -> np.ndarray:
        return self.values[self.indicators == 1]

    @property
    def zero_fraction(self) -> float:
        return 1.0 - float(self.indicators.mean())

    def __len__(self):
        return self.n


def build_series(raw, zero_threshold: float = 0.0) -> ReturnSeries:
    """Validate returns and derive the zero indicators.

    >>> build_series([1.0, 0.0, -2.0]).indicators
    array([1., 0., 1.])
    """
    eps = float(zero_threshold)
    if not np.isfinite(eps) or eps < 0:
        raise UsageError(f"zero_threshold must be finite and >= 0, got {zero_threshold}")
    x = check_returns(raw)
    if x.size < 2:
        raise InsufficientData("a return series needs at least two observations")
    a = (np.abs(x) > eps).astype(float)
    if not a.any():
        raise AllZero(f"all {x.size} returns are zero (threshold {eps:g})")
    x = np.where(a == 1.0, x, 0.0)
    return ReturnSeries(values=_frozen(x), indicators=_frozen(a), zero_threshold=eps)


@dataclass(frozen=True)
class PowerSpec:
    delta: float = 1.0
    max_lag: int = 5

    def __post_init__(self):
        if not (np.isfinite(self.delta) and self.delta > 0):
            raise UsageError(f"delta must be positive, got {self.delta}")
        if int(self.max_lag) != self.max_lag or self.max_lag < 1:
            raise UsageError(f"max_lag must be a positive integer, got {self.max_lag}")

    def check_length(self, n: int) -> None:
        if self.max_lag > n - 2:
            raise InsufficientData(
                f"max_lag={self.max_lag} requires at least {self.max_lag + 2} observations, got {n}"
            )


@dataclass(frozen=True)
class PowerSeries:
    values: np.ndarray
    mean: float = field(default=np.nan)
    delta: float = 1.0

    @property
    def n(self) -> int:
        return int(self.values.shape[0])


def power_transform(series: ReturnSeries, spec: PowerSpec) -> PowerSeries:
    """``|r_t|^delta`` and its arithmetic mean."""
    v = np.abs(series.values) ** spec.delta
    return PowerSeries(values=_frozen(v), mean=float(v.mean()), delta=float(spec.delta))

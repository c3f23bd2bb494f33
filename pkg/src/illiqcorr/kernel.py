"""Nadaraya-Watson smoothing on the rescaled design ``t/n``.

The design points are equally spaced, so the kernel weight between ``t``
and ``j`` only depends on ``t - j`` and every smoother below is a discrete
convolution.  Leave-one-out fits convolve with the centre tap removed
instead of subtracting the diagonal term afterwards, which keeps them
exact even when the off-diagonal weights are tiny.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .core import PowerSpec, ReturnSeries, check_returns, power_transform
from .exceptions import (
    AllBandwidthsDegenerate,
    DegenerateBandwidth,
    InsufficientData,
    UsageError,
)

__all__ = [
    "DEFAULT_GRID",
    "Target",
    "KernelConfig",
    "CurveEstimate",
    "kernel_weights",
    "smooth",
    "loo_fitted",
    "cv_objective",
    "loocv_bandwidth",
    "estimate_probability",
    "estimate_power_moment",
    "KernelSmoother",
]

DEFAULT_GRID = tuple(float(b) for b in np.geomspace(0.005, 0.5, 30))

_SQRT_2PI = np.sqrt(2.0 * np.pi)


def _gaussian(u):
    return np.exp(-0.5 * np.square(u)) / _SQRT_2PI


KERNELS = {"gaussian": _gaussian}


class Target(str, Enum):
    PROBABILITY = "probability"
    MOMENT = "moment"


@dataclass(frozen=True)
class KernelConfig:
    """Smoothing options.

    ``selected_bandwidth`` skips cross-validation when set (fixed-bandwidth
    mode).  ``cv_stride=k`` evaluates the CV criterion on every k-th
    design point only, for very long series.
    """

    kernel: str = "gaussian"
    bandwidth_grid: tuple = DEFAULT_GRID
    selected_bandwidth: float | None = None
    normalize_weights: bool = True
    cv_stride: int = 1

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise UsageError(f"unknown kernel {self.kernel!r}; choose from {sorted(KERNELS)}")
        grid = tuple(float(b) for b in self.bandwidth_grid)
        if not grid:
            raise UsageError("bandwidth grid is empty")
        if any(not (0.0 < b < 1.0) for b in grid):
            raise UsageError("bandwidth grid values must lie in (0, 1)")
        object.__setattr__(self, "bandwidth_grid", tuple(sorted(set(grid))))
        if self.selected_bandwidth is not None and not self.selected_bandwidth > 0:
            raise UsageError(f"bandwidth must be positive, got {self.selected_bandwidth}")
        if int(self.cv_stride) != self.cv_stride or self.cv_stride < 1:
            raise UsageError("cv_stride must be a positive integer")

    @property
    def kernel_fn(self):
        return KERNELS[self.kernel]


@dataclass(frozen=True)
class CurveEstimate:
    target: Target
    values: np.ndarray
    bandwidth: float
    cv_score: float
    delta: float | None = None

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    def to_csv(self, path) -> None:
        n = self.n
        with open(path, "w", newline="") as fh:
            label = self.target.value if self.delta is None else f"{self.target.value}(delta={self.delta!r})"
            fh.write(f"# target={label} bandwidth={self.bandwidth!r} cv_score={self.cv_score!r}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "u", "fitted"])
            for t in range(n):
                w.writerow([t + 1, repr((t + 1) / n), repr(float(self.values[t]))])


def _taps(n, b, config, leave_one_out=False):
    # taps[L + d] = K(d / (n b)) for d = -L..L; zero tails trimmed
    h = n * b
    d = np.arange(-(n - 1), n)
    k = config.kernel_fn(d / h)
    nz = np.flatnonzero(k)
    half = int(max(abs(d[nz[0]]), abs(d[nz[-1]]))) if nz.size else 0
    centre = n - 1
    k = k[centre - half : centre + half + 1].copy()
    if leave_one_out:
        k[half] = 0.0
    return k, half


def _conv(y, taps, half):
    n = y.shape[0]
    return np.convolve(y, taps)[half : half + n]


def kernel_weights(t: int, n: int, b: float, config: KernelConfig | None = None) -> np.ndarray:
    """Weights ``w_tj(b) = (nb)^{-1} K((t - j)/(nb))`` for ``j = 1..n``.

    ``t`` is 1-based.  With ``normalize_weights`` the row is rescaled to
    sum to one.
    """
    config = config or KernelConfig()
    if not 1 <= t <= n:
        raise UsageError(f"t must lie in 1..{n}, got {t}")
    if not b > 0:
        raise UsageError(f"bandwidth must be positive, got {b}")
    j = np.arange(1, n + 1)
    w = config.kernel_fn((t - j) / (n * b)) / (n * b)
    if config.normalize_weights:
        s = w.sum()
        if s == 0.0:
            raise DegenerateBandwidth(f"kernel weights underflow at t={t}, b={b}")
        w = w / s
    return w


def smooth(response, b: float, config: KernelConfig | None = None, target=None) -> np.ndarray:
    """Kernel-smoothed values of ``response`` at every design point."""
    config = config or KernelConfig()
    y = np.asarray(response, dtype=float)
    n = y.shape[0]
    if n < 2:
        raise InsufficientData("smoothing needs at least two points")
    if not b > 0:
        raise UsageError(f"bandwidth must be positive, got {b}")
    taps, half = _taps(n, b, config)
    num = _conv(y, taps, half)
    if config.normalize_weights:
        den = _conv(np.ones(n), taps, half)
        if np.any(den == 0.0):
            raise DegenerateBandwidth(f"kernel weights underflow for b={b}")
        fitted = num / den
    else:
        fitted = num / (n * b)
    if target is not None and Target(target) is Target.PROBABILITY:
        fitted = np.clip(fitted, 0.0, 1.0)
    return fitted


def loo_fitted(response, b: float, config: KernelConfig | None = None) -> np.ndarray:
    """Fit at each ``t`` with observation ``t`` left out."""
    config = config or KernelConfig()
    y = np.asarray(response, dtype=float)
    n = y.shape[0]
    taps, half = _taps(n, b, config, leave_one_out=True)
    num = _conv(y, taps, half)
    if config.normalize_weights:
        den = _conv(np.ones(n), taps, half)
        if np.any(den == 0.0):
            raise DegenerateBandwidth(f"leave-one-out weights underflow for b={b}")
        return num / den
    return num / (n * b)


def cv_objective(response, b: float, config: KernelConfig | None = None) -> float:
    config = config or KernelConfig()
    y = np.asarray(response, dtype=float)
    resid = loo_fitted(y, b, config) - y
    return float(np.sum(np.square(resid[:: config.cv_stride])))


def loocv_bandwidth(response, config: KernelConfig | None = None, return_path=False):
    """Grid search for the bandwidth minimising the leave-one-out criterion.

    Returns ``(bandwidth, score)``; with ``return_path=True`` the scores of
    the whole grid are returned as a third element (``inf`` where the
    bandwidth is degenerate).  Scores equal up to rounding are tied and
    the smaller bandwidth wins.
    """
    config = config or KernelConfig()
    y = np.asarray(response, dtype=float)
    if y.shape[0] < 3:
        raise InsufficientData("cross-validation needs at least three points")
    grid = np.asarray(config.bandwidth_grid)
    scores = np.full(grid.shape[0], np.inf)
    for i, b in enumerate(grid):
        try:
            scores[i] = cv_objective(y, b, config)
        except DegenerateBandwidth:
            continue
    if not np.isfinite(scores).any():
        raise AllBandwidthsDegenerate(f"every bandwidth in the grid is degenerate for n={y.shape[0]}")
    best = scores.min()
    tol = 1e-12 * best + 1e-15 * float(np.sum(np.square(y)))
    i = int(np.flatnonzero(scores <= best + tol)[0])
    out = (float(grid[i]), float(scores[i]))
    return out + (scores,) if return_path else out


def _fit_curve(y, config, target, delta=None):
    if config.selected_bandwidth is not None:
        b = float(config.selected_bandwidth)
        score = cv_objective(y, b, config) if y.shape[0] >= 3 else np.nan
    else:
        b, score = loocv_bandwidth(y, config)
    fitted = smooth(y, b, config, target=target)
    fitted.setflags(write=False)
    return CurveEstimate(target=target, values=fitted, bandwidth=b, cv_score=score, delta=delta)


def estimate_probability(series: ReturnSeries, config: KernelConfig | None = None) -> CurveEstimate:
    """Smoothed ``P(a_t = 1)`` with a cross-validated bandwidth."""
    return _fit_curve(np.asarray(series.indicators), config or KernelConfig(), Target.PROBABILITY)


def estimate_power_moment(
    series: ReturnSeries, spec: PowerSpec, config: KernelConfig | None = None
) -> CurveEstimate:
    """Smoothed ``E|r_t|^delta`` with a cross-validated bandwidth."""
    y = np.asarray(power_transform(series, spec).values)
    return _fit_curve(y, config or KernelConfig(), Target.MOMENT, delta=spec.delta)


class KernelSmoother(BaseEstimator):
    """Nadaraya-Watson smoother of a sequence observed at ``t/n``.

    Parameters
    ----------
    bandwidth : float or None, default=None
        Fixed bandwidth in rescaled time.  ``None`` selects it by
        leave-one-out cross-validation over ``bandwidth_grid``.
    bandwidth_grid : sequence of float or None, default=None
        Candidate bandwidths in (0, 1).  ``None`` uses 30 log-spaced
        values between 0.005 and 0.5.
    normalize_weights : bool, default=True
        Divide each weight row by its sum.  ``False`` keeps the raw
        ``(nb)^{-1} K(.)`` weights.
    target : {'moment', 'probability'}, default='moment'
        ``'probability'`` clips the fitted curve to [0, 1].
    cv_stride : int, default=1
        Evaluate the CV criterion on every ``cv_stride``-th point.
    kernel : str, default='gaussian'

    Attributes
    ----------
    bandwidth_ : float
    cv_score_ : float
    cv_path_ : ndarray of shape (n_grid,) or None
    fitted_ : ndarray of shape (n,)
    """

    def __init__(
        self,
        bandwidth=None,
        bandwidth_grid=None,
        normalize_weights=True,
        target="moment",
        cv_stride=1,
        kernel="gaussian",
    ):
        self.bandwidth = bandwidth
        self.bandwidth_grid = bandwidth_grid
        self.normalize_weights = normalize_weights
        self.target = target
        self.cv_stride = cv_stride
        self.kernel = kernel

    def _config(self):
        return KernelConfig(
            kernel=self.kernel,
            bandwidth_grid=DEFAULT_GRID if self.bandwidth_grid is None else tuple(self.bandwidth_grid),
            selected_bandwidth=self.bandwidth,
            normalize_weights=self.normalize_weights,
            cv_stride=self.cv_stride,
        )

    def fit(self, y, X=None):
        y = check_returns(y)
        config = self._config()
        target = Target(self.target)
        if self.bandwidth is None:
            b, score, path = loocv_bandwidth(y, config, return_path=True)
            self.cv_path_ = path
        else:
            b, score = float(self.bandwidth), cv_objective(y, self.bandwidth, config)
            self.cv_path_ = None
        self.config_ = replace(config, selected_bandwidth=b)
        self.bandwidth_ = b
        self.cv_score_ = score
        self.fitted_ = smooth(y, b, config, target=target)
        self.y_ = y
        return self

    def predict(self, u=None):
        """Curve at rescaled times ``u`` in (0, 1]; the design points by default."""
        check_is_fitted(self, "fitted_")
        if u is None:
            return self.fitted_.copy()
        u = np.atleast_1d(np.asarray(u, dtype=float))
        n = self.y_.shape[0]
        h = n * self.bandwidth_
        j = np.arange(1, n + 1)
        k = self.config_.kernel_fn((u[:, None] * n - j[None, :]) / h)
        if self.normalize_weights:
            out = (k @ self.y_) / k.sum(axis=1)
        else:
            out = (k @ self.y_) / h
        if Target(self.target) is Target.PROBABILITY:
            out = np.clip(out, 0.0, 1.0)
        return out

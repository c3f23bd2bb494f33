"""Classical, probability-robust (RP) and probability-and-variance-robust
(RPV) power autocorrelations, portmanteau statistics and the plug-in
asymptotic variances of the robust versions.

All autocovariances use the ``n^{-1}`` normalisation over ``t = 1+h..n``:

    gamma(h) = n^{-1} sum_t c_t c_{t-h},    rho(h) = gamma(h) / gamma(0)

where ``c_t`` is ``|r_t|^delta`` minus a centring term that depends on the
method: the overall mean (classical), ``mean * p_t / mean(p)`` for a zero
return probability curve ``p`` (RP), or a power moment curve (RPV).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .core import (
    PowerSeries,
    PowerSpec,
    ReturnSeries,
    build_series,
    check_curve,
    power_transform,
)
from .exceptions import (
    InvalidLevel,
    NonPositiveCurveMean,
    TooFewNonzero,
    UsageError,
    ZeroVariance,
)
from .kernel import (
    CurveEstimate,
    DEFAULT_GRID,
    KernelConfig,
    Target,
    estimate_power_moment,
    estimate_probability,
)

__all__ = [
    "Method",
    "AutocorrSet",
    "AsymptoticVariance",
    "Chi2Result",
    "autocovariances",
    "classical_autocorr",
    "rp_autocorr",
    "rpv_autocorr",
    "rp_centering",
    "rpv_centering",
    "portmanteau_stat",
    "chi2_sf",
    "chi2_quantile",
    "chi2_test",
    "plugin_variance_rp",
    "plugin_variance_rpv",
    "compute_autocorr",
    "PowerAutocorrelation",
]

MIN_NONZERO = 30


class Method(str, Enum):
    CLASSICAL = "classical"
    RP = "rp"
    RPV = "rpv"


@dataclass(frozen=True)
class AutocorrSet:
    """Power autocorrelations ``rho(1..L)`` under one method.

    ``gamma`` holds the autocovariances for lags ``0..L`` and ``centered``
    the per-observation centred powers, reused by the wild bootstrap.
    """

    method: Method
    delta: float
    rho: np.ndarray
    gamma: np.ndarray
    centered: np.ndarray

    @property
    def gamma0(self) -> float:
        return float(self.gamma[0])

    @property
    def max_lag(self) -> int:
        return int(self.rho.shape[0])

    @property
    def n(self) -> int:
        return int(self.centered.shape[0])

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "delta": self.delta,
            "n": self.n,
            "gamma0": self.gamma0,
            "rho": [float(x) for x in self.rho],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lag", "rho", "method", "delta"])
            for h, r in enumerate(self.rho, start=1):
                w.writerow([h, repr(float(r)), self.method.value, repr(self.delta)])


@dataclass(frozen=True)
class AsymptoticVariance:
    """Plug-in limit variance ``numerator / denominator`` of ``sqrt(n) rho(h)``."""

    kind: Method
    numerator: float
    denominator: float

    @property
    def value(self) -> float:
        return self.numerator / self.denominator


@dataclass(frozen=True)
class Chi2Result:
    statistic: float
    dof: int
    alpha: float
    critical_value: float
    p_value: float

    @property
    def reject(self) -> bool:
        return self.statistic > self.critical_value


def autocovariances(centered, max_lag: int) -> np.ndarray:
    """``gamma(h) = n^{-1} sum_{t>h} c_t c_{t-h}`` for ``h = 0..max_lag``."""
    c = np.asarray(centered, dtype=float)
    n = c.shape[0]
    return np.array([np.dot(c[h:], c[: n - h]) / n for h in range(max_lag + 1)])


def _finish(method, delta, centered, max_lag):
    gamma = autocovariances(centered, max_lag)
    if not gamma[0] > 0:
        raise ZeroVariance(f"{method.value}: lag-0 autocovariance is {gamma[0]!r}")
    rho = gamma[1:] / gamma[0]
    for a in (gamma, rho, centered):
        a.setflags(write=False)
    return AutocorrSet(method=method, delta=float(delta), rho=rho, gamma=gamma, centered=centered)


def classical_autocorr(power: PowerSeries, m: int) -> AutocorrSet:
    PowerSpec(max_lag=m).check_length(power.n)
    c = np.asarray(power.values) - power.mean
    return _finish(Method.CLASSICAL, power.delta, c, m)


def rp_centering(series: ReturnSeries, spec: PowerSpec, prob_curve) -> np.ndarray:
    p = check_curve(prob_curve, series.n, "prob_curve")
    if np.any(p < 0) or np.any(p > 1):
        raise UsageError("prob_curve values must lie in [0, 1]")
    pbar = p.mean()
    if not pbar > 0:
        raise NonPositiveCurveMean("prob_curve has non-positive mean")
    power = power_transform(series, spec)
    return np.asarray(power.values) - power.mean * (p / pbar)


def rpv_centering(series: ReturnSeries, spec: PowerSpec, moment_curve) -> np.ndarray:
    e = check_curve(moment_curve, series.n, "moment_curve")
    if np.any(e < 0):
        raise UsageError("moment_curve values must be non-negative")
    if not e.mean() > 0:
        raise NonPositiveCurveMean("moment_curve is identically zero")
    return np.asarray(power_transform(series, spec).values) - e


def rp_autocorr(series: ReturnSeries, spec: PowerSpec, prob_curve) -> AutocorrSet:
    """Autocorrelations recentred by a zero-return probability curve.

    The curve may be the true ``P(a_t = 1)`` or a kernel estimate.
    """
    spec.check_length(series.n)
    c = rp_centering(series, spec, prob_curve)
    return _finish(Method.RP, spec.delta, c, spec.max_lag)


def rpv_autocorr(series: ReturnSeries, spec: PowerSpec, moment_curve) -> AutocorrSet:
    spec.check_length(series.n)
    c = rpv_centering(series, spec, moment_curve)
    return _finish(Method.RPV, spec.delta, c, spec.max_lag)


def portmanteau_stat(ac: AutocorrSet, m: int | None = None) -> float:
    """``n * sum_{h<=m} rho(h)^2`` (all stored lags when ``m`` is None)."""
    rho = ac.rho if m is None else ac.rho[:m]
    return float(ac.n * np.dot(rho, rho))


def chi2_sf(x: float, dof: int) -> float:
    # regularized upper incomplete gamma Q(dof/2, x/2)
    if x <= 0:
        return 1.0
    return float(special.gammaincc(dof / 2.0, x / 2.0))


def chi2_quantile(dof: int, alpha: float) -> float:
    """Upper ``alpha`` critical value of the chi-square distribution."""
    return float(2.0 * special.gammainccinv(dof / 2.0, alpha))


def chi2_test(stat: float, m: int, alpha: float = 0.05) -> Chi2Result:
    if not 0.0 < alpha < 1.0:
        raise InvalidLevel(f"alpha must lie in (0, 1), got {alpha}")
    if m < 1:
        raise UsageError("degrees of freedom must be >= 1")
    if stat < 0:
        raise UsageError("portmanteau statistics are non-negative")
    return Chi2Result(
        statistic=float(stat),
        dof=int(m),
        alpha=float(alpha),
        critical_value=chi2_quantile(m, alpha),
        p_value=chi2_sf(stat, m),
    )


def _conditional_moments(values, delta):
    x = np.abs(values) ** delta
    return float(x.mean()), float(np.mean(x * x))


def plugin_variance_rp(series: ReturnSeries, spec: PowerSpec, prob_curve) -> AsymptoticVariance:
    """Plug-in ``varsigma = num / den`` for the RP autocorrelations.

    Moments given ``a_t = 1`` are averages over the non-zero returns, and
    the integrals of ``g^k`` are Riemann sums of the supplied curve.
    """
    p = check_curve(prob_curve, series.n, "prob_curve")
    nz = series.nonzero
    if nz.shape[0] < MIN_NONZERO:
        raise TooFewNonzero(f"need {MIN_NONZERO} non-zero returns, got {nz.shape[0]}")
    e1, e2 = _conditional_moments(nz, spec.delta)
    g1, g2, g3, g4 = (float(np.mean(p**k)) for k in (1, 2, 3, 4))
    num = e2**2 * g2 - 2.0 * e2 * e1**2 * g3 + e1**4 * g4
    den = (e2 * g1 - e1**2 * g2) ** 2
    if not den > 0:
        raise ZeroVariance("plug-in denominator vanishes")
    return AsymptoticVariance(kind=Method.RP, numerator=num, denominator=den)


def plugin_variance_rpv(
    series: ReturnSeries, spec: PowerSpec, moment_curve, prob_curve, prob_floor: float = 0.01
) -> AsymptoticVariance:
    """Plug-in ``zeta = num / den`` for the RPV autocorrelations.

    ``v^delta`` is recovered up to scale as ``moment_curve / prob_curve``
    (probabilities floored at ``prob_floor``); the innovation moments are
    taken from the non-zero returns standardised by it.  The ratio does
    not depend on the arbitrary scale.
    """
    n = series.n
    e = check_curve(moment_curve, n, "moment_curve")
    p = check_curve(prob_curve, n, "prob_curve")
    mask = np.asarray(series.indicators) == 1
    if mask.sum() < MIN_NONZERO:
        raise TooFewNonzero(f"need {MIN_NONZERO} non-zero returns, got {int(mask.sum())}")
    vd = e / np.maximum(p, prob_floor)
    if np.any(vd[mask] <= 0):
        raise ZeroVariance("moment_curve vanishes where returns are non-zero")
    eta = (np.abs(np.asarray(series.values)[mask]) ** spec.delta) / vd[mask]
    e1, e2 = float(eta.mean()), float(np.mean(eta * eta))
    v2, v4 = vd**2, vd**4
    num = (
        e2**2 * np.mean(v4 * p**2)
        - 2.0 * e2 * e1**2 * np.mean(v4 * p**3)
        + e1**4 * np.mean(v4 * p**4)
    )
    den = (e2 * np.mean(v2 * p) - e1**2 * np.mean(v2 * p**2)) ** 2
    if not den > 0:
        raise ZeroVariance("plug-in denominator vanishes")
    return AsymptoticVariance(kind=Method.RPV, numerator=float(num), denominator=float(den))


def compute_autocorr(series, spec, method, curve=None, kernel_config=None):
    """Dispatch on ``method``; estimate the nuisance curve when not given.

    Returns ``(AutocorrSet, CurveEstimate or None)``.  A user supplied
    curve is wrapped in a CurveEstimate with NaN bandwidth.
    """
    method = Method(method)
    if method is Method.CLASSICAL:
        spec.check_length(series.n)
        return classical_autocorr(power_transform(series, spec), spec.max_lag), None
    if curve is None:
        if method is Method.RP:
            curve = estimate_probability(series, kernel_config)
        else:
            curve = estimate_power_moment(series, spec, kernel_config)
    elif not isinstance(curve, CurveEstimate):
        target = Target.PROBABILITY if method is Method.RP else Target.MOMENT
        curve = CurveEstimate(
            target=target,
            values=np.asarray(curve, dtype=float),
            bandwidth=np.nan,
            cv_score=np.nan,
            delta=None if method is Method.RP else spec.delta,
        )
    fn = rp_autocorr if method is Method.RP else rpv_autocorr
    return fn(series, spec, curve.values), curve


class PowerAutocorrelation(BaseEstimator):
    """Power autocorrelations of an illiquid return series.

    Parameters
    ----------
    method : {'classical', 'rp', 'rpv'}, default='classical'
        ``'rp'`` recentres by a kernel estimate of the non-zero return
        probability, ``'rpv'`` by a kernel estimate of ``E|r_t|^delta``.
    delta : float, default=1.0
        Power applied to the absolute returns.
    max_lag : int, default=5
    zero_threshold : float, default=0.0
        Returns with ``|r_t| <= zero_threshold`` count as zeros.
    bandwidth : float or None, default=None
        Fixed smoothing bandwidth; ``None`` uses leave-one-out CV.
    bandwidth_grid : sequence of float or None, default=None
    normalize_weights : bool, default=True

    Attributes
    ----------
    rho_ : ndarray of shape (max_lag,)
    gamma0_ : float
    statistic_ : float
        Portmanteau statistic ``n * sum rho(h)^2``.
    autocorr_ : AutocorrSet
    curve_ : CurveEstimate or None
    series_ : ReturnSeries
    """

    def __init__(
        self,
        method="classical",
        delta=1.0,
        max_lag=5,
        zero_threshold=0.0,
        bandwidth=None,
        bandwidth_grid=None,
        normalize_weights=True,
    ):
        self.method = method
        self.delta = delta
        self.max_lag = max_lag
        self.zero_threshold = zero_threshold
        self.bandwidth = bandwidth
        self.bandwidth_grid = bandwidth_grid
        self.normalize_weights = normalize_weights

    def _kernel_config(self):
        return KernelConfig(
            bandwidth_grid=DEFAULT_GRID if self.bandwidth_grid is None else tuple(self.bandwidth_grid),
            selected_bandwidth=self.bandwidth,
            normalize_weights=self.normalize_weights,
        )

    def fit(self, X, y=None, curve=None):
        """Compute the autocorrelations of the returns ``X``.

        ``curve`` optionally supplies the nuisance curve (probability for
        RP, power moment for RPV) instead of estimating it.
        """
        series = X if isinstance(X, ReturnSeries) else build_series(X, self.zero_threshold)
        spec = PowerSpec(delta=self.delta, max_lag=self.max_lag)
        ac, est = compute_autocorr(series, spec, self.method, curve, self._kernel_config())
        self.series_ = series
        self.autocorr_ = ac
        self.curve_ = est
        self.rho_ = np.array(ac.rho)
        self.gamma0_ = ac.gamma0
        self.statistic_ = portmanteau_stat(ac)
        self.n_ = series.n
        return self

    def transform(self, X=None):
        check_is_fitted(self, "rho_")
        return self.rho_.copy()

    def chi2_test(self, alpha=0.05) -> Chi2Result:
        """Asymptotic chi-square portmanteau test.

        Only calibrated for the classical method with a constant zero
        return probability; the robust methods should use the wild
        bootstrap.
        """
        check_is_fitted(self, "rho_")
        return chi2_test(self.statistic_, self.max_lag, alpha)

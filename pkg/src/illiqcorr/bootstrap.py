"""Wild bootstrap portmanteau tests and autocorrelation bands.

Replicate ``b`` multiplies the centred powers by i.i.d. draws ``xi_t``
from its own random stream ``(seed, b)``.  Replicates are processed in
fixed-size chunks, so the outcome is bitwise identical whatever the
number of worker threads.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._rng import substream
from .core import PowerSpec, ReturnSeries, build_series
from .exceptions import InvalidLevel, LengthMismatch, UsageError
from .kernel import DEFAULT_GRID, KernelConfig
from .powercorr import AutocorrSet, Method, compute_autocorr, portmanteau_stat

__all__ = [
    "MultiplierDist",
    "BootstrapOutcome",
    "draw_multipliers",
    "bootstrap_autocov",
    "bootstrap_autocorr",
    "run_test",
    "WildBootstrapTest",
]

_SQRT5 = np.sqrt(5.0)
MAMMEN_LOW = -0.5 * (_SQRT5 - 1.0)
MAMMEN_HIGH = 0.5 * (_SQRT5 + 1.0)
MAMMEN_P_LOW = 0.5 * (_SQRT5 + 1.0) / _SQRT5

CHUNK = 64


class MultiplierDist(str, Enum):
    MAMMEN = "mammen"
    RADEMACHER = "rademacher"

    def support(self):
        """``(values, probabilities)`` of the two-point distribution."""
        if self is MultiplierDist.MAMMEN:
            return (MAMMEN_LOW, MAMMEN_HIGH), (MAMMEN_P_LOW, 1.0 - MAMMEN_P_LOW)
        return (-1.0, 1.0), (0.5, 0.5)


def draw_multipliers(n: int, dist, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise UsageError("need at least one multiplier")
    (lo, hi), (p_lo, _) = MultiplierDist(dist).support()
    return np.where(rng.random(n) < p_lo, lo, hi)


def bootstrap_autocov(centered, xi, h: int) -> float:
    """``n^{-1} sum_{t>h} xi_t c_t xi_{t-h} c_{t-h}``."""
    c = np.asarray(centered, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if c.shape != xi.shape:
        raise LengthMismatch(f"centred series has shape {c.shape}, multipliers {xi.shape}")
    n = c.shape[0]
    if not 0 <= h < n:
        raise UsageError(f"lag {h} out of range for n={n}")
    y = xi * c
    return float(np.dot(y[h:], y[: n - h]) / n)


@dataclass(frozen=True)
class BootstrapOutcome:
    method: Method
    observed_stat: float
    replicate_stats: np.ndarray
    p_value: float
    lags: np.ndarray
    rho_observed: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    alpha: float
    max_lag: int
    B: int
    seed: int
    multiplier: MultiplierDist

    @property
    def reject(self) -> bool:
        return self.p_value <= self.alpha

    @property
    def outside_band(self) -> np.ndarray:
        return (self.rho_observed < self.lower) | (self.rho_observed > self.upper)

    def to_dict(self, replicates=False) -> dict:
        d = {
            "method": self.method.value,
            "observed_stat": self.observed_stat,
            "p_value": self.p_value,
            "reject": bool(self.reject),
            "alpha": self.alpha,
            "max_lag": self.max_lag,
            "B": self.B,
            "seed": self.seed,
            "multiplier": self.multiplier.value,
            "bands": [
                {"lag": int(h), "rho": float(r), "lower": float(lo), "upper": float(hi)}
                for h, r, lo, hi in zip(self.lags, self.rho_observed, self.lower, self.upper)
            ],
        }
        if replicates:
            d["replicate_stats"] = [float(s) for s in self.replicate_stats]
        return d

    def to_json(self, replicates=False) -> str:
        return json.dumps(self.to_dict(replicates), indent=2)

    def bands_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lag", "rho_observed", "lower", "upper"])
            for h, r, lo, hi in zip(self.lags, self.rho_observed, self.lower, self.upper):
                w.writerow([int(h), repr(float(r)), repr(float(lo)), repr(float(hi))])


def _chunk_replicates(c, start, stop, seed, dist, max_lag, gamma0):
    n = c.shape[0]
    xi = np.stack([draw_multipliers(n, dist, substream(seed, b)) for b in range(start, stop)])
    y = xi * c
    den = np.full(stop - start, gamma0) if gamma0 is not None else np.einsum("ij,ij->i", y, y) / n
    rho = np.empty((stop - start, max_lag))
    for h in range(1, max_lag + 1):
        rho[:, h - 1] = np.einsum("ij,ij->i", y[:, h:], y[:, : n - h]) / n / den
    return rho


def bootstrap_autocorr(
    ac: AutocorrSet,
    B: int,
    dist="mammen",
    seed: int = 0,
    max_lag: int | None = None,
    denominator: str = "observed",
    n_jobs: int = 1,
) -> np.ndarray:
    """Replicate autocorrelations, array of shape ``(B, max_lag)``.

    ``denominator='observed'`` divides every replicate autocovariance by
    the observed ``gamma(0)``; ``'bootstrap'`` uses the replicate's own.
    """
    if denominator not in ("observed", "bootstrap"):
        raise UsageError(f"denominator must be 'observed' or 'bootstrap', got {denominator!r}")
    L = ac.max_lag if max_lag is None else int(max_lag)
    c = np.asarray(ac.centered)
    g0 = ac.gamma0 if denominator == "observed" else None
    dist = MultiplierDist(dist)
    bounds = [(s, min(s + CHUNK, B)) for s in range(0, B, CHUNK)]

    def job(bnd):
        return _chunk_replicates(c, bnd[0], bnd[1], seed, dist, L, g0)

    if n_jobs is None or n_jobs <= 1 or len(bounds) == 1:
        parts = [job(bnd) for bnd in bounds]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as ex:
            parts = list(ex.map(job, bounds))
    return np.concatenate(parts, axis=0)


def run_test(
    series: ReturnSeries,
    spec: PowerSpec,
    method="rp",
    curve=None,
    B: int = 499,
    dist="mammen",
    alpha: float = 0.05,
    seed: int = 0,
    band_lags=None,
    denominator: str = "observed",
    kernel_config: KernelConfig | None = None,
    n_jobs: int = 1,
    autocorr: AutocorrSet | None = None,
) -> BootstrapOutcome:
    """Wild bootstrap portmanteau test of no power autocorrelation up to ``spec.max_lag``.

    The nuisance curve is estimated once on the data (unless supplied) and
    kept fixed across replicates.  ``p = (1 + #{S*_b >= S}) / (B + 1)``;
    bands are the raw ``alpha/2`` and ``1 - alpha/2`` quantiles of the
    replicate autocorrelations at ``band_lags`` (default ``1..max_lag``).
    ``autocorr`` lets callers pass autocorrelations already computed up to
    the largest lag needed.
    """
    if B < 99:
        raise UsageError(f"use at least 99 bootstrap replicates, got {B}")
    if not 0.0 < alpha < 1.0:
        raise InvalidLevel(f"alpha must lie in (0, 1), got {alpha}")
    m = spec.max_lag
    lags = np.arange(1, m + 1) if band_lags is None else np.array(sorted(set(int(h) for h in band_lags)))
    if lags.size and lags[0] < 1:
        raise UsageError("band lags must be positive")
    L = max(m, int(lags[-1]) if lags.size else m)
    if autocorr is None:
        wide = PowerSpec(delta=spec.delta, max_lag=L)
        autocorr, _ = compute_autocorr(series, wide, method, curve, kernel_config)
    elif autocorr.max_lag < L:
        raise UsageError(f"autocorr holds {autocorr.max_lag} lags, {L} needed")
    rho_star = bootstrap_autocorr(autocorr, B, dist, seed, L, denominator, n_jobs)
    n = autocorr.n
    stats = n * np.einsum("ij,ij->i", rho_star[:, :m], rho_star[:, :m])
    observed = portmanteau_stat(autocorr, m)
    p_value = (1.0 + np.count_nonzero(stats >= observed)) / (B + 1.0)
    idx = lags - 1
    lower = np.quantile(rho_star[:, idx], alpha / 2.0, axis=0)
    upper = np.quantile(rho_star[:, idx], 1.0 - alpha / 2.0, axis=0)
    for a in (stats, lags, lower, upper):
        a.setflags(write=False)
    rho_obs = np.array(autocorr.rho[idx])
    rho_obs.setflags(write=False)
    return BootstrapOutcome(
        method=autocorr.method,
        observed_stat=observed,
        replicate_stats=stats,
        p_value=float(p_value),
        lags=lags,
        rho_observed=rho_obs,
        lower=lower,
        upper=upper,
        alpha=float(alpha),
        max_lag=m,
        B=int(B),
        seed=int(seed),
        multiplier=MultiplierDist(dist),
    )


class WildBootstrapTest(BaseEstimator):
    """Wild bootstrap portmanteau test for power autocorrelations.

    Parameters
    ----------
    method : {'rp', 'rpv', 'classical'}, default='rp'
    delta : float, default=1.0
    max_lag : int, default=5
        Number of lags in the portmanteau statistic.
    n_bootstrap : int, default=499
    multiplier : {'mammen', 'rademacher'}, default='mammen'
    alpha : float, default=0.05
        Test level; bands are at level ``1 - alpha``.
    band_lags : sequence of int or None, default=None
        Lags at which bands are computed, ``1..max_lag`` by default.
    denominator : {'observed', 'bootstrap'}, default='observed'
    zero_threshold, bandwidth, bandwidth_grid
        As in :class:`~illiqcorr.powercorr.PowerAutocorrelation`.
    random_state : int, default=0
    n_jobs : int, default=1
        Worker threads; results do not depend on it.

    Attributes
    ----------
    outcome_ : BootstrapOutcome
    statistic_, p_value_ : float
    reject_ : bool
    bands_ : ndarray of shape (n_band_lags, 2)
    """

    def __init__(
        self,
        method="rp",
        delta=1.0,
        max_lag=5,
        n_bootstrap=499,
        multiplier="mammen",
        alpha=0.05,
        band_lags=None,
        denominator="observed",
        zero_threshold=0.0,
        bandwidth=None,
        bandwidth_grid=None,
        random_state=0,
        n_jobs=1,
    ):
        self.method = method
        self.delta = delta
        self.max_lag = max_lag
        self.n_bootstrap = n_bootstrap
        self.multiplier = multiplier
        self.alpha = alpha
        self.band_lags = band_lags
        self.denominator = denominator
        self.zero_threshold = zero_threshold
        self.bandwidth = bandwidth
        self.bandwidth_grid = bandwidth_grid
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y=None, curve=None):
        series = X if isinstance(X, ReturnSeries) else build_series(X, self.zero_threshold)
        spec = PowerSpec(delta=self.delta, max_lag=self.max_lag)
        config = KernelConfig(
            bandwidth_grid=DEFAULT_GRID if self.bandwidth_grid is None else tuple(self.bandwidth_grid),
            selected_bandwidth=self.bandwidth,
        )
        lags = np.arange(1, self.max_lag + 1) if self.band_lags is None else self.band_lags
        L = max(self.max_lag, max(lags))
        ac, est = compute_autocorr(series, PowerSpec(self.delta, L), self.method, curve, config)
        out = run_test(
            series,
            spec,
            self.method,
            B=self.n_bootstrap,
            dist=self.multiplier,
            alpha=self.alpha,
            seed=self.random_state,
            band_lags=lags,
            denominator=self.denominator,
            n_jobs=self.n_jobs,
            autocorr=ac,
        )
        self.autocorr_ = ac
        self.curve_ = est
        self.outcome_ = out
        self.statistic_ = out.observed_stat
        self.p_value_ = out.p_value
        self.reject_ = out.reject
        self.bands_ = np.column_stack([out.lower, out.upper])
        return self

    def transform(self, X=None):
        check_is_fitted(self, "outcome_")
        return np.array(self.outcome_.rho_observed)

"""Simulated illiquid return series.

A design combines a latent volatility type with a censoring scheme:

* volatility ``a``: ``sigma_t = 1``; ``b``: GARCH(1,1); ``c``: deterministic
  variance shift ``sigma_t = v(t/n)``;
* probability ``1``: trade indicator Bernoulli(0.5); ``2``: Bernoulli with
  a quick increase from 0.2 to 0.9 over ``t/n in (0.4, 0.6]``.

For ``a`` and ``c`` the indicator is additionally thinned by the same
innovation that drives the return: ``|eta_t| <= threshold`` forces a zero.
For ``b`` returns below the median of the latent path are zeroed instead.
Designs are named by their code, e.g. ``"a2"`` or ``"c2"``; ``"b"`` is
short for ``"b1"``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import integrate, stats

from .core import ReturnSeries, build_series
from .exceptions import InvalidConfig, UnsupportedForGarch

__all__ = [
    "Volatility",
    "ProbabilityPath",
    "Garch11",
    "DgpConfig",
    "SimulatedPanel",
    "THINNED_PROB",
    "DEFAULT_THINNING_THRESHOLD",
    "LITERAL_THINNING_THRESHOLD",
    "variance_path",
    "probability_shift",
    "thinned_partial_moment",
    "generate",
    "true_curves",
    "true_prob_curve",
]

THINNED_PROB = 0.9
# P(|N(0,1)| > c) = 0.9
DEFAULT_THINNING_THRESHOLD = float(stats.norm.ppf(0.5 + (1.0 - THINNED_PROB) / 2.0))
# gives P(|N(0,1)| > c) ~ 0.95 rather than 0.9
LITERAL_THINNING_THRESHOLD = 0.063


class Volatility(str, Enum):
    CONSTANT = "a"
    GARCH = "b"
    SHIFT = "c"


class ProbabilityPath(str, Enum):
    CONSTANT = "1"
    SHIFT = "2"


@dataclass(frozen=True)
class Garch11:
    omega: float = 0.01
    alpha: float = 0.1
    beta: float = 0.8

    def __post_init__(self):
        if self.omega <= 0 or self.alpha < 0 or self.beta < 0:
            raise InvalidConfig("GARCH parameters must satisfy omega > 0, alpha >= 0, beta >= 0")
        if self.alpha + self.beta >= 1:
            raise InvalidConfig("GARCH(1,1) needs alpha + beta < 1 for a finite variance")

    @property
    def unconditional_variance(self) -> float:
        return self.omega / (1.0 - self.alpha - self.beta)


def variance_path(u):
    """Volatility multiplier ``v(u)``: 1, then linear up to 2 over (0.4, 0.6]."""
    u = np.asarray(u, dtype=float)
    return np.where(u <= 0.4, 1.0, np.where(u <= 0.6, 5.0 * u - 1.0, 2.0))


def probability_shift(u):
    """Trade probability path: 0.2, then linear up to 0.9 over (0.4, 0.6]."""
    u = np.asarray(u, dtype=float)
    return np.where(u <= 0.4, 0.2, np.where(u <= 0.6, 3.5 * u - 1.2, 0.9))


@lru_cache(maxsize=64)
def thinned_partial_moment(delta: float, threshold: float) -> float:
    """``E(|eta|^delta 1{|eta| > threshold})`` for standard normal ``eta``."""
    val, _ = integrate.quad(lambda x: x**delta * stats.norm.pdf(x), threshold, np.inf, epsabs=1e-13, epsrel=1e-12)
    return 2.0 * val


@dataclass(frozen=True)
class DgpConfig:
    volatility: Volatility = Volatility.CONSTANT
    probability: ProbabilityPath = ProbabilityPath.CONSTANT
    n: int = 400
    seed: int = 0
    thinning: bool = True
    thinning_threshold: float = DEFAULT_THINNING_THRESHOLD
    constant_prob: float = 0.5
    garch: Garch11 = field(default_factory=Garch11)
    burn_in: int = 500
    median: str = "sample"

    def __post_init__(self):
        try:
            object.__setattr__(self, "volatility", Volatility(self.volatility))
            prob = self.probability
            object.__setattr__(self, "probability", prob if isinstance(prob, ProbabilityPath) else ProbabilityPath(str(prob)))
        except ValueError as exc:
            raise InvalidConfig(str(exc)) from None
        if int(self.n) != self.n or self.n < 10:
            raise InvalidConfig(f"n must be an integer >= 10, got {self.n}")
        if self.volatility is Volatility.GARCH and self.probability is not ProbabilityPath.CONSTANT:
            raise InvalidConfig("the GARCH design is censored at the median; use probability path 1")
        if not 0.0 < self.constant_prob <= 1.0:
            raise InvalidConfig("constant_prob must lie in (0, 1]")
        if self.thinning_threshold < 0:
            raise InvalidConfig("thinning_threshold must be non-negative")
        if self.median not in ("sample", "population"):
            raise InvalidConfig("median must be 'sample' or 'population'")
        if self.burn_in < 0:
            raise InvalidConfig("burn_in must be non-negative")

    @classmethod
    def from_code(cls, code: str, **kwargs) -> "DgpConfig":
        code = code.strip().lower()
        if code == "b":
            code = "b1"
        if len(code) != 2:
            raise InvalidConfig(f"unknown design {code!r}; expected e.g. 'a1', 'a2', 'b', 'c2'")
        return cls(volatility=code[0], probability=code[1], **kwargs)

    @property
    def code(self) -> str:
        return self.volatility.value + self.probability.value

    def with_(self, **changes) -> "DgpConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class SimulatedPanel:
    config: DgpConfig
    latent: np.ndarray
    observed: ReturnSeries
    true_prob_curve: np.ndarray
    true_moment_curve: np.ndarray | None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            self.write_csv(fh)

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "latent", "observed", "a", "true_prob"])
        for t in range(self.config.n):
            w.writerow(
                [
                    t + 1,
                    repr(float(self.latent[t])),
                    repr(float(self.observed.values[t])),
                    int(self.observed.indicators[t]),
                    repr(float(self.true_prob_curve[t])),
                ]
            )


def _design(n):
    return np.arange(1, n + 1) / n


def _trade_prob(config: DgpConfig) -> np.ndarray:
    if config.probability is ProbabilityPath.SHIFT:
        return probability_shift(_design(config.n))
    return np.full(config.n, config.constant_prob)


def true_curves(config: DgpConfig, delta: float = 1.0, moment: bool = True):
    """``(P(a_t = 1), E|r_t|^delta)`` on the design points.

    The GARCH design has no deterministic moment curve: with ``moment=True``
    it raises ``UnsupportedForGarch``, with ``moment=False`` the second
    element is ``None``.
    """
    prob = true_prob_curve(config)
    if config.volatility is Volatility.GARCH:
        if moment:
            raise UnsupportedForGarch("stochastic volatility has no deterministic moment curve")
        return prob, None
    if config.thinning:
        partial = thinned_partial_moment(float(delta), float(config.thinning_threshold))
    else:
        partial = thinned_partial_moment(float(delta), 0.0)
    v = variance_path(_design(config.n)) if config.volatility is Volatility.SHIFT else np.ones(config.n)
    return prob, v**delta * _trade_prob(config) * partial


def true_prob_curve(config: DgpConfig) -> np.ndarray:
    if config.volatility is Volatility.GARCH:
        return np.full(config.n, 0.5)
    p = _trade_prob(config)
    if config.thinning:
        p = p * (2.0 * stats.norm.sf(config.thinning_threshold))
    return p


def _garch_path(config, eta):
    g = config.garch
    total = eta.shape[0]
    r = np.empty(total)
    s2 = g.unconditional_variance
    for t in range(total):
        if t > 0:
            s2 = g.omega + g.alpha * r[t - 1] ** 2 + g.beta * s2
        r[t] = np.sqrt(s2) * eta[t]
    return r[config.burn_in :]


def generate(config: DgpConfig) -> SimulatedPanel:
    """Draw one panel; the same config (including ``seed``) gives the same panel."""
    rng = np.random.default_rng(config.seed)
    n = config.n
    if config.volatility is Volatility.GARCH:
        eta = rng.standard_normal(n + config.burn_in)
        latent = _garch_path(config, eta)
        mu = float(np.median(latent)) if config.median == "sample" else 0.0
        a = latent >= mu
        prob = true_prob_curve(config)
        moment = None
    else:
        eta = rng.standard_normal(n)
        sigma = variance_path(_design(n)) if config.volatility is Volatility.SHIFT else np.ones(n)
        latent = sigma * eta
        a = rng.random(n) < _trade_prob(config)
        if config.thinning:
            a &= np.abs(eta) > config.thinning_threshold
        prob, moment = true_curves(config, 1.0)
    if not a.any():
        # vanishingly rare; keep the panel valid
        a[int(np.argmax(np.abs(latent)))] = True
    observed = build_series(np.where(a, latent, 0.0))
    latent.setflags(write=False)
    prob.setflags(write=False)
    if moment is not None:
        moment.setflags(write=False)
    return SimulatedPanel(
        config=config,
        latent=latent,
        observed=observed,
        true_prob_curve=prob,
        true_moment_curve=moment,
    )

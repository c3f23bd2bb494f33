"""Probability and absolute-return profiles.

Both profiles are cumulative sums normalised to end at one.  Under a
constant trade probability and a constant variance they track the
identity; systematic departures point to nonstationary liquidity or
volatility, and hence to the RP or RPV statistics.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import ReturnSeries
from .exceptions import AllZero, TooFewNonzero

__all__ = ["ProfileKind", "Profile", "probability_profile", "absolute_return_profile"]


class ProfileKind(str, Enum):
    PROBABILITY = "probability"
    ABSOLUTE_RETURN = "absolute_return"


@dataclass(frozen=True)
class Profile:
    kind: ProfileKind
    s: np.ndarray
    values: np.ndarray

    def max_deviation(self) -> float:
        """Sup distance to the identity on the grid."""
        return float(np.max(np.abs(self.values - self.s)))

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "s": self.s.tolist(), "value": self.values.tolist()}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["s", "value", "kind"])
            for s, v in zip(self.s, self.values):
                w.writerow([repr(float(s)), repr(float(v)), self.kind.value])


def _cumulative(weights, kind):
    cs = np.cumsum(weights)
    # dividing by the last partial sum pins the endpoint to exactly one
    values = cs / cs[-1]
    k = weights.shape[0]
    s = np.arange(1, k + 1) / k
    s.setflags(write=False)
    values.setflags(write=False)
    return Profile(kind=kind, s=s, values=values)


def probability_profile(series: ReturnSeries) -> Profile:
    """``p(s) = sum_{t <= ns} a_t / sum_t a_t`` at ``s = k/n``.

    >>> from illiqcorr.core import build_series
    >>> probability_profile(build_series([0.0, 0.0, 1.0, 1.0])).values
    array([0. , 0. , 0.5, 1. ])
    """
    a = np.asarray(series.indicators, dtype=float)
    if a.sum() == 0:
        raise AllZero("probability profile needs at least one nonzero return")
    return _cumulative(a, ProfileKind.PROBABILITY)


def absolute_return_profile(series: ReturnSeries) -> Profile:
    """Cumulative share of ``|r|`` over the nonzero returns, at ``s = j/nu``."""
    x = np.abs(series.nonzero)
    if x.shape[0] < 2:
        raise TooFewNonzero(f"absolute-return profile needs two nonzero returns, got {x.shape[0]}")
    return _cumulative(x, ProfileKind.ABSOLUTE_RETURN)


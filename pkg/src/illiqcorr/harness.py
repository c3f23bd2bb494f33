"""Monte Carlo experiments: rejection and band-exceedance frequencies.

Each replication draws one panel, estimates the nuisance curves by LOOCV,
runs the classical chi-square portmanteau test and the RP/RPV wild
bootstrap tests, and records whether each autocorrelation at the lags of
interest falls outside its nominal band.  Replication ``i`` at length
``n`` uses seeds derived from ``(seed, n, i)`` only, so results do not
depend on the number of worker processes.
"""

from __future__ import annotations

import configparser
import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import stats

from ._rng import subseed
from .bootstrap import MultiplierDist, run_test
from .core import PowerSpec
from .exceptions import IlliqError, InvalidConfig
from .kernel import DEFAULT_GRID, KernelConfig
from .powercorr import Method, chi2_test, compute_autocorr, portmanteau_stat
from .simulate import DgpConfig, generate, true_curves

__all__ = [
    "ExperimentSpec",
    "CellResult",
    "ExperimentResult",
    "run_experiment",
    "emit_tables",
    "load_spec",
    "FULL_R",
    "FULL_B",
]

log = logging.getLogger(__name__)

FULL_R = 5000
FULL_B = 3999
DEFAULT_LAGS = (1, 2, 3, 4, 5, 20, 40, 60)


@dataclass(frozen=True)
class ExperimentSpec:
    """Declarative description of one Monte Carlo experiment.

    Parameters
    ----------
    dgp : DgpConfig or str
        Design template; ``n`` and ``seed`` are overridden per replication.
        A string is read as a design code such as ``"a2"``.
    n_values : tuple of int
        Sample sizes.
    R, B : int
        Replications per sample size and bootstrap replicates per test.
    methods : tuple of str
        Any subset of ``classical``, ``rp``, ``rpv``.
    alpha : float
        Level of the tests and of the bands.
    lags_of_interest : tuple of int
        Lags at which band exceedances are counted.  Lags too large for a
        given ``n`` are reported as missing.
    bandwidth : float, optional
        Fixed bandwidth for both curves.  ``None`` selects by LOOCV in
        every replication.
    oracle_curves : bool
        Use the true nuisance curves instead of kernel estimates.
    workers : int
        Worker processes.  Has no effect on the results.
    """

    dgp: DgpConfig | str = "a1"
    n_values: tuple = (400,)
    R: int = 400
    B: int = 499
    methods: tuple = ("classical", "rp", "rpv")
    alpha: float = 0.05
    lags_of_interest: tuple = DEFAULT_LAGS
    seed: int = 0
    delta: float = 1.0
    max_lag: int = 5
    multiplier: str = "mammen"
    bandwidth: float | None = None
    bandwidth_grid: tuple = DEFAULT_GRID
    denominator: str = "observed"
    oracle_curves: bool = False
    workers: int = 1

    def __post_init__(self):
        dgp = self.dgp
        if isinstance(dgp, str):
            dgp = DgpConfig.from_code(dgp)
        if not isinstance(dgp, DgpConfig):
            raise InvalidConfig(f"dgp must be a DgpConfig or a design code, got {type(dgp).__name__}")
        object.__setattr__(self, "dgp", dgp)
        try:
            object.__setattr__(self, "methods", tuple(Method(m).value for m in self.methods))
            object.__setattr__(self, "multiplier", MultiplierDist(self.multiplier).value)
        except ValueError as exc:
            raise InvalidConfig(str(exc)) from None
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "lags_of_interest", tuple(sorted(set(int(h) for h in self.lags_of_interest))))
        if self.R < 1:
            raise InvalidConfig(f"R must be at least 1, got {self.R}")
        if self.B < 99:
            raise InvalidConfig(f"B must be at least 99, got {self.B}")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidConfig(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.n_values:
            raise InvalidConfig("n_values is empty")
        for n in self.n_values:
            if n <= self.max_lag + 2:
                raise InvalidConfig(f"n={n} is too short for max_lag={self.max_lag}")
        if any(h < 1 for h in self.lags_of_interest):
            raise InvalidConfig("lags_of_interest must be positive")
        if self.oracle_curves and self.dgp.volatility.value == "b" and "rpv" in self.methods:
            raise InvalidConfig("oracle curves are unavailable for RPV under GARCH volatility")
        if self.workers < 1:
            raise InvalidConfig("workers must be at least 1")
        # validate the kernel and power settings early
        self.kernel_config()
        PowerSpec(self.delta, self.max_lag)

    @classmethod
    def full_scale(cls, **kwargs) -> "ExperimentSpec":
        kwargs.setdefault("R", FULL_R)
        kwargs.setdefault("B", FULL_B)
        return cls(**kwargs)

    def kernel_config(self) -> KernelConfig:
        return KernelConfig(bandwidth_grid=tuple(self.bandwidth_grid), selected_bandwidth=self.bandwidth)

    def lags_for(self, n: int) -> tuple:
        return tuple(h for h in self.lags_of_interest if h <= n - 2)

    def with_(self, **changes) -> "ExperimentSpec":
        return replace(self, **changes)


@dataclass(frozen=True)
class CellResult:
    """Counts for one (method, n) cell."""

    method: str
    n: int
    R: int
    rejections: int
    outside: dict
    failure: str | None = None
    seconds: float = field(default=0.0, compare=False)

    @property
    def rejection_pct(self) -> float:
        if self.failure is not None:
            return float("nan")
        return 100.0 * self.rejections / self.R

    def band_pct(self, lag: int) -> float:
        count = self.outside.get(lag)
        if count is None or self.failure is not None:
            return float("nan")
        return 100.0 * count / self.R


@dataclass(frozen=True)
class ExperimentResult:
    spec: ExperimentSpec
    cells: tuple

    def cell(self, method: str, n: int) -> CellResult:
        method = Method(method).value
        for c in self.cells:
            if c.method == method and c.n == n:
                return c
        raise KeyError((method, n))

    def rejection(self, method: str, n: int) -> float:
        """Rejection frequency in percent."""
        return self.cell(method, n).rejection_pct

    def band_frequency(self, method: str, n: int, lag: int) -> float:
        """Percentage of replications with the lag-``lag`` autocorrelation outside its band."""
        return self.cell(method, n).band_pct(lag)

    @property
    def failures(self) -> dict:
        return {(c.method, c.n): c.failure for c in self.cells if c.failure is not None}


def _replicate(spec: ExperimentSpec, n: int, i: int) -> dict:
    """One replication; returns per-method (reject, outside-by-lag, seconds) or an error string."""
    config = spec.dgp.with_(n=n, seed=subseed(spec.seed, n, i))
    panel = generate(config)
    series = panel.observed
    lags = spec.lags_for(n)
    L = max((spec.max_lag,) + lags)
    wide = PowerSpec(spec.delta, L)
    kcfg = spec.kernel_config()
    boot_seed = subseed(spec.seed, n, i, 1)
    oracle = {}
    if spec.oracle_curves:
        prob, moment = true_curves(config, spec.delta, moment="rpv" in spec.methods)
        oracle = {"rp": prob, "rpv": moment}
    out = {}
    for method in spec.methods:
        t0 = time.perf_counter()
        try:
            ac, _ = compute_autocorr(series, wide, method, oracle.get(method), kcfg)
            if method == "classical":
                stat = portmanteau_stat(ac, spec.max_lag)
                reject = chi2_test(stat, spec.max_lag, spec.alpha).reject
                z = stats.norm.ppf(1.0 - spec.alpha / 2.0) / np.sqrt(n)
                outside = [bool(abs(ac.rho[h - 1]) > z) for h in lags]
            else:
                res = run_test(
                    series,
                    PowerSpec(spec.delta, spec.max_lag),
                    method,
                    B=spec.B,
                    dist=spec.multiplier,
                    alpha=spec.alpha,
                    seed=boot_seed,
                    band_lags=lags,
                    denominator=spec.denominator,
                    autocorr=ac,
                )
                reject = res.reject
                outside = [bool(v) for v in res.outside_band]
        except IlliqError as exc:
            out[method] = f"replication {i} (n={n}): {type(exc).__name__}: {exc}"
            continue
        out[method] = (bool(reject), outside, time.perf_counter() - t0)
    return out


def _run_chunk(args):
    spec, jobs = args
    return [_replicate(spec, n, i) for n, i in jobs]


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run every replication of ``spec`` and aggregate the frequencies.

    A failure in any replication marks the whole (method, n) cell as failed
    and keeps the first diagnostic; the other cells are unaffected.
    """
    jobs = [(n, i) for n in spec.n_values for i in range(spec.R)]
    if spec.workers == 1 or len(jobs) < 2:
        records = _run_chunk((spec, jobs))
    else:
        size = max(1, min(16, len(jobs) // (4 * spec.workers)))
        chunks = [(spec, jobs[k : k + size]) for k in range(0, len(jobs), size)]
        with ProcessPoolExecutor(max_workers=spec.workers) as ex:
            records = [r for part in ex.map(_run_chunk, chunks) for r in part]
    cells = []
    for method in spec.methods:
        for n in spec.n_values:
            lags = spec.lags_for(n)
            rej = 0
            outside = {h: 0 for h in lags}
            failure = None
            secs = 0.0
            for (nn, i), rec in zip(jobs, records):
                if nn != n:
                    continue
                r = rec[method]
                if isinstance(r, str):
                    failure = failure or r
                    continue
                rej += r[0]
                for h, flag in zip(lags, r[1]):
                    outside[h] += flag
                secs += r[2]
            if failure is not None:
                log.warning("cell (%s, n=%d) failed: %s", method, n, failure)
            cells.append(
                CellResult(method=method, n=n, R=spec.R, rejections=rej, outside=outside, failure=failure, seconds=secs)
            )
    return ExperimentResult(spec=spec, cells=tuple(cells))


def _fmt(x: float) -> str:
    return "" if np.isnan(x) else f"{x:.2f}"


def emit_tables(result: ExperimentResult, out_dir, stem: str = "experiment") -> dict:
    """Write the rejection table, the band table and an aligned text rendering.

    Returns a dict of the written paths.  Missing cells (lag too large
    for ``n`` or a failed cell) are left empty.  Nothing time-dependent is
    written, so the files are byte-identical across runs.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = result.spec
    code = spec.dgp.code
    paths = {
        "rejection": out / f"{stem}_rejection.csv",
        "bands": out / f"{stem}_bands.csv",
        "text": out / f"{stem}.txt",
    }
    with open(paths["rejection"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dgp", "method", "n", "R", "B", "rejection_pct", "failure"])
        for c in result.cells:
            w.writerow([code, c.method, c.n, c.R, spec.B, _fmt(c.rejection_pct), c.failure or ""])
    lags = spec.lags_of_interest
    with open(paths["bands"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dgp", "method", "n", "lag", "outside_pct"])
        for c in result.cells:
            for h in lags:
                w.writerow([code, c.method, c.n, h, _fmt(c.band_pct(h))])
    header = ["method", "n", "test"] + [f"lag{h}" for h in lags]
    rows = [[c.method, str(c.n), _fmt(c.rejection_pct)] + [_fmt(c.band_pct(h)) for h in lags] for c in result.cells]
    widths = [max(len(r[k]) for r in [header] + rows) for k in range(len(header))]
    lines = [
        f"design {code}, R={spec.R}, B={spec.B}, alpha={spec.alpha:g}, delta={spec.delta:g}, m={spec.max_lag}",
        "  ".join(h.rjust(wd) for h, wd in zip(header, widths)),
    ]
    lines += ["  ".join(v.rjust(wd) for v, wd in zip(r, widths)) for r in rows]
    paths["text"].write_text("\n".join(lines) + "\n")
    return paths


_INT_KEYS = {"R", "B", "seed", "max_lag", "workers"}
_FLOAT_KEYS = {"alpha", "delta", "bandwidth", "thinning_threshold"}
_LIST_KEYS = {"n_values", "lags_of_interest", "methods", "bandwidth_grid"}
_ALIASES = {"n": "n_values", "lags": "lags_of_interest", "r": "R", "b": "B"}


def load_spec(path, **overrides) -> ExperimentSpec:
    """Read an ``[experiment]`` section from an INI file.

    Keys: ``dgp`` (code), ``n`` (comma list), ``R``, ``B``, ``methods``,
    ``alpha``, ``lags``, ``seed``, ``delta``, ``max_lag``, ``multiplier``,
    ``bandwidth`` (omit for LOOCV), ``bandwidth_grid``, ``denominator``,
    ``thinning``, ``thinning_threshold``, ``oracle_curves``, ``workers``
    and ``full_scale``.  Keyword ``overrides`` win over the file.
    """
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise InvalidConfig(f"cannot parse {path}: {exc}") from None
    if "experiment" not in cp:
        raise InvalidConfig(f"{path} has no [experiment] section")
    sec = cp["experiment"]
    kw = {}
    dgp_kw = {}
    full = False
    try:
        for raw_key, value in sec.items():
            key = _ALIASES.get(raw_key, raw_key)
            if key == "dgp":
                kw["dgp"] = value.strip()
            elif key in ("thinning", "oracle_curves", "full_scale"):
                flag = sec.getboolean(raw_key)
                if key == "thinning":
                    dgp_kw["thinning"] = flag
                elif key == "full_scale":
                    full = flag
                else:
                    kw[key] = flag
            elif key == "thinning_threshold":
                dgp_kw[key] = float(value)
            elif key in _LIST_KEYS:
                items = [v.strip() for v in value.split(",") if v.strip()]
                if key in ("n_values", "lags_of_interest"):
                    kw[key] = tuple(int(v) for v in items)
                elif key == "bandwidth_grid":
                    kw[key] = tuple(float(v) for v in items)
                else:
                    kw[key] = tuple(items)
            elif key in _INT_KEYS:
                kw[key] = int(value)
            elif key in _FLOAT_KEYS:
                kw[key] = None if value.strip().lower() in ("", "cv", "none") else float(value)
            elif key in ("multiplier", "denominator"):
                kw[key] = value.strip()
            else:
                raise InvalidConfig(f"unknown experiment key {raw_key!r}")
    except ValueError as exc:
        raise InvalidConfig(f"bad value in {path}: {exc}") from None
    kw.update(overrides)
    if full:
        kw.setdefault("R", FULL_R)
        kw.setdefault("B", FULL_B)
    if dgp_kw:
        kw["dgp"] = DgpConfig.from_code(kw.get("dgp", "a1"), **dgp_kw)
    return ExperimentSpec(**kw)

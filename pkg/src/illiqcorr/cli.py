"""Command line front-end: ``illiqcorr {analyze,simulate,experiment,profile}``.

Exit codes: 0 success, 2 usage, 3 unreadable data, 4 numerical failure.
Diagnostics go to stderr; stdout stays empty unless ``--stdout`` is given.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .bootstrap import MultiplierDist, run_test
from .core import PowerSpec, build_series
from .diagnostics import absolute_return_profile, probability_profile
from .exceptions import IlliqError, UsageError
from .harness import emit_tables, load_spec, run_experiment
from .io import read_series_csv
from .kernel import KernelConfig, estimate_power_moment, estimate_probability
from .powercorr import Method, chi2_test, compute_autocorr, portmanteau_stat
from .simulate import DgpConfig, generate

__all__ = ["main", "build_parser", "AnalysisOptions", "analyze_series", "resolve_threads"]

log = logging.getLogger("illiqcorr")

THREADS_ENV = "ILLIQCORR_THREADS"


def resolve_threads(value=None) -> int:
    """``--threads`` if given, else ``$ILLIQCORR_THREADS``, else the core count."""
    source = "--threads"
    if value is None:
        value = os.environ.get(THREADS_ENV)
        source = THREADS_ENV
    if value is None or value == "":
        return os.cpu_count() or 1
    try:
        k = int(value)
    except (TypeError, ValueError):
        raise UsageError(f"{source} must be a positive integer, got {value!r}") from None
    if k < 1:
        raise UsageError(f"{source} must be a positive integer, got {value!r}")
    return k


@dataclass(frozen=True)
class AnalysisOptions:
    delta: float = 1.0
    max_lag: int = 5
    methods: tuple = ("classical", "rp", "rpv")
    B: int = 499
    multiplier: str = "mammen"
    alpha: float = 0.05
    seed: int = 0
    band_lags: tuple | None = None
    bandwidth: float | None = None
    zero_threshold: float = 0.0
    denominator: str = "observed"
    threads: int = 1


def analyze_series(returns, options: AnalysisOptions, meta: dict | None = None):
    """Full single-series analysis.

    Returns ``(report, tables)`` where ``report`` is a JSON-ready dict and
    ``tables`` maps output names to ``(header, rows)`` for the CSV files.
    """
    series = build_series(returns, options.zero_threshold)
    spec = PowerSpec(options.delta, options.max_lag)
    band_lags = tuple(range(1, spec.max_lag + 1)) if options.band_lags is None else tuple(options.band_lags)
    L = max((spec.max_lag,) + band_lags)
    wide = PowerSpec(options.delta, L)
    wide.check_length(series.n)
    kcfg = KernelConfig(selected_bandwidth=options.bandwidth)
    methods = [Method(m) for m in options.methods]

    report = {"input": dict(meta or {})}
    report["input"].update(
        n=series.n,
        nonzero=int(series.indicators.sum()),
        zero_fraction=series.zero_fraction,
    )
    report["settings"] = {
        "delta": spec.delta,
        "max_lag": spec.max_lag,
        "methods": [m.value for m in methods],
        "B": options.B,
        "multiplier": MultiplierDist(options.multiplier).value,
        "alpha": options.alpha,
        "seed": options.seed,
        "band_lags": list(band_lags),
        "bandwidth": options.bandwidth,
        "zero_threshold": options.zero_threshold,
        "denominator": options.denominator,
    }
    tables = {}
    u = np.arange(1, series.n + 1) / series.n

    curves = {}
    prob = estimate_probability(series, kcfg)
    curves["rp"] = prob
    if Method.RPV in methods:
        curves["rpv"] = estimate_power_moment(series, spec, kcfg)
    report["curves"] = {}
    for key, c in curves.items():
        name = "probability" if key == "rp" else "moment"
        report["curves"][name] = {"bandwidth": c.bandwidth, "cv_score": c.cv_score}
        tables[f"{name}_curve"] = (
            ["t", "u", "fitted"],
            [[t + 1, repr(float(u[t])), repr(float(c.values[t]))] for t in range(series.n)],
        )

    report["methods"] = {}
    for m in methods:
        ac, _ = compute_autocorr(series, wide, m, curves.get(m.value), kcfg)
        if m is Method.CLASSICAL:
            stat = portmanteau_stat(ac, spec.max_lag)
            test = chi2_test(stat, spec.max_lag, options.alpha)
            half = float(stats.norm.ppf(1.0 - options.alpha / 2.0) / np.sqrt(series.n))
            lower = [-half] * len(band_lags)
            upper = [half] * len(band_lags)
            entry = {
                "test": "chi2",
                "statistic": test.statistic,
                "dof": test.dof,
                "critical_value": test.critical_value,
                "p_value": test.p_value,
                "reject": test.reject,
            }
        else:
            out = run_test(
                series,
                spec,
                m,
                B=options.B,
                dist=options.multiplier,
                alpha=options.alpha,
                seed=options.seed,
                band_lags=band_lags,
                denominator=options.denominator,
                n_jobs=options.threads,
                autocorr=ac,
            )
            lower = out.lower.tolist()
            upper = out.upper.tolist()
            entry = {
                "test": "wild_bootstrap",
                "statistic": out.observed_stat,
                "p_value": out.p_value,
                "reject": out.reject,
            }
        rho = [float(ac.rho[h - 1]) for h in band_lags]
        entry.update(
            gamma0=ac.gamma0,
            rho=ac.rho[: spec.max_lag].tolist(),
            bands={"lags": list(band_lags), "lower": lower, "upper": upper},
        )
        report["methods"][m.value] = entry
        tables[f"autocorr_{m.value}"] = (
            ["lag", "rho", "lower", "upper"],
            [[h, repr(r), repr(float(lo)), repr(float(hi))] for h, r, lo, hi in zip(band_lags, rho, lower, upper)],
        )

    report["profiles"] = {}
    profiles = [probability_profile(series)]
    try:
        profiles.append(absolute_return_profile(series))
    except IlliqError as exc:
        log.warning("skipping absolute-return profile: %s", exc)
    for p in profiles:
        report["profiles"][p.kind.value] = {"max_deviation_from_identity": p.max_deviation()}
        tables[f"profile_{p.kind.value}"] = (
            ["s", "value", "kind"],
            [[repr(float(s)), repr(float(v)), p.kind.value] for s, v in zip(p.s, p.values)],
        )
    return report, tables


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _load(args):
    if args.returns is not None:
        return read_series_csv(args.returns, "return", args.column)
    return read_series_csv(args.prices, "price", args.column)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def cmd_analyze(args) -> int:
    loaded = _load(args)
    meta = {"file": loaded.path, "kind": loaded.kind, "column": loaded.column}
    if loaded.dates:
        meta["first_date"] = loaded.dates[0]
        meta["last_date"] = loaded.dates[-1]
    opts = AnalysisOptions(
        delta=args.delta,
        max_lag=args.max_lag,
        methods=tuple(args.method),
        B=args.B,
        multiplier=args.multiplier,
        alpha=args.alpha,
        seed=args.seed,
        band_lags=tuple(args.band_lags) if args.band_lags else None,
        bandwidth=args.bandwidth,
        zero_threshold=args.zero_threshold,
        denominator=args.denominator,
        threads=resolve_threads(args.threads),
    )
    report, tables = analyze_series(loaded.returns, opts, meta)
    out = _out_dir(args)
    text = _dump(report)
    (out / "report.json").write_text(text)
    for name, (header, rows) in tables.items():
        _write_csv(out / f"{name}.csv", header, rows)
    if args.stdout:
        sys.stdout.write(text)
    return 0


def cmd_simulate(args) -> int:
    kw = {"n": args.n, "seed": args.seed, "thinning": not args.no_thinning}
    if args.thinning_threshold is not None:
        kw["thinning_threshold"] = args.thinning_threshold
    panel = generate(DgpConfig.from_code(args.dgp, **kw))
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        panel.to_csv(args.out)
    if args.stdout:
        panel.write_csv(sys.stdout)
    return 0


def cmd_experiment(args) -> int:
    overrides = {}
    for key in ("R", "B", "seed"):
        if getattr(args, key) is not None:
            overrides[key] = getattr(args, key)
    overrides["workers"] = resolve_threads(args.threads)
    spec = load_spec(args.config, **overrides)
    if args.full_scale:
        spec = spec.with_(R=args.R or 5000, B=args.B or 3999)
    result = run_experiment(spec)
    for (method, n), msg in result.failures.items():
        print(f"warning: cell ({method}, n={n}) failed: {msg}", file=sys.stderr)
    paths = emit_tables(result, _out_dir(args), args.stem)
    if args.stdout:
        sys.stdout.write(paths["text"].read_text())
    return 0


def cmd_profile(args) -> int:
    loaded = _load(args)
    series = build_series(loaded.returns, args.zero_threshold)
    profiles = [probability_profile(series), absolute_return_profile(series)]
    out = _out_dir(args)
    rows = []
    for p in profiles:
        p.to_csv(out / f"profile_{p.kind.value}.csv")
        rows += [[repr(float(s)), repr(float(v)), p.kind.value] for s, v in zip(p.s, p.values)]
    if args.stdout:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["s", "value", "kind"])
        w.writerows(rows)
    return 0


def _add_input(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--returns", metavar="CSV", help="file with a 'return' column")
    g.add_argument("--prices", metavar="CSV", help="file with a 'price' column; log-returns are used")
    p.add_argument("--column", help="name of the column to read")
    p.add_argument("--zero-threshold", type=float, default=0.0, help="|r| <= eps counts as no trade")


def _methods(text):
    items = [s.strip().lower() for s in text.split(",") if s.strip()]
    if items == ["all"]:
        return [m.value for m in Method]
    try:
        return [Method(s).value for s in items]
    except ValueError:
        raise argparse.ArgumentTypeError(f"methods must be from classical, rp, rpv; got {text!r}") from None


def _lags(text):
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="illiqcorr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="autocorrelations, tests and bands for one series")
    _add_input(p)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--max-lag", type=int, default=5)
    p.add_argument("--method", type=_methods, default=["classical", "rp", "rpv"], help="comma list or 'all'")
    p.add_argument("--B", type=int, default=499, help="bootstrap replicates")
    p.add_argument("--multiplier", choices=[d.value for d in MultiplierDist], default="mammen")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--band-lags", type=_lags, help="lags for the bands, default 1..max-lag")
    p.add_argument("--bandwidth", type=float, help="fixed bandwidth instead of LOOCV")
    p.add_argument("--denominator", choices=["observed", "bootstrap"], default="observed")
    p.add_argument("--threads", type=int)
    p.add_argument("--out", default="illiqcorr-out", help="output directory")
    p.add_argument("--stdout", action="store_true", help="also print the JSON report")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="write one simulated panel as CSV")
    p.add_argument("--dgp", default="a1", help="design code: a1, a2, b, c1, c2")
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-thinning", action="store_true")
    p.add_argument("--thinning-threshold", type=float)
    p.add_argument("--threads", type=int, help="accepted for symmetry; generation is serial")
    p.add_argument("--out", help="output CSV file")
    p.add_argument("--stdout", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", help="Monte Carlo rejection and band frequencies")
    p.add_argument("--config", required=True, help="INI file with an [experiment] section")
    p.add_argument("--R", type=int)
    p.add_argument("--B", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--full-scale", action="store_true", help="R=5000, B=3999 unless given")
    p.add_argument("--threads", type=int)
    p.add_argument("--out", default="illiqcorr-out")
    p.add_argument("--stem", default="experiment")
    p.add_argument("--stdout", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("profile", help="probability and absolute-return profiles")
    _add_input(p)
    p.add_argument("--threads", type=int, help="accepted for symmetry; profiles are serial")
    p.add_argument("--out", default="illiqcorr-out")
    p.add_argument("--stdout", action="store_true")
    p.set_defaults(func=cmd_profile)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.command == "simulate" and not args.out and not args.stdout:
            raise UsageError("simulate needs --out or --stdout")
        return args.func(args)
    except IlliqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

"""Command-line entry point.

    poissonleague verify-poisson --data-dir data --team "Man United"
    poissonleague verify-times --goal-times mu_2018.csv --output out/times.csv
    poissonleague rates --data-dir data --subset 2010s --output out/rates.csv
    poissonleague simulate --data-dir data --subset all --sims 10000 --seed 0 --output out/all.csv

Every file-writing command also writes ``<output>.meta.json`` describing the
run. Outputs are only written once every stage has succeeded.
"""
from __future__ import annotations

import argparse
import csv
import difflib
import hashlib
import io
import json
import logging
import os
import sys
from pathlib import Path
from typing import Callable

from . import __version__
from .dist import ExponentialParam, UniformInterval, exponential_cdf, uniform_cdf
from .gof import cdf_curves, chi_square_gof, describe, ks_test, poisson_binning
from .ingest import (
    SUBSETS,
    all_teams,
    data_checksum,
    goals_scored,
    load_goal_times,
    load_matches,
    normalize_minutes,
    roster,
    training_subset,
)
from .metrics import forty_point_rule, probability_report
from .regression import RateTable, fit_rates
from .simulate import default_threads, run_ensemble

log = logging.getLogger("poissonleague")


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage


def _stage(name: str, fn: Callable, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except (ValueError, KeyError, OSError) as exc:
        raise StageError(name, exc) from exc


def _with_suffix(path: Path, suffix: str) -> Path:
    return path.with_name(path.name + suffix)


def _sibling(path: Path, tag: str, ext: str) -> Path:
    return path.with_name(f"{path.stem}_{tag}{ext}")


class Outputs:
    """Collects files and writes them together at the end of a run."""

    def __init__(self):
        self.files: dict[Path, str] = {}

    def add(self, path: Path, text: str):
        self.files[path] = text

    def commit(self):
        tmp = []
        try:
            for path, text in self.files.items():
                path.parent.mkdir(parents=True, exist_ok=True)
                t = _with_suffix(path, ".tmp")
                t.write_text(text, encoding="utf-8", newline="")
                tmp.append((t, path))
        except OSError:
            for t, _ in tmp:
                t.unlink(missing_ok=True)
            raise
        for t, path in tmp:
            os.replace(t, path)


def _meta(args, command: str, **extra) -> str:
    record = {"command": command, "version": __version__}
    for key in ("subset", "sims", "seed", "format", "team"):
        if hasattr(args, key):
            record[key] = getattr(args, key)
    record.update(extra)
    return json.dumps(record, indent=2, sort_keys=True) + "\n"


def _file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _long_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["section", "item", "value"])
    w.writerows(rows)
    return buf.getvalue()


def _emit(args, outputs: Outputs, text: str, meta: str):
    if args.output is None:
        sys.stdout.write(text)
        return
    out = Path(args.output)
    outputs.add(out, text)
    outputs.add(_with_suffix(out, ".meta.json"), meta)
    outputs.commit()


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_verify_poisson(args) -> int:
    matches = _stage("ingest", load_matches, args.data_dir)
    teams = all_teams(matches)
    if args.team not in teams:
        close = difflib.get_close_matches(args.team, sorted(teams), n=3, cutoff=0.5)
        hint = f"; did you mean {', '.join(repr(c) for c in close)}?" if close else ""
        raise StageError("select", KeyError(f"unknown team {args.team!r}{hint}"))
    goals = goals_scored(matches, args.team)
    stats = describe(goals)
    decimals = None if args.prob_decimals < 0 else args.prob_decimals
    binning = _stage("gof", poisson_binning, goals, stats["mean"], decimals)
    chi = _stage("gof", chi_square_gof, binning)

    report = {
        "team": args.team,
        "descriptive": stats,
        "binning": {
            "lambda": stats["mean"],
            "bins": list(binning.bins),
            "probs": list(binning.probs),
            "observed": list(binning.observed),
            "expected": list(binning.expected),
        },
        "chi_square": {"statistic": chi.statistic, "df": chi.df_or_n, "p_value": chi.p_value},
    }
    if args.format == "json":
        text = json.dumps(report, indent=2) + "\n"
    else:
        rows = [("descriptive", k, v) for k, v in stats.items()]
        rows.append(("binning", "lambda", stats["mean"]))
        for b, p, o, e in zip(binning.bins, binning.probs, binning.observed, binning.expected):
            rows += [(f"bin_{b}", "prob", p), (f"bin_{b}", "observed", o), (f"bin_{b}", "expected", e)]
        rows += [("chi_square", "statistic", chi.statistic), ("chi_square", "df", chi.df_or_n), ("chi_square", "p_value", chi.p_value)]
        text = _long_csv(rows)
    _emit(args, Outputs(), text, _meta(args, "verify-poisson", data_sha256=data_checksum(args.data_dir)))
    return 0


def _curve_csv(curve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "empirical", "model"])
    w.writerows(curve)
    return buf.getvalue()


def cmd_verify_times(args) -> int:
    records = _stage("ingest", load_goal_times, args.goal_times)
    gaps = [r.gap for r in records]
    minutes = normalize_minutes(records)
    mean_gap = sum(gaps) / len(gaps)
    expo = _stage("gof", ExponentialParam.from_mean, mean_gap)
    gap_cdf = lambda t: exponential_cdf(t, expo)  # noqa: E731
    unit = UniformInterval(0.0, 1.0)
    unif_cdf = lambda x: uniform_cdf(x, unit)  # noqa: E731
    gap_test = ks_test(gaps, gap_cdf)
    minute_test = ks_test(minutes, unif_cdf)

    tests = {
        "gaps_vs_exponential": {"statistic": gap_test.statistic, "n": gap_test.df_or_n, "p_value": gap_test.p_value, "mean_gap": mean_gap},
        "minutes_vs_uniform": {"statistic": minute_test.statistic, "n": minute_test.df_or_n, "p_value": minute_test.p_value},
    }
    if args.format == "json":
        text = json.dumps(tests, indent=2) + "\n"
    else:
        text = _long_csv([(name, k, v) for name, d in tests.items() for k, v in d.items()])

    gap_curve = cdf_curves(gaps, gap_cdf)
    minute_curve = cdf_curves(minutes, unif_cdf)
    if args.output is None:
        sys.stdout.write(text)
        return 0
    out = Path(args.output)
    outputs = Outputs()
    outputs.add(_sibling(out, "gaps_cdf", ".csv"), _curve_csv(gap_curve))
    outputs.add(_sibling(out, "minutes_cdf", ".csv"), _curve_csv(minute_curve))
    _emit(args, outputs, text, _meta(args, "verify-times", goal_times_sha256=_file_sha256(args.goal_times)))
    return 0


def _rates_for(args) -> tuple[RateTable, dict]:
    matches = _stage("ingest", load_matches, args.data_dir)
    train = _stage("subset", training_subset, matches, args.subset)
    teams = roster(matches)
    table, home_fit, away_fit = _stage("fit", fit_rates, train, teams)
    diag = {
        "home": {"iterations": home_fit.iterations, "converged": home_fit.converged, "deviance": home_fit.deviance, "clamped": list(home_fit.clamped)},
        "away": {"iterations": away_fit.iterations, "converged": away_fit.converged, "deviance": away_fit.deviance, "clamped": list(away_fit.clamped)},
        "training_rows": len(train),
        "effective_rows": sum(m.weight for m in train),
    }
    return table, diag


def cmd_rates(args) -> int:
    table, diag = _rates_for(args)
    text = table.to_json() if args.format == "json" else table.to_csv()
    _emit(args, Outputs(), text, _meta(args, "rates", data_sha256=data_checksum(args.data_dir), fit=diag))
    return 0


def cmd_simulate(args) -> int:
    if args.sims < 1:
        raise StageError("config", ValueError("--sims must be >= 1"))
    if args.rates_file:
        table = _stage("rates", RateTable.load, args.rates_file)
        source = {"rates_sha256": _file_sha256(args.rates_file)}
    else:
        table, diag = _rates_for(args)
        source = {"data_sha256": data_checksum(args.data_dir), "fit": diag}

    audit_buf = io.StringIO() if args.audit else None
    threads = args.threads or default_threads()
    summary = _stage("simulate", run_ensemble, table, args.sims, args.seed, threads=threads, audit=audit_buf)
    report = probability_report(summary, args.subset)
    forty = forty_point_rule(summary)
    forty_json = json.dumps({args.subset: forty.to_dict()}, indent=2) + "\n"
    text = report.to_json() if args.format == "json" else report.to_csv()

    if args.output is None:
        sys.stdout.write(text)
        sys.stdout.write(forty_json)
        if audit_buf is not None:
            Path(args.audit).write_text(audit_buf.getvalue(), encoding="utf-8")
        return 0
    out = Path(args.output)
    outputs = Outputs()
    outputs.add(_sibling(out, "forty_point", ".json"), forty_json)
    if audit_buf is not None:
        outputs.add(Path(args.audit), audit_buf.getvalue())
    if args.save_ensemble:
        outputs.add(_sibling(out, "ensemble", ".json"), summary.to_json())
    _emit(args, outputs, text, _meta(args, "simulate", **source))
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="poissonleague", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        if data:
            p.add_argument("--data-dir", default="data", help="directory holding manifest.csv and season files")
        p.add_argument("--output", help="report path; stdout if omitted")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("verify-poisson", help="chi-square test of a team's goals per match against Poisson")
    common(p)
    p.add_argument("--team", required=True)
    p.add_argument(
        "--prob-decimals",
        type=int,
        default=3,
        help="round bin probabilities to this many decimals before computing expected counts (-1: no rounding)",
    )
    p.set_defaults(func=cmd_verify_poisson)

    p = sub.add_parser("verify-times", help="KS tests of goal gaps (exponential) and minutes (uniform)")
    common(p, data=False)
    p.add_argument("--goal-times", required=True)
    p.set_defaults(func=cmd_verify_times)

    def subset_arg(p):
        p.add_argument("--subset", choices=SUBSETS, default="all")

    p = sub.add_parser("rates", help="fit home and away scoring rates")
    common(p)
    subset_arg(p)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("simulate", help="Monte Carlo season ensemble")
    common(p)
    subset_arg(p)
    p.add_argument("--sims", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rates-file", help="use this rate table (CSV or .json) instead of fitting")
    p.add_argument("--threads", type=int, default=0, help="worker threads; 0 means all cores")
    p.add_argument("--audit", help="also write every simulated table to this CSV")
    p.add_argument("--save-ensemble", action="store_true", help="write the full ensemble summary as JSON")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error [output] {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

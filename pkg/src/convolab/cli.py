"""Command line interface.

Subcommands: `rates`, `ineq`, `probe` run experiments (by registry name or
--config file); `list` prints the registry; `plot-data` validates result
files and emits a JSON index for the plotting component.

Exit codes: 0 all verdicts pass, 2 a verdict failed, 1 config/runtime error.
Flags can be overridden by environment variables prefixed CONVOLVE_
(CONVOLVE_CONFIG, CONVOLVE_OUT, CONVOLVE_SEED, CONVOLVE_WORKERS).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .runner import (
    INEQ_COLUMNS,
    PROBE_COLUMNS,
    RATES_COLUMNS,
    RunError,
    list_experiments,
    load_config,
    run_experiment,
)


def _env(name: str, fallback):
    return os.environ.get("CONVOLVE_" + name, fallback)


def _add_run_flags(sub):
    sub.add_argument("experiment", nargs="?", help="registry name (see `convolab list`)")
    sub.add_argument("--config", default=None, help="TOML or JSON config file")
    sub.add_argument("--out", default=None, help="output directory (default: ./results)")
    sub.add_argument("--seed", type=int, default=None, help="master seed override")
    sub.add_argument("--workers", type=int, default=None, help="parallel worker count")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convolab",
        description="stochastic-convolution rate experiments and inequality trials",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for family in ("rates", "ineq", "probe"):
        _add_run_flags(subs.add_parser(family, help=f"run a {family} experiment"))
    subs.add_parser("list", help="list registered experiments")
    pd = subs.add_parser("plot-data", help="index result files for the plotting component")
    pd.add_argument("--out", default=None, help="results directory to index")
    return parser


def _run_family(family: str, args) -> int:
    config_path = args.config or _env("CONFIG", None)
    out_dir = args.out or _env("OUT", "results")
    seed = args.seed if args.seed is not None else _env("SEED", None)
    seed = int(seed) if seed is not None else None
    workers = args.workers if args.workers is not None else _env("WORKERS", None)
    workers = int(workers) if workers is not None else (os.cpu_count() or 1)

    config = load_config(config_path) if config_path else None
    outcome = run_experiment(
        args.experiment, config, out_dir, seed_override=seed, workers=workers,
        family=family,
    )
    status = "PASS" if outcome.passed else "FAIL"
    print(f"[{status}] {outcome.name}: {outcome.csv_path}")
    for key in ("slope", "max_ratio"):
        if outcome.summary.get(key) is not None:
            print(f"  {key} = {outcome.summary[key]}")
    return 0 if outcome.passed else 2


_SCHEMAS = {
    tuple(RATES_COLUMNS.split(",")): "rate",
    tuple(INEQ_COLUMNS.split(",")): "ratio",
    tuple(PROBE_COLUMNS.split(",")): "probe",
}


def _plot_data(args) -> int:
    out_dir = args.out or _env("OUT", "results")
    if not os.path.isdir(out_dir):
        print(f"error: no results directory {out_dir!r}", file=sys.stderr)
        return 1
    index = []
    for fname in sorted(os.listdir(out_dir)):
        if not fname.endswith(".csv"):
            continue
        path = os.path.join(out_dir, fname)
        with open(path) as fh:
            header = tuple(fh.readline().strip().split(","))
        kind = _SCHEMAS.get(header)
        if kind is None:
            print(f"warning: {fname} does not match a known schema", file=sys.stderr)
            continue
        summary = os.path.join(out_dir, fname[:-4] + "_summary.json")
        index.append({
            "csv": path,
            "kind": kind,
            "summary": summary if os.path.exists(summary) else None,
        })
    json.dump({"schema_version": 1, "files": index}, sys.stdout, indent=2)
    print()
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            for name, describe in list_experiments():
                print(f"{name:28s} {describe}")
            return 0
        if args.command == "plot-data":
            return _plot_data(args)
        return _run_family(args.command, args)
    except RunError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: ``sparsefw <group> <action> [--config PATH] ...``.

Exit codes: 0 success, 2 configuration error, 3 consistency violation or too
many failed trials.
"""
from __future__ import annotations

import argparse
import sys

from .config import ConfigError, default_config, load_config
from .csvio import read_csv
from .plotdata import emit_plot_data
from .runner import EXIT_CONFIG, EXIT_OK, OutputLocked, run_experiment

GROUP_HELP = {
    "fw": "solver runs and sparsity estimates",
    "bounds": "lower-bound tables",
    "randpoly": "random polytopes and cap measures",
    "stat": "aggregation and rate studies",
}

COMMANDS = {
    ("fw", "run"): "fw_run",
    ("fw", "compress"): "compressibility",
    ("bounds", "table"): "bounds_table",
    ("randpoly", "study"): "randpoly_study",
    ("randpoly", "cap"): "cap_study",
    ("stat", "aggregate"): "aggregation",
    ("stat", "fastrate"): "fast_rate",
    ("stat", "linrate"): "linear_rate",
}


def _u64(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _common(p):
    p.add_argument("--config", metavar="PATH", help="JSON experiment file")
    p.add_argument("--seed", type=_u64, help="master seed (overrides the config)")
    p.add_argument("--trials", type=_positive, help="number of trials (overrides the config)")
    p.add_argument("--out", metavar="DIR", help="output directory (overrides the config)")
    p.add_argument("--workers", type=_positive, help="worker processes (default: $SPARSEFW_WORKERS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsefw", description="Frank-Wolfe sparsity experiments")
    groups = parser.add_subparsers(dest="group", required=True)
    sub = {}
    for (group, action), kind in COMMANDS.items():
        if group not in sub:
            sub[group] = groups.add_parser(group, help=GROUP_HELP[group]).add_subparsers(dest="action", required=True)
        _common(sub[group].add_parser(action, help=f"run a {kind} experiment"))
    plot = groups.add_parser("plot", help="write plot data from a result CSV")
    plot.add_argument("csv", help="input CSV")
    plot.add_argument("--x", required=True)
    plot.add_argument("--y", required=True)
    plot.add_argument("--group-by")
    plot.add_argument("--loglog", action="store_true", help="mark axes log-log and fit a slope")
    plot.add_argument("--out", default="plots", metavar="DIR")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.group == "plot":
        try:
            res = emit_plot_data(args.csv, args.x, args.y, args.out, args.group_by, args.loglog, args.loglog)
        except (KeyError, FileNotFoundError) as exc:
            print(f"error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
            return EXIT_CONFIG
        for name, (path, slope) in res.items():
            print(f"{path}" + (f"  slope={slope:.4f}" if args.loglog else ""))
        return EXIT_OK
    kind = COMMANDS[(args.group, args.action)]
    try:
        cfg = load_config(args.config) if args.config else default_config(kind)
        if cfg.kind != kind:
            raise ConfigError(f"kind: config is {cfg.kind!r} but the command runs {kind!r}")
        cfg = cfg.replace(seed=args.seed, trials=args.trials, out=args.out)
        result = run_experiment(cfg, workers=args.workers)
    except ConfigError as exc:
        for line in exc.problems:
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_CONFIG
    except OutputLocked as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _report(cfg, result)
    return result.status


def _report(cfg, result):
    out = cfg.out
    if cfg.kind == "bounds_table" and "bounds_table.csv" in result.files:
        header, rows = read_csv(f"{out}/bounds_table.csv")
        widths = [max(len(h), *(len(r[h]) for r in rows)) if rows else len(h) for h in header]
        print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
        for r in rows:
            print("  ".join(r[h].ljust(w) for h, w in zip(header, widths)))
    for name in result.files:
        print(f"wrote {out}/{name}")
    for key, value in result.summary.items():
        print(f"{key}: {value}")
    for v in result.violations:
        print(f"violation: {v}", file=sys.stderr)
    for i, err in result.errors:
        print(f"item {i} failed: {err}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())

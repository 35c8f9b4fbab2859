"""Command-line front end: run one scenario, a named suite, or a parameter sweep.

Every command writes one trace CSV per run plus a summary CSV, and renders
matching PNG figures unless ``--no-plot`` is given. Exit codes: 0 success,
1 configuration error, 2 unknown suite name, 3 unwritable output directory.
"""

from __future__ import annotations

import argparse
import copy
import os
import sys

from . import plots
from .scenarios import (ScenarioError, load_scenario, run_scenario, run_csv_lines,
                        summary_csv_lines, sweep, write_lines, SUMMARY_CSV_HEADER)
from .suites import get_suite, suite_names

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_UNKNOWN_SUITE = 2
EXIT_OUT_DIR = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bbqsim",
        description="Deterministic congestion-control simulator for BBR-family "
                    "RTT-fairness experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", required=True, metavar="DIR", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
        p.add_argument("--no-plot", action="store_true", help="skip PNG rendering")
        p.add_argument("--clip-s", type=float, default=None, metavar="S",
                       help="truncate every run to S simulated seconds (smoke runs)")

    p_run = sub.add_parser("run", help="run a single scenario file")
    p_run.add_argument("--scenario", required=True, metavar="PATH")
    common(p_run)

    p_suite = sub.add_parser("suite", help="run a named built-in suite")
    p_suite.add_argument("--name", required=True, metavar="NAME")
    common(p_suite)

    p_sweep = sub.add_parser("sweep", help="sweep one parameter of a scenario")
    p_sweep.add_argument("--scenario", required=True, metavar="PATH")
    p_sweep.add_argument("--axis", required=True, metavar="KEY=V1,V2,...",
                         help="axis key and comma-separated values, "
                              "e.g. rate_mbps=10,100,1000 or flow1.rtt_ms=10,50")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    common(p_sweep)
    return parser


def _progress(args, msg: str) -> None:
    if not args.quiet:
        print(msg, file=sys.stderr)


def _prepare_out_dir(path: str) -> bool:
    try:
        os.makedirs(path, exist_ok=True)
        probe = os.path.join(path, ".write_probe")
        with open(probe, "w") as fh:
            fh.write("")
        os.remove(probe)
        return True
    except OSError:
        return False


def _prepare_config(cfg, args):
    cfg = copy.deepcopy(cfg)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.clip_s is not None:
        for fc in cfg.flows:
            fc.start_s = min(fc.start_s, args.clip_s)
            end = min(fc.start_s + fc.duration_s, args.clip_s)
            fc.duration_s = max(end - fc.start_s, 0.001)
    return cfg


def _cmd_run(args) -> int:
    cfg = load_scenario(args.scenario)
    cfg = _prepare_config(cfg, args)
    _progress(args, f"running {args.scenario} (seed {cfg.seed})")
    result = run_scenario(cfg)
    write_lines(os.path.join(args.out, "run.csv"), run_csv_lines(result.samples))
    write_lines(os.path.join(args.out, "summary.csv"), summary_csv_lines(result.summary))
    if not args.no_plot:
        plots.render_run(result, os.path.join(args.out, "run.png"))
    _progress(args, f"wrote {args.out}/run.csv and {args.out}/summary.csv")
    return EXIT_OK


def _cmd_suite(args) -> int:
    try:
        suite = get_suite(args.name)
    except KeyError:
        print(f"unknown suite {args.name!r}; valid names: {', '.join(suite_names())}",
              file=sys.stderr)
        return EXIT_UNKNOWN_SUITE
    summary_lines = ["run," + SUMMARY_CSV_HEADER]
    named_results = []
    for run in suite.runs:
        cfg = _prepare_config(run.config, args)
        _progress(args, f"[{suite.name}] running {run.name}")
        result = run_scenario(cfg)
        named_results.append((run.name, result))
        write_lines(os.path.join(args.out, f"{run.name}.csv"), run_csv_lines(result.samples))
        summary_lines.extend(
            summary_csv_lines(result.summary, prefix=f"{run.name},")[1:])
        if not args.no_plot:
            plots.render_run(result, os.path.join(args.out, f"{run.name}.png"))
    write_lines(os.path.join(args.out, "summary.csv"), summary_lines)
    if not args.no_plot:
        plots.render_suite_shares(suite.name, named_results,
                                  os.path.join(args.out, "summary.png"))
    _progress(args, f"wrote {len(suite.runs)} runs and summary.csv to {args.out}")
    return EXIT_OK


def _parse_axis(spec: str) -> tuple[str, list]:
    key, sep, raw = spec.partition("=")
    key = key.strip()
    if not sep or not key or not raw.strip():
        raise ScenarioError(f"bad --axis {spec!r}, expected KEY=V1,V2,...")
    values = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            values.append(float(part))
        except ValueError:
            values.append(part)
    if not values:
        raise ScenarioError(f"bad --axis {spec!r}, no values")
    return key, values


def _cmd_sweep(args) -> int:
    cfg = load_scenario(args.scenario)
    cfg = _prepare_config(cfg, args)
    key, values = _parse_axis(args.axis)
    _progress(args, f"sweeping {key} over {values}")
    points = sweep(cfg, key, values, jobs=args.jobs)
    summary_lines = [f"{key}," + SUMMARY_CSV_HEADER]
    for point in points:
        tag = f"{point.value:g}" if isinstance(point.value, float) else str(point.value)
        write_lines(os.path.join(args.out, f"run_{key.replace('.', '_')}_{tag}.csv"),
                    run_csv_lines(point.result.samples))
        summary_lines.extend(
            summary_csv_lines(point.result.summary, prefix=f"{tag},")[1:])
    write_lines(os.path.join(args.out, "summary.csv"), summary_lines)
    if not args.no_plot:
        plots.render_sweep(key, points, os.path.join(args.out, "summary.png"))
    _progress(args, f"wrote {len(points)} sweep points to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not _prepare_out_dir(args.out):
        print(f"cannot write to output directory {args.out!r}", file=sys.stderr)
        return EXIT_OUT_DIR
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "suite":
            return _cmd_suite(args)
        return _cmd_sweep(args)
    except (ScenarioError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

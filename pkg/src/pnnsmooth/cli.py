"""Command-line entry point: ``pnnsmooth run|sweep|selftest|gen``."""

from __future__ import annotations

import argparse
import itertools
import logging
import sys
from pathlib import Path

from .bench import (ExperimentConfig, cmd_run, cmd_sweep, format_table, report_rows, rows_csv,
                    summary_csv)
from .data import gen_mixture, parse_mixture, write_points
from .lloyd import DEFAULT_MAX_ITER, AcceleratorKind

log = logging.getLogger("pnnsmooth")

ACCELS = [a.value for a in AcceleratorKind]


def _add_common(p: argparse.ArgumentParser, multi: bool) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="point file, one point per line")
    src.add_argument("--mixture", help="generated mixture, e.g. k=20,dim=2,n=250,sigma=0.02,sep=0.15,seed=1")
    p.add_argument("--scale", default="none", help="none|unitbox|longitude:1.7|pm1 (default: none)")
    p.add_argument("--k", type=int, required=True)
    if multi:
        p.add_argument("--seeder", action="append", required=True,
                       help="seeder spec; repeat to sweep several")
        p.add_argument("--accel", action="append", choices=ACCELS,
                       help="accelerator; repeat to sweep several (default: naive)")
    else:
        p.add_argument("--seeder", default="km++", help="e.g. unif, km++, pnns(km++);rho=1")
        p.add_argument("--accel", default="naive", choices=ACCELS)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="base seed; repetition r uses seed+r")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--gt", help="ground-truth centroid file (enables CI and success rate)")
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pnnsmooth", description="k-means seeding benchmark harness")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="repeat one seeder/accelerator configuration")
    _add_common(run, multi=False)
    run.add_argument("--out", help="output file (default: CSV rows on stdout)")
    run.add_argument("--format", choices=("csv", "json"), default="csv")

    sweep = sub.add_parser("sweep", help="run every seeder x accel combination, print a summary table")
    _add_common(sweep, multi=True)
    sweep.add_argument("--out", help="write the combined summary CSV here")

    st = sub.add_parser("selftest", help="run the embedded property suite")
    st.add_argument("--tamper", action="store_true", help="under-count distances (negative control)")

    gen = sub.add_parser("gen", help="write a generated mixture and its .gt centroid file")
    gen.add_argument("--mixture", required=True)
    gen.add_argument("--out", required=True)
    return parser


def _config(args, seeder, accel, out=None, fmt="csv") -> ExperimentConfig:
    return ExperimentConfig(k=args.k, seeder=seeder, data_path=args.data, mixture=args.mixture,
                            scaling=args.scale, accel=accel, reps=args.reps, base_seed=args.seed,
                            threads=args.threads, ground_truth_path=args.gt, out=out, format=fmt,
                            max_iter=args.max_iter)


def _run(args) -> int:
    config = _config(args, args.seeder, args.accel, args.out, args.format)
    result = cmd_run(config)
    if args.out is None:
        sys.stdout.write(rows_csv(report_rows(result.reports, config.base_seed)))
    print(format_table([result.summary]), file=sys.stderr)
    return 0


def _sweep(args) -> int:
    accels = args.accel or ["naive"]
    configs = [_config(args, s, a) for s, a in itertools.product(args.seeder, accels)]
    rows, errors = cmd_sweep(configs)
    if rows:
        print(format_table(rows))
    if args.out is not None:
        Path(args.out).write_text(summary_csv(rows))
    for cfg, exc in errors:
        print(f"error: {cfg.seeder} / {cfg.accel.value}: {exc}", file=sys.stderr)
    return 1 if errors else 0


def _gen(args) -> int:
    data, gt = gen_mixture(parse_mixture(args.mixture))
    write_points(args.out, data)
    write_points(args.out + ".gt", gt.centroids)
    print(f"wrote {data.n} points to {args.out} and {gt.k} centroids to {args.out}.gt")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "sweep":
            return _sweep(args)
        if args.command == "selftest":
            from .selftest import cmd_selftest
            return cmd_selftest(tamper=args.tamper)
        return _gen(args)
    except (OSError, ValueError) as exc:
        print(f"pnnsmooth: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: run experiment configs with overrides."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .harness import ConfigError, ExperimentConfig, parse_config, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gyropic",
        description="Asymptotic-preserving PIC experiments for strongly magnetized 2D plasmas",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the experiment described by a config file")
    run.add_argument("config", help="path to a flat key = value config file")
    run.add_argument(
        "--epsilon", action="append", type=float, metavar="EPS",
        help="override epsilon_list (repeatable)",
    )
    run.add_argument(
        "--dt", action="append", type=float, metavar="DT",
        help="override dt_list (repeatable)",
    )
    run.add_argument(
        "--order", action="append", type=int, choices=(1, 2, 3),
        help="override scheme orders (repeatable)",
    )
    run.add_argument("--out", help="override the output directory")
    run.add_argument("--seed", type=int, help="override the sampling seed")
    run.add_argument("--workers", type=int, help="worker count for particle loops")
    return parser


def _apply_overrides(cfg: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    if args.epsilon:
        cfg = replace(cfg, epsilon_list=args.epsilon)
    if args.dt:
        cfg = replace(cfg, dt_list=args.dt)
    if args.order:
        cfg = replace(cfg, orders=args.order)
    if args.out:
        cfg = replace(cfg, out_dir=args.out)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.workers is not None:
        cfg = replace(cfg, workers=args.workers)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(parse_config(args.config), args).validate()
        result = run_experiment(cfg)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    if cfg.family == "VlasovPoisson":
        for s in result:
            print(
                f"eps={s.epsilon:g}: {s.rows} steps, energy drift {s.energy_drift:.3%}, "
                f"invariant drift {s.invariant_drift:.3%}, "
                f"max escaped fraction {s.max_escaped_fraction:.3%} -> {s.out_dir}"
            )
    else:
        ok = sum(1 for r in result if r.status == "ok")
        print(f"{len(result)} sweep cells ({ok} ok) -> {cfg.out_dir}/errors.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())

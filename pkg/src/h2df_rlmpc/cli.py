"""Command-line entry point.

    h2df-rlmpc [--config PATH] [--seed N] [--out DIR] <stage>

Stages run against the artifacts already present in the output directory,
so `run-baseline` needs `train-plant` to have run first, and so on.
Exit codes: 0 success, 2 config error, 3 numeric failure, 4 divergence abort.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import harness
from .core_types import ConfigError, DivergenceError, NumericError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_DIVERGENCE = 0, 2, 3, 4


def _gen_data(cfg):
    return {"dataset": str(harness.gen_data(cfg))}


def _train_plant(cfg):
    harness.train_plant(cfg)
    return {"model": str(harness._out(cfg) / "plant_model.json")}


STAGES = {
    "gen-data": _gen_data,
    "train-plant": _train_plant,
    "run-baseline": harness.run_baseline,
    "train-agent": harness.train_agent,
    "evaluate": harness.evaluate,
    "report": harness.report,
    "all": harness.run_pipeline,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="h2df-rlmpc",
        description="Hybrid TD3 + neural-network MPC load-control experiment on a synthetic H2DF engine.",
        epilog="exit codes: 0 success, 2 config error, 3 numeric failure, 4 divergence abort",
    )
    p.add_argument("--config", metavar="PATH", help="JSON config; keys override the defaults")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("stage", choices=sorted(STAGES), help="pipeline stage; 'all' runs every stage in order")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = args.out
    try:
        cfg = harness.load_config(args.config, **overrides)
        result = STAGES[args.stage](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DivergenceError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    print(json.dumps(result, indent=2, default=str))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry points for the experiment pipeline.

Every subcommand reads the same config file format; the single-stage
commands replace the configured stage list with just their own stage,
while `pipeline` runs the list as configured. Exit status is 0 on
success, 2 when a config or stage precondition fails, and 3 when an
iteration fails to converge.
"""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .errors import DomainError, NonConvergenceError, PreconditionError
from .pipeline import StageFailure, run_pipeline

_SINGLE_STAGES = (
    "check-domination",
    "find-pinching",
    "exponent",
    "holonomy-audit",
    "perturb",
    "su-defect",
)


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH",
                        help="experiment config file (JSON)")
    common.add_argument("--seed", type=int, default=None, metavar="N",
                        help="override the config seed")
    common.add_argument("--out", default=None, metavar="DIR",
                        help="override the output directory")
    common.add_argument("--tol", type=float, default=None, metavar="X",
                        help="override the holonomy tolerance")
    common.add_argument("--no-figures", action="store_true",
                        help="skip figure rendering")

    parser = argparse.ArgumentParser(
        prog="pinchlab",
        description="Config-driven experiments on circle-fibred cocycles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SINGLE_STAGES:
        sub.add_parser(name, parents=[common], help=f"run only the {name} stage")
    sub.add_parser("pipeline", parents=[common], help="run the configured stage list")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed, out_dir=args.out, tol=args.tol)
        if args.command != "pipeline":
            cfg = cfg.with_stages((args.command,))
        bundle = run_pipeline(cfg, render_figures=not args.no_figures)
    except StageFailure as err:
        print(f"error: {err}", file=sys.stderr)
        return 3 if isinstance(err.cause, NonConvergenceError) else 2
    except NonConvergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except (DomainError, PreconditionError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    for line in bundle.summary_lines():
        print(line)
    print(f"report written to {bundle.out_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""
Command-line front end.

    schinzel-lab density --degrees 2 --truncation 1000000
    schinzel-lab prob --rd 2
    schinzel-lab model-verify --ell 3 --degrees 1
    schinzel-lab --config configs/experiments.yml --experiment pair_corr_d1

Exit codes: 0 success, 1 usage/validation/IO error, 2 budget exhausted,
3 internal invariant violated.
"""

import argparse
import sys
from typing import Any, Optional

from pydantic import ValidationError

from . import __version__
from .config import load_experiments
from .engine import ShardEngineError
from .errors import BudgetExceededError, InvariantViolationError
from .logger import logger, set_level
from .models import SUBCOMMANDS, TASKS, ExperimentConfig
from .runner import ExperimentExecutionError, ExperimentRunner
from .writers import WriterError, create_writer

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BUDGET = 2
EXIT_INVARIANT = 3


class UsageError(Exception):
    """Raised instead of argparse's own exit so usage errors map to exit code 1."""

    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(raw: str) -> list[int]:
    try:
        return [int(part) for part in raw.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected a comma list of integers, got '{raw}'") from e


def _int_lists(raw: str) -> list[list[int]]:
    """'0,1;2,1' -> [[0, 1], [2, 1]]; an empty group is allowed ('3;5;')."""
    return [_int_list(group) for group in raw.split(";")]


def _common_options() -> argparse.ArgumentParser:
    # Flags left out stay absent, so catalogue values and model defaults apply.
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    box = common.add_argument_group("polynomials and boxes")
    box.add_argument("-H", "--height", type=int, help="Height bound H of the box")
    box.add_argument("--degrees", type=_int_list, help="Degrees d_1,...,d_n")
    box.add_argument("--modulus", type=int, help="Modulus M of the progression")
    box.add_argument("--anchor", type=int, help="Residue n0 of the progression")
    box.add_argument(
        "--residues", type=_int_lists, help="Residue polynomials Q_i, e.g. '1,0;0,1'"
    )
    box.add_argument(
        "--polys", type=_int_lists, help="Polynomials, constant term first, e.g. '0,1;2,1'"
    )
    box.add_argument("--d", type=int, help="Single degree d")

    conic = common.add_argument_group("conics")
    conic.add_argument(
        "--coefficients",
        type=_int_list,
        help="a1,a2,a3 (use --coefficients=-1,1,1 for a negative first entry)",
    )
    conic.add_argument("--groups", type=_int_list, help="Group sizes n1,n2,n3")
    conic.add_argument("--primes", type=_int_lists, help="Prime groups, e.g. '3;5;7'")
    conic.add_argument("--norm", type=int, help="a in x^2 + a y^2 = f(m)")

    run = common.add_argument_group("run parameters")
    run.add_argument("--task", help="Task within the subcommand")
    run.add_argument("--x", type=float, help="Cutoff x")
    run.add_argument("--bound", type=int, help="Upper bound for m")
    run.add_argument("--samples", type=int, help="Number of samples")
    run.add_argument("--ell", type=int, help="Prime ell of the finite-field model")
    run.add_argument("--k", type=int, help="First shift k")
    run.add_argument("--m", type=int, help="Second shift m")
    run.add_argument("--epsilon", type=float, help="Exponent slack epsilon")
    run.add_argument("--exponent", type=float, help="Exponent C or A")
    run.add_argument("--c", type=float, help="Exceptional-set exponent c")
    run.add_argument("--mode", choices=["exhaustive", "sampled"], help="Enumeration mode")
    run.add_argument("--truncation", type=int, help="Euler product truncation L")
    run.add_argument("--seed", type=int, help="64-bit seed")
    run.add_argument("--threads", type=int, help="Worker processes")

    output = common.add_argument_group("output")
    output.add_argument("--format", choices=["json", "csv"], help="Report format")
    output.add_argument("--out", help="Report path (default: stdout)")
    output.add_argument(
        "--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Logging level"
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = _Parser(
        prog="schinzel-lab",
        description="Experiments on prime values of polynomial tuples and conic bundles",
        parents=[common],
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="YAML experiment catalogue")
    parser.add_argument("--experiment", help="Experiment name inside --config")

    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser)
    for name in SUBCOMMANDS:
        child = sub.add_parser(name, parents=[common], help=f"tasks: {', '.join(TASKS[name])}")
        if name == "prob":
            which = child.add_mutually_exclusive_group()
            which.add_argument("--rd", type=int, metavar="D", help="Exact r_D")
            which.add_argument("--lower-bound", type=int, metavar="D", help="Lower bound at D")
    return parser


_NOT_CONFIG = {"config", "experiment", "log_level", "rd", "lower_bound"}


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    values = {
        key: value
        for key, value in vars(args).items()
        if value is not None and key not in _NOT_CONFIG
    }
    if getattr(args, "rd", None) is not None:
        values.update(task="rd", d=args.rd)
    if getattr(args, "lower_bound", None) is not None:
        values.update(task="lower-bound", d=args.lower_bound)
    return values


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """
    Build the experiment from flags, or from a catalogue entry with the flags
    layered on top.
    """
    overrides = _overrides(args)
    if args.config or args.experiment:
        if not (args.config and args.experiment):
            raise UsageError("--config and --experiment go together")
        experiments = load_experiments(args.config)
        if args.experiment not in experiments:
            raise UsageError(
                f"Experiment '{args.experiment}' not found. Available: {list(experiments)}"
            )
        base = experiments[args.experiment].model_dump(exclude_unset=True)
        if "subcommand" in overrides and overrides["subcommand"] != base["subcommand"]:
            base.pop("task", None)
        return ExperimentConfig(**(base | overrides))
    if "subcommand" not in overrides:
        raise UsageError("a subcommand or --config/--experiment is required")
    return ExperimentConfig(**overrides)


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "log_level", None):
            set_level(args.log_level)
        config = config_from_args(args)
        writer = create_writer(config.format, config.out)
        report = ExperimentRunner(config).run()
        writer.write(report)
        return EXIT_OK
    except UsageError as e:
        parser.print_usage(sys.stderr)
        logger.error(f"Usage error: {e}")
        return EXIT_USAGE
    except BudgetExceededError as e:
        logger.error(f"Budget exhausted: {e}")
        return EXIT_BUDGET
    except (InvariantViolationError, ExperimentExecutionError, ShardEngineError) as e:
        logger.error(f"Internal invariant violated: {e}")
        return EXIT_INVARIANT
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_USAGE
    except (ValueError, OSError, WriterError) as e:
        logger.error(f"Error: {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

import argparse
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from fastmcp import FastMCP
from pydantic import ValidationError

from .config import config
from .exceptions import ConfigError, InputFileError, MsrCertError
from .models import FixtureConfig, RunConfig


# MCP server instance
mcp = FastMCP("msrcert")

logger = logging.getLogger(__name__)

COMMANDS = ("certify", "attack", "saliency", "gen-fixtures", "report")

# command name -> runner taking a RunConfig and returning the exit status
_RUNNERS: Dict[str, Callable[[RunConfig], int]] = {}


def register_command(name: str) -> Callable[[Callable[[RunConfig], int]], Callable[[RunConfig], int]]:
    def decorator(fn: Callable[[RunConfig], int]) -> Callable[[RunConfig], int]:
        _RUNNERS[name] = fn
        return fn
    return decorator


def _indices(value: str) -> List[int]:
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}") from None


def _kernel(value: str) -> List[int]:
    parts = value.lower().replace("x", ",").split(",")
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a kernel like 3x3, got {value!r}") from None


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msrcert",
        add_help=True,
        description=(
            "Certified lower bounds and substitution-based upper bounds of the maximum safe "
            "radius of text classifiers. 'serve' starts the MCP server on stdio."
        ),
    )
    parser.add_argument("command", choices=COMMANDS + ("serve",))
    parser.add_argument("--log-level", dest="log_level", default=None, help="Logging level (default: MSRCERT_LOG_LEVEL or INFO)")

    inputs = parser.add_argument_group("inputs")
    inputs.add_argument("--embedding", help="Embedding file: 'token v1 ... vd' per line")
    inputs.add_argument("--model", help="JSON weight manifest")
    inputs.add_argument("--texts", help="One whitespace-tokenized text per line")
    inputs.add_argument("--lexicon", help="POS lexicon: 'token<TAB>tag' per line, '#compat A B' headers")
    inputs.add_argument("--input", help="JSON report to summarize (report command)")

    certify = parser.add_argument_group("certification")
    certify.add_argument("--norm", choices=["l2", "linf"], default="l2")
    words = certify.add_mutually_exclusive_group()
    words.add_argument("--indices", type=_indices, help="0-based word positions perturbed together, e.g. 0,2")
    words.add_argument("--each-word", dest="each_word", action="store_true", help="Certify every word on its own")
    certify.add_argument("--tol", type=float, default=config.tol, help="Bisection tolerance relative to the diameter")

    attack = parser.add_argument_group("attack")
    attack.add_argument("--sims", type=int, default=config.sims)
    attack.add_argument("--alpha", type=float, default=config.alpha)
    attack.add_argument("--neighbors", dest="neighbor_limit", type=int, default=config.neighbor_limit)
    attack.add_argument("--budget", dest="budget_fraction", type=float, default=config.budget_fraction,
                        help="Fraction of tree vertices to visit before stopping")
    attack.add_argument("--max-iterations", dest="max_iterations", type=int, default=config.max_iterations)
    attack.add_argument("--depth", type=int, default=config.depth, help="Most words substituted at once")
    attack.add_argument("--sampling", choices=["pickup", "uniform"], default="pickup")
    attack.add_argument("--seed", type=int, default=config.seed)

    fixtures = parser.add_argument_group("fixtures")
    fixtures.add_argument("--dim", type=int, default=5)
    fixtures.add_argument("--length", type=int, default=5)
    fixtures.add_argument("--arch", dest="architecture", choices=["dense", "mlp", "cnn"], default="dense")
    fixtures.add_argument("--polarity-words", dest="polarity_words", type=int, default=10)
    fixtures.add_argument("--num-texts", dest="num_texts", type=int, default=200)
    fixtures.add_argument("--kernel", type=_kernel, default=[3, 3], help="CNN kernel, e.g. 3x3")
    fixtures.add_argument("--iterations", type=int, default=400)

    output = parser.add_argument_group("output")
    output.add_argument("--out", dest="output", help="Report file (gen-fixtures: output directory); stdout when omitted")
    output.add_argument("--format", choices=["json", "csv"], default="json")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Validate parsed flags into a RunConfig; ConfigError on invalid values."""
    values: Dict[str, Any] = {
        key: getattr(args, key)
        for key in (
            "command", "embedding", "model", "texts", "lexicon", "input", "output", "norm", "indices",
            "tol", "sims", "alpha", "neighbor_limit", "budget_fraction", "max_iterations", "depth",
            "sampling", "seed", "format",
        )
    }
    values["each_word"] = bool(args.each_word)
    for name in ("embedding", "model", "texts", "lexicon", "input"):
        path = values[name]
        if path is not None and not Path(path).is_file():
            raise InputFileError(f"{name} file does not exist: {path}", path=str(path))
    try:
        values["fixture"] = FixtureConfig(
            dim=args.dim,
            length=args.length,
            architecture=args.architecture,
            polarity_words=args.polarity_words,
            num_texts=args.num_texts,
            kernel_size=tuple(args.kernel),
            iterations=args.iterations,
        )
        return RunConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from None


def run(run_config: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    # Importing registers the command runners
    from . import commands  # noqa: F401

    try:
        return _RUNNERS[run_config.command](run_config)
    except MsrCertError as e:
        logger.error(f"{run_config.command} failed: {e}")
        return e.exit_code
    except Exception as e:
        logger.exception(f"{run_config.command} failed unexpectedly: {e}")
        return 1


def init_from_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    args = build_arg_parser().parse_args(argv)
    config.setup_logging(args.log_level)
    return args


__all__ = [
    "mcp",
    "build_arg_parser",
    "config_from_args",
    "init_from_args",
    "register_command",
    "run",
]

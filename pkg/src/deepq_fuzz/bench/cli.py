"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 target environment error, 3 aborted run.
"""

import argparse
import json
import logging
import shlex
import sys
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from ..config import load_loop_config, settings
from ..errors import RunAborted, SeedError, TargetEnvironmentError, WeightFormatError
from ..harness import calibrate_timing, make_target
from ..loop import load_seeds, read_report, run, write_report, write_table
from ..models import LoopConfig, PolicyKind, RewardMode, TargetKind
from .experiments import (
    SWEEP_DIMENSIONS,
    compare_baseline,
    generalization_run,
    reward_correlation,
    with_changes,
)
from .experiments import sweep as run_sweep

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_TARGET = 2
EXIT_ABORTED = 3

REWARD_ALIASES = {
    "r1": RewardMode.COVERAGE,
    "r2": RewardMode.TIME,
    "r3": RewardMode.COMBINED,
    "path": RewardMode.PATH_LENGTH,
}


class UsageError(Exception):
    """Bad command-line arguments."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="TOML experiment configuration")
    parser.add_argument(
        "--target",
        help="builtin, rigged, or a command template with {input} for the input file",
    )
    parser.add_argument(
        "--coverage-map", action="store_true", help="command target writes a coverage map"
    )
    parser.add_argument(
        "--seed", type=Path, action="append", dest="seeds", help="seed file (repeatable)"
    )
    parser.add_argument("--generations", type=int)
    parser.add_argument("--state-width", type=int)
    parser.add_argument("--reward", choices=sorted(REWARD_ALIASES))
    parser.add_argument("--policy", help="learned, baseline or frozen:<weights>")
    parser.add_argument("--rng-seed", type=int)
    parser.add_argument("--timeout", type=float, help="per-execution timeout in seconds")
    parser.add_argument("--out", type=Path, default=None, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per experiment."""
    parser = _Parser(prog="deepq-fuzz", description="Deep Q-learning mutation fuzzer")
    parser.add_argument("--log-level", default=None)
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fuzz = commands.add_parser("fuzz", help="run the fuzzing loop once")
    _add_common(fuzz)
    fuzz.add_argument("--weights-out", type=Path, help="save the trained network here")

    for name, help_text in (
        ("bench", "compare the policy against the random baseline"),
        ("generalize", "train on first-half offsets, evaluate frozen on the second half"),
    ):
        sub = commands.add_parser(name, help=help_text)
        _add_common(sub)
        sub.add_argument("--trials", type=int, default=5)

    sweep = commands.add_parser("sweep", help="compare_baseline over a parameter grid")
    _add_common(sweep)
    sweep.add_argument("--trials", type=int, default=5)
    sweep.add_argument("--dimension", choices=SWEEP_DIMENSIONS, required=True)
    sweep.add_argument("--values", required=True, help="comma-separated values")

    correlate = commands.add_parser("correlate", help="coverage/time Pearson correlation")
    _add_common(correlate)
    correlate.add_argument("--samples", type=int, default=500)

    calibrate = commands.add_parser("calibrate", help="timing stability on the pristine seed")
    _add_common(calibrate)
    calibrate.add_argument("--runs", type=int, default=None)

    replay = commands.add_parser("replay", help="re-run the config embedded in a report")
    replay.add_argument("report", type=Path)
    replay.add_argument("--out", type=Path, default=None)
    return parser


def _target_overrides(value: str | None, coverage_map: bool) -> dict[str, Any] | None:
    if value is None:
        return None
    if value in (TargetKind.BUILTIN, TargetKind.RIGGED):
        return {"kind": value}
    return {"kind": TargetKind.COMMAND, "command": shlex.split(value), "coverage_map": coverage_map}


def _policy_overrides(value: str | None) -> dict[str, Any]:
    if value is None:
        return {}
    if value.startswith("frozen:"):
        return {"policy": PolicyKind.FROZEN, "weights_path": Path(value.split(":", 1)[1])}
    aliases = {"learned": PolicyKind.LEARNED, "baseline": PolicyKind.BASELINE}
    if value not in aliases:
        raise UsageError(f"unknown policy {value!r}; use learned, baseline or frozen:<weights>")
    return {"policy": aliases[value]}


def resolve_config(args: argparse.Namespace) -> LoopConfig:
    """Config file values with command-line flags applied on top."""
    out_dir = args.out or settings.out_dir
    overrides: dict[str, Any] = {
        "generations": args.generations,
        "state_width": args.state_width,
        "rng_seed": args.rng_seed,
        "seed_paths": args.seeds,
        "reward": {"mode": REWARD_ALIASES[args.reward]} if args.reward else None,
        "target": _target_overrides(args.target, args.coverage_map),
        "timeout": args.timeout,
        "findings_dir": out_dir / "findings",
        "weights_out": getattr(args, "weights_out", None),
        **_policy_overrides(args.policy),
    }
    return load_loop_config(args.config, overrides)


def _print(payload: dict) -> None:
    print(json.dumps(payload, indent=2, default=str))


def _fuzz(config: LoopConfig, out_dir: Path) -> int:
    report = run(config)
    report_path = out_dir / "report.csv"
    write_report(report, report_path)
    _print(
        {
            "report": report_path,
            "generations": len(report.records),
            "accumulated": report.accumulated[-1] if report.accumulated else 0.0,
            "findings": len(report.findings),
            "aborted": report.aborted,
            "abort_reason": report.abort_reason,
        }
    )
    return EXIT_ABORTED if report.aborted else EXIT_OK


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "replay":
        out_dir = args.out or args.report.parent / "replay"
        config = read_report(args.report).config
        # outputs of the original run stay untouched
        redirected = {"findings_dir": out_dir / "findings"}
        if config.weights_out is not None:
            redirected["weights_out"] = out_dir / config.weights_out.name
        return _fuzz(with_changes(config, **redirected), out_dir)

    config = resolve_config(args)
    out_dir = args.out or settings.out_dir
    match args.command:
        case "fuzz":
            return _fuzz(config, out_dir)
        case "bench" | "generalize":
            experiment = compare_baseline if args.command == "bench" else generalization_run
            result = experiment(config, args.trials)
            write_table(result.trials, out_dir / f"{args.command}.csv")
            _print(result.model_dump(mode="json", exclude={"trials"}))
        case "sweep":
            values = [value.strip() for value in args.values.split(",") if value.strip()]
            rows = run_sweep(args.dimension, values, config, args.trials)
            write_table(rows, out_dir / "sweep.csv")
            _print({"rows": [row.model_dump(mode="json") for row in rows]})
        case "correlate":
            _print({"pearson": reward_correlation(config, args.samples)})
        case "calibrate":
            seed = load_seeds(config.seed_paths, config.state_width)[0]
            target = make_target(config.target, seed, config.state_width)
            try:
                result = calibrate_timing(target, seed, runs=args.runs, timeout=config.timeout)
            finally:
                target.close()
            _print(result.model_dump())
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    """Entry point; returns the process exit code."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"deepq-fuzz: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=(args.log_level or settings.log_level).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return _dispatch(args)
    except TargetEnvironmentError as exc:
        logger.error("Target environment error: %s", exc)
        return EXIT_TARGET
    except RunAborted as exc:
        logger.error("Aborted: %s", exc)
        return EXIT_ABORTED
    except (
        UsageError,
        ValidationError,
        SeedError,
        WeightFormatError,
        ValueError,
        OSError,
    ) as exc:
        logger.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

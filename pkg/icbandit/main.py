"""
Command-line entry point.

    icbandit run <config> [--seeds N] [--base-seed S] [--out DIR] [--threads N] [--mode strict|scan]
    icbandit verify [--suite S] [--algorithm A] [--json OUT] [--full]
    icbandit scale <config> --horizons a,b,c [same flags as run]

Exit codes: 0 success, 1 configuration or input error, 2 run failure or
failed verification, 3 I/O error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from icbandit import __version__
from icbandit.config import get_settings
from icbandit.errors import ConfigurationError, ErrorTransformer
from icbandit.schemas.experiment import ExperimentConfig, load_experiment_config
from icbandit.services import emitter, runner, scaling
from icbandit.services.verification import SUITES, verify
from icbandit.utils.io import ensure_writable_directory, write_atomic
from icbandit.utils.logging import configure_logging

logger = logging.getLogger("icbandit.cli")

EXIT_OK = 0
EXIT_FAILED = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="icbandit",
        description="Incentive-compatible bandit algorithms: seeded runs, scaling and verification",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    run_flags = argparse.ArgumentParser(add_help=False)
    run_flags.add_argument("config", type=Path, help="experiment configuration file")
    run_flags.add_argument("--seeds", type=int, help="number of seeds (from --base-seed)")
    run_flags.add_argument("--base-seed", type=int, help="first seed")
    run_flags.add_argument("--out", type=Path, help="output directory")
    run_flags.add_argument("--threads", type=int, help="worker threads")
    run_flags.add_argument("--mode", choices=("strict", "scan"), help="breach handling")

    commands.add_parser("run", parents=[run_flags], help="run an experiment and emit CSV/JSON")

    scale = commands.add_parser("scale", parents=[run_flags], help="run at several horizons")
    scale.add_argument("--horizons", required=True, help="comma-separated horizons, e.g. 4000,16000,64000")
    scale.add_argument("--min-seeds", type=int, default=scaling.DEFAULT_MIN_SEEDS)

    check = commands.add_parser("verify", help="run oracle batteries")
    check.add_argument(
        "--suite",
        action="append",
        help=f"suite id ({', '.join(('all',) + SUITES)}); repeatable or comma-separated",
    )
    check.add_argument(
        "--algorithm",
        action="append",
        help="restrict the simplex, affinity and truthfulness suites to an algorithm id; repeatable or comma-separated",
    )
    check.add_argument("--json", type=Path, dest="json_out", help="write the JSON report here")
    check.add_argument("--full", action="store_true", help="use the full acceptance battery sizes")
    return parser


def _load(args: argparse.Namespace) -> ExperimentConfig:
    """Read the config file and apply CLI flags, then settings defaults for keys the file leaves out."""
    settings = get_settings()
    config = load_experiment_config(args.config)
    declared = config.experiment.model_fields_set
    threads = args.threads
    if threads is None and "threads" not in declared:
        threads = settings.default_threads
    mode = args.mode
    if mode is None and "mode" not in declared:
        mode = settings.default_mode
    output = args.out
    if output is None and "output" not in declared:
        output = settings.output_dir
    return config.with_overrides(
        seeds=args.seeds,
        base_seed=args.base_seed,
        output=None if output is None else str(output),
        threads=threads,
        mode=mode,
    )


def command_run(args: argparse.Namespace) -> int:
    config = _load(args)
    output = ensure_writable_directory(Path(config.experiment.output))
    result = runner.run(config)
    emitter.emit(result, output, config.experiment.formats)
    print(json.dumps({"output": str(output), "final_mean": result.final_mean, "breaches": len(result.breaches)}))
    return EXIT_OK


def _parse_horizons(text: str) -> List[int]:
    try:
        horizons = [int(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise ConfigurationError(f"Invalid horizon list: {text}") from e
    if len(horizons) < 2:
        raise ConfigurationError("Scaling needs at least two horizons")
    return horizons


def command_scale(args: argparse.Namespace) -> int:
    config = _load(args)
    horizons = _parse_horizons(args.horizons)
    output = ensure_writable_directory(Path(config.experiment.output))
    results, report = scaling.run_scaling(config, horizons, min_seeds=args.min_seeds)
    for result in results:
        emitter.emit(result, output / f"T={result.horizon}", config.experiment.formats)
    write_atomic(output / "scaling.json", json.dumps(report.model_dump(mode="json"), sort_keys=True, indent=2) + "\n")
    print(json.dumps({"horizons": report.horizons, "ratios": report.ratios}))
    return EXIT_OK


def _split_flags(values: Optional[List[str]]) -> List[str]:
    return [name.strip() for value in values or [] for name in value.split(",") if name.strip()]


def command_verify(args: argparse.Namespace) -> int:
    selection = _split_flags(args.suite) or ["all"]
    if args.json_out:
        ensure_writable_directory(args.json_out.parent)
    report = verify(selection, full=args.full, algorithms=_split_flags(args.algorithm))
    text = json.dumps(report.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"
    if args.json_out:
        write_atomic(args.json_out, text)
    print(json.dumps({"passed": report.passed, "summary": report.summary()}))
    return EXIT_OK if report.passed else EXIT_FAILED


COMMANDS = {"run": command_run, "scale": command_scale, "verify": command_verify}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse reports usage errors with status 2; they are configuration errors here
        return 1 if e.code == 2 else int(e.code or 0)
    transformer = ErrorTransformer()
    try:
        try:
            settings = get_settings()
        except ValidationError as e:
            raise ConfigurationError("Invalid ICBANDIT_* environment settings", details={"errors": str(e)}) from e
        configure_logging(settings)
        return COMMANDS[args.command](args)
    except Exception as e:  # noqa: BLE001
        payload = transformer.transform_error(e)
        logger.error("Command failed", extra={"command": args.command, "code": payload["error"]["code"]})
        print(json.dumps(payload, default=str), file=sys.stderr)
        return transformer.exit_code(e)


if __name__ == "__main__":
    sys.exit(main())

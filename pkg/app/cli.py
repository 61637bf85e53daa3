"""
Command-line front end

    python -m app.cli design   [--config run.env] [--N 20 --M 10 --n 1 ...]
    python -m app.cli profile  {excitation,rotation,hard} [flags]
    python -m app.cli verify   [flags] [--inject-u0 0.5]
    python -m app.cli reproduce {fig2_left,...,hard90} [flags]

Flags mirror the RunConfig keys. Exit codes: 0 success, 1 validation
error, 2 verification failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from app.core.config import RunConfig, configure_logging, load_run_config
from app.core.errors import DoubleSweepError, VerificationError
from app.core.fourier import coefficients
from app.core.schema import CoefficientSet, RunManifest, VerificationReport
from app.services.orchestrator import PROFILE_FAMILIES, RunOrchestrator
from app.services.verification import run_verification

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_VERIFY_FAILED = 2


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="flat key=value run file")
    group = parser.add_argument_group("run configuration")
    for name, field in RunConfig.model_fields.items():
        # Values stay strings here; RunConfig does the typing and validation
        group.add_argument(_flag(name), dest=name, default=None, help=field.description)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsweep",
        description="Broadband excitation and rotation pulses from Fourier waveforms and adiabatic double sweeps",
    )
    parser.add_argument("--log-level", default=None, help="overrides LOG_LEVEL")
    commands = parser.add_subparsers(dest="command", required=True)

    design = commands.add_parser("design", help="write Fourier coefficients and the design report")
    _add_config_flags(design)

    profile = commands.add_parser("profile", help="simulate an offset profile")
    profile.add_argument("family", choices=PROFILE_FAMILIES)
    _add_config_flags(profile)

    verify = commands.add_parser("verify", help="run the invariant suite")
    verify.add_argument("--inject-u0", type=float, default=None, help="replace u_0 (negative control)")
    _add_config_flags(verify)

    reproduce = commands.add_parser("reproduce", help="run a figure preset")
    reproduce.add_argument("name")
    _add_config_flags(reproduce)
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {name: getattr(args, name) for name in RunConfig.model_fields}


def _print_files(manifest: RunManifest, config: RunConfig) -> None:
    for name in manifest.files:
        print(Path(config.output_dir) / name)


def cmd_design(args: argparse.Namespace, orchestrator: RunOrchestrator) -> int:
    config = load_run_config(args.config, _overrides(args))
    _print_files(orchestrator.design(config), config)
    return EXIT_OK


def cmd_profile(args: argparse.Namespace, orchestrator: RunOrchestrator) -> int:
    config = load_run_config(args.config, _overrides(args))
    _print_files(orchestrator.profile(config, args.family), config)
    return EXIT_OK


def cmd_reproduce(args: argparse.Namespace, orchestrator: RunOrchestrator) -> int:
    manifest = orchestrator.figure_run(args.name, _overrides(args), args.config)
    _print_files(manifest, orchestrator.figure_config(args.name, _overrides(args), args.config))
    return EXIT_OK


def report_json(report: VerificationReport) -> str:
    payload = {
        "passed": report.passed,
        "failed": report.failed,
        "deviations": report.deviations,
        **report.model_dump(mode="json"),
    }
    return json.dumps(payload, indent=2)


def cmd_verify(args: argparse.Namespace, orchestrator: RunOrchestrator) -> int:
    config = load_run_config(args.config, _overrides(args))
    override: Optional[CoefficientSet] = None
    if args.inject_u0 is not None:
        u = list(coefficients(config.design()).u)
        u[0] = args.inject_u0
        override = CoefficientSet(u=u)

    report = run_verification(config, override)
    text = report_json(report)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "verify_report.json").write_text(text)
    print(text)
    if report.deviations:
        logger.warning("Below target: %s", ", ".join(report.deviations))
    if not report.passed:
        raise VerificationError(report.failed)
    return EXIT_OK


COMMANDS = {
    "design": cmd_design,
    "profile": cmd_profile,
    "verify": cmd_verify,
    "reproduce": cmd_reproduce,
}


def main(argv: Optional[List[str]] = None, orchestrator: Optional[RunOrchestrator] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return COMMANDS[args.command](args, orchestrator or RunOrchestrator())
    except VerificationError as e:
        logger.error("%s", e)
        return EXIT_VERIFY_FAILED
    except (ValidationError, DoubleSweepError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

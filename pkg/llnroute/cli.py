"""
Command-line entry point.

    llnroute run <scenario> [--out DIR] [--jobs N] [--trace] [--format csv|json|both]
    llnroute sweep <scenario> [same options]
    llnroute validate <scenario>

Exit codes: 0 success, 1 result files not writable, 2 scenario error,
3 a run aborted.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from config import settings
from llnroute import __version__
from llnroute.errors import ConfigError, ResultsWriteError, RunAborted
from llnroute.scenario import ScenarioConfig, dump_config, parse_config, with_seed_override
from llnroute.sweep import (
    emit_config_echo,
    emit_results,
    emit_summary,
    run_sweep,
    summarize,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_WRITE = 1
EXIT_CONFIG = 2
EXIT_ABORTED = 3


def configure_logging(level: str | None = None) -> None:
    """Root logging from settings.yaml; LLNROUTE_LOG_LEVEL and --log-level win."""
    log = settings.yaml.logging
    chosen = (level or settings.env.log_level or log.level).upper()
    logging.basicConfig(
        level=chosen,
        format=log.format,
        filename=log.filename or None,
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="llnroute",
        description="Compare LOADng and AODV on simulated AMI mesh networks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", help="Override the configured log level")
    commands = parser.add_subparsers(dest="command", required=True)

    for name, text in (
        ("run", "Run the scenario at its configured node count or distance"),
        ("sweep", "Run the scenario's sweep and write a summary with 95%% CIs"),
    ):
        sub = commands.add_parser(name, help=text)
        sub.add_argument("config", type=Path, help="Scenario file")
        sub.add_argument("--out", type=Path, default=Path("results"), help="Output directory")
        sub.add_argument(
            "--jobs",
            type=int,
            default=settings.env.jobs or 1,
            help="Concurrent runs (default: LLNROUTE_JOBS or 1)",
        )
        sub.add_argument("--trace", action="store_true", help="Write one event trace per run")
        sub.add_argument(
            "--format", choices=("csv", "json", "both"), default="csv", help="Result file format"
        )

    check = commands.add_parser("validate", help="Parse a scenario and print it fully resolved")
    check.add_argument("config", type=Path, help="Scenario file")
    return parser


def _execute(cfg: ScenarioConfig, args: argparse.Namespace) -> None:
    out: Path = args.out
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ResultsWriteError(str(out), exc) from exc
    emit_config_echo(dump_config(cfg), out)
    results = run_sweep(cfg, jobs=max(1, args.jobs), trace_dir=out if args.trace else None)
    rows = [r.row for r in results]
    formats = ("csv", "json") if args.format == "both" else (args.format,)
    for fmt in formats:
        emit_results(rows, fmt, out)
    if args.command == "sweep":
        emit_summary(summarize(rows), out)
    for r in results:
        non_owner = r.report.router_counters.get("rrep_generated_by_non_owner", 0)
        if non_owner:
            logger.warning(
                "%s seed=%d: %d RREPs generated by non-owners", r.row.protocol, r.row.seed, non_owner
            )


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        cfg = with_seed_override(parse_config(args.config), settings.env.seed)
        if args.command == "validate":
            sys.stdout.write(dump_config(cfg))
            return EXIT_OK
        if args.command == "sweep" and cfg.sweep is None:
            raise ConfigError("sweep", None, "the sweep command needs sweep.axis and sweep.values")
        if args.command == "run" and cfg.sweep is not None:
            cfg = cfg.model_copy(update={"sweep": None})
        logger.info("%s %s: %s", args.command, args.config, ",".join(cfg.protocol))
        _execute(cfg, args)
    except ConfigError as exc:
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RunAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ABORTED
    except ResultsWriteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_WRITE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

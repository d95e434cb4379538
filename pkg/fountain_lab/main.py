"""Command-line entry point of the fountain code lab.

Every subcommand writes one provenance-headed TSV table to ``--out`` (stdout
by default). Logs go to stderr.

Exit status: 0 on success, 1 on a usage or settings error, 2 when the
computation failed or the design is infeasible.
"""

import argparse
import asyncio
import logging
import sys
from typing import Any, Dict, List, Optional

from core.command_manager import CommandManager
from core.config import LOG_LEVELS, SettingsValidationError, settings, validate_runtime_settings
from core.tsv import write_tsv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILED = 2


class UsageError(Exception):
    """Raised instead of exiting when argparse rejects the command line."""


class LabArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _global_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="JSON config file")
    parent.add_argument("--out", help="Output TSV path (stdout when omitted)")
    parent.add_argument("--seed", type=int, default=None, help="Master seed (default: config seed or 0)")
    parent.add_argument("--workers", type=int, default=None, help="Worker processes")
    parent.add_argument("--log-level", dest="log_level", choices=LOG_LEVELS, help="Override LOG_LEVEL")
    return parent


def build_parser(manager: CommandManager) -> argparse.ArgumentParser:
    parser = LabArgumentParser(prog="fountain-lab", description="Fountain code analysis and simulation lab")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=LabArgumentParser)
    parent = _global_options()
    for name in sorted(manager.commands):
        command = manager.commands[name]
        sub = subparsers.add_parser(name, help=command.description, parents=[parent])
        command.add_arguments(sub)
    return parser


def configure_logging(level: Optional[str] = None) -> None:
    logging.basicConfig(
        level=getattr(logging, level or settings.LOG_LEVEL),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )


def emit(result: Dict[str, Any], out: Optional[str]) -> None:
    table = result["result"]
    if out:
        with open(out, "w", encoding="utf-8") as handle:
            write_tsv(handle, table["header"], table["columns"], table["rows"])
        logger.info("Wrote %d rows to %s", len(table["rows"]), out)
    else:
        write_tsv(sys.stdout, table["header"], table["columns"], table["rows"])


def dispatch(argv: List[str]) -> int:
    """Parse argv, run one subcommand and return the exit status."""
    try:
        validate_runtime_settings(settings)
    except SettingsValidationError as e:
        print(f"Invalid settings: {e}", file=sys.stderr)
        return EXIT_USAGE

    manager = CommandManager()
    manager.load_commands()
    parser = build_parser(manager)
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"fountain-lab: error: {e}", file=sys.stderr)
        return EXIT_USAGE

    configure_logging(args.log_level)
    if args.workers is not None and args.workers < 1:
        print("fountain-lab: error: --workers must be at least 1", file=sys.stderr)
        return EXIT_USAGE

    parameters = {key: value for key, value in vars(args).items() if key not in ("command", "out", "log_level")}
    result = asyncio.run(manager.execute_command(args.command, parameters))
    if not result.get("success"):
        print(result.get("error", result.get("response", "Command failed")), file=sys.stderr)
        return EXIT_FAILED

    emit(result, args.out)
    logger.info(result.get("response", ""))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(dispatch(sys.argv[1:]))

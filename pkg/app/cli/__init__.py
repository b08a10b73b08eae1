"""
Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numeric failure.
"""
import argparse
import sys
from typing import List, Optional

import structlog

from app.cli.commands import ablate, evaluate, gen_data, gradcheck, infer, train
from app.core.config import settings
from app.core.errors import ConfigurationError, RelGraphError
from app.core.logging import configure_logging

logger = structlog.get_logger(__name__)

COMMANDS = (gen_data, train, evaluate, infer, gradcheck, ablate)


class ArgumentParser(argparse.ArgumentParser):
    """Reports usage errors as ConfigurationError instead of exiting with status 2."""

    def error(self, message: str) -> None:
        raise ConfigurationError(f"{self.prog}: {message}")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="relgraph",
        description=f"{settings.APP_NAME} {settings.APP_VERSION}: AU relation-graph learning at desk scale",
    )
    parser.add_argument("--log-level", default=None, help="Log level (default: settings.LOG_LEVEL)")
    parser.add_argument("--log-json", action="store_true", default=None, help="Render logs as JSON")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=ArgumentParser)
    subparsers.required = True
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    structlog.contextvars.clear_contextvars()
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.log_level, args.log_json)
        return args.handler(args)
    except RelGraphError as e:
        logger.error("command.failed", code=e.code, error=e.message, **e.detail)
        print(f"error [{e.code}]: {e.message}", file=sys.stderr)
        return e.exit_code

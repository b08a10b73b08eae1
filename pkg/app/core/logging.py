"""
Structured logging setup.

Console logging goes through structlog bound to the standard library; the
per-epoch metrics log is a separate line-delimited JSON file whose records
carry no timestamps, so a same-seed rerun writes the identical bytes.
"""
import logging
import sys
from pathlib import Path
from typing import IO, Optional

import structlog

from app.core.config import settings


def configure_logging(level: Optional[str] = None, json: Optional[bool] = None) -> None:
    """
    Configure structlog and the standard library root logger.

    Args:
        level: Log level name (defaults to settings.LOG_LEVEL)
        json: Render console records as JSON instead of key=value text
    """
    level = (level or settings.LOG_LEVEL).upper()
    json = settings.LOG_JSON if json is None else json

    logging.basicConfig(format="%(message)s", stream=sys.stderr, level=level, force=True)

    renderer = (
        structlog.processors.JSONRenderer(sort_keys=True)
        if json
        else structlog.dev.ConsoleRenderer(colors=False)
    )
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.stdlib.add_log_level,
            structlog.stdlib.add_logger_name,
            structlog.processors.TimeStamper(fmt="iso"),
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(logging.getLevelName(level)),
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=False,
    )


class MetricsLog:
    """Append-only line-delimited JSON log of training metrics."""

    def __init__(self, path: Optional[Path] = None, stream: Optional[IO[str]] = None):
        if path is not None:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            self._file: Optional[IO[str]] = open(path, "w", encoding="utf-8")
            stream = self._file
        else:
            self._file = None
        self.records: list = []
        self._logger = (
            structlog.wrap_logger(
                structlog.PrintLogger(file=stream),
                processors=[structlog.processors.JSONRenderer(sort_keys=True)],
            )
            if stream is not None
            else None
        )

    def emit(self, event: str, **fields) -> None:
        self.records.append({"event": event, **fields})
        if self._logger is not None:
            self._logger.info(event, **fields)

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None

    def __enter__(self) -> "MetricsLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

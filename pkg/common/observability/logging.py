"""Structured logging for engine runs."""

import json
import logging
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from contextvars import ContextVar
from datetime import datetime, timezone
from typing import Any, TextIO

# Per-run context: command, seed, model
_run_context: ContextVar[dict[str, str]] = ContextVar("run_context", default={})

# Attributes every LogRecord carries; anything else came in through ``extra=``
_RECORD_FIELDS = frozenset(vars(logging.makeLogRecord({}))) | {"message", "asctime", "extra"}


def get_log_context() -> dict[str, str]:
    """Get current logging context."""
    return _run_context.get()


def set_log_context(**kwargs: Any) -> None:
    """Set logging context values."""
    current = _run_context.get()
    _run_context.set({**current, **{k: str(v) for k, v in kwargs.items()}})


def clear_log_context() -> None:
    """Clear logging context."""
    _run_context.set({})


@contextmanager
def run_context(**kwargs: Any) -> Iterator[None]:
    """Scope logging context to a block, restoring the previous context after."""
    token = _run_context.set({**_run_context.get(), **{k: str(v) for k, v in kwargs.items()}})
    try:
        yield
    finally:
        _run_context.reset(token)


class StructuredFormatter(logging.Formatter):
    """JSON structured log formatter."""

    def __init__(
        self,
        include_timestamp: bool = True,
        extra_fields: dict[str, Any] | None = None,
    ) -> None:
        super().__init__()
        self.include_timestamp = include_timestamp
        self.extra_fields = extra_fields or {}

    def format(self, record: logging.LogRecord) -> str:
        """Format log record as JSON."""
        log_data: dict[str, Any] = {}

        if self.include_timestamp:
            log_data["timestamp"] = datetime.now(timezone.utc).isoformat()

        log_data["level"] = record.levelname.lower()
        log_data["logger"] = record.name
        log_data["message"] = record.getMessage()

        context = get_log_context()
        if context:
            log_data["context"] = context

        extra = dict(getattr(record, "extra", None) or {})
        extra.update({k: v for k, v in vars(record).items() if k not in _RECORD_FIELDS})
        if extra:
            log_data["extra"] = extra

        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)

        if self.extra_fields:
            log_data.update(self.extra_fields)

        return json.dumps(log_data, default=str, sort_keys=True)


class StructuredLogger:
    """
    Logger whose keyword arguments land in the record's ``extra`` field.

    Used for suite progress where residuals and counts are worth keeping
    machine-readable.
    """

    def __init__(self, name: str) -> None:
        self._logger = logging.getLogger(name)

    @property
    def name(self) -> str:
        return self._logger.name

    def _log(self, level: int, message: str, **kwargs: Any) -> None:
        if not self._logger.isEnabledFor(level):
            return
        record = self._logger.makeRecord(
            self._logger.name,
            level,
            "",
            0,
            message,
            (),
            None,
        )
        record.extra = kwargs  # type: ignore[attr-defined]
        self._logger.handle(record)

    def debug(self, message: str, **kwargs: Any) -> None:
        self._log(logging.DEBUG, message, **kwargs)

    def info(self, message: str, **kwargs: Any) -> None:
        self._log(logging.INFO, message, **kwargs)

    def warning(self, message: str, **kwargs: Any) -> None:
        self._log(logging.WARNING, message, **kwargs)

    def error(self, message: str, **kwargs: Any) -> None:
        self._log(logging.ERROR, message, **kwargs)


def setup_logging(
    level: str = "WARNING",
    json_output: bool = True,
    include_timestamp: bool = True,
    extra_fields: dict[str, Any] | None = None,
    stream: TextIO | None = None,
) -> None:
    """
    Set up structured logging on the root logger.

    Args:
        level: Log level name (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        json_output: Whether to output JSON lines
        include_timestamp: Whether to stamp each line
        extra_fields: Static fields added to every line
        stream: Target stream, stderr by default so reports own stdout
    """
    log_level = getattr(logging, level.upper(), logging.WARNING)

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)

    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setLevel(log_level)

    if json_output:
        formatter: logging.Formatter = StructuredFormatter(
            include_timestamp=include_timestamp,
            extra_fields=extra_fields,
        )
    else:
        formatter = logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")

    handler.setFormatter(formatter)
    root_logger.addHandler(handler)


def get_logger(name: str) -> StructuredLogger:
    """Get a structured logger instance."""
    return StructuredLogger(name)

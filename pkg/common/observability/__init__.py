"""Observability module - structured logging."""

from common.observability.logging import (
    StructuredFormatter,
    StructuredLogger,
    clear_log_context,
    get_log_context,
    get_logger,
    run_context,
    set_log_context,
    setup_logging,
)

__all__ = [
    "StructuredFormatter",
    "StructuredLogger",
    "clear_log_context",
    "get_log_context",
    "get_logger",
    "run_context",
    "set_log_context",
    "setup_logging",
]

#!/usr/bin/env python3
"""Structured logging setup; only the command line front-end calls it."""

import sys

import structlog


def configure_logging(level: int, colors: bool = True) -> None:
    """
    Configure structlog for this process.

    Events below the configured level are dropped by the bound logger itself;
    the rest are rendered as key/value lines on stderr so that stdout only
    carries command output.

    Args:
        level: numeric logging level, e.g. ``logging.INFO``
        colors: whether the console renderer may style its output
    """
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso", utc=True),
            structlog.dev.ConsoleRenderer(colors=colors),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(level),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )

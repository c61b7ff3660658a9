#!/usr/bin/env python3

from dataclasses import dataclass
import logging
import os
from typing import Mapping, Optional

from ecostitch.errors import InvalidParams

_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass(frozen=True)
class RuntimeConfig:
    """
    Process-wide settings taken from the environment.

    ``ECOSTITCH_NO_COLOR`` disables styled output when set to anything
    non-empty; ``ECOSTITCH_LOG_LEVEL`` names the default log level.
    """
    colors: bool = True
    log_level: str = "WARNING"

    def __post_init__(self) -> None:
        self._validate_parameters()

    def _validate_parameters(self) -> None:
        """ensures the log level is one logging knows"""
        if self.log_level not in _LEVELS:
            raise InvalidParams(f"{self.log_level} is not a log level, expected one of {', '.join(_LEVELS)}")

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> "RuntimeConfig":
        """Read the settings from ``environ``, the process environment by default."""
        env = os.environ if environ is None else environ
        return cls(colors=not env.get("ECOSTITCH_NO_COLOR"),
                   log_level=env.get("ECOSTITCH_LOG_LEVEL", "WARNING").strip().upper() or "WARNING")

    def with_verbosity(self, verbose: int) -> "RuntimeConfig":
        """``-v`` lowers the level to INFO, ``-vv`` to DEBUG; never raises it."""
        if verbose <= 0:
            return self
        wanted = logging.DEBUG if verbose > 1 else logging.INFO
        level = min(wanted, logging.getLevelName(self.log_level))
        return RuntimeConfig(self.colors, logging.getLevelName(level))

    @property
    def numeric_level(self) -> int:
        return int(logging.getLevelName(self.log_level))

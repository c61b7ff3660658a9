#!/usr/bin/env python3

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

from ecostitch.errors import InvalidParams
from ecostitch.model import Revision


class Strategy(Enum):
    """
    Candidate ordering used by the package manager when a clause can be
    satisfied in several ways.
    """

    NEWEST = "newest"
    OLDEST = "oldest"
    MINIMAL_PRODUCTS = "minimal-products"

    def __str__(self) -> str:
        """Return the name used on the command line."""
        return self.value

    @classmethod
    def names(cls) -> List[str]:
        """Return all command line names."""
        return [s.value for s in cls]

    @classmethod
    def from_text(cls, text: str) -> "Strategy":
        """Look a strategy up by its command line name."""
        for strategy in cls:
            if strategy.value == text:
                return strategy
        raise InvalidParams(f"{text} is not a valid strategy, expected one of {', '.join(cls.names())}")

    @property
    def prefers_newest(self) -> bool:
        """whether versions of one product are tried highest first"""
        return self is not Strategy.OLDEST


@dataclass(frozen=True)
class ResolutionContext:
    """
    Contextual input of a resolution: the strategy and an optional snapshot
    time. Revisions published after the snapshot are invisible; revisions
    without a timestamp are always visible.
    """
    strategy: Strategy = Strategy.NEWEST
    snapshot: Optional[int] = None

    def __post_init__(self) -> None:
        if not isinstance(self.strategy, Strategy):
            raise InvalidParams(f"{self.strategy} is not a Strategy")
        if self.snapshot is not None and self.snapshot < 0:
            raise InvalidParams(f"snapshot must be greater-or-equal 0, got {self.snapshot}")

    def is_visible(self, revision: Revision) -> bool:
        """checks the snapshot against the revision timestamp"""
        if self.snapshot is None or revision.timestamp is None:
            return True
        return revision.timestamp <= self.snapshot

    def __str__(self) -> str:
        snapshot = "" if self.snapshot is None else f"@{self.snapshot}"
        return f"{self.strategy}{snapshot}"

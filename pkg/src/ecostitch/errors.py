#!/usr/bin/env python3
"""
Exception hierarchy of ecostitch.

Every error carries an ``exit_code`` so the command line front-end can map
failures without a lookup table of its own.
"""

from typing import TYPE_CHECKING, Any, Optional, Sequence, Tuple

if TYPE_CHECKING:
    from ecostitch.model import DependencyClause, RevisionId, TargetPattern
else:
    DependencyClause = Any
    RevisionId = Any
    TargetPattern = Any


class EcostitchError(Exception):
    """Base class of all errors raised by this package."""
    exit_code: int = 2


class CorpusError(EcostitchError):
    """Malformed corpus input or a reference to something the corpus lacks."""
    exit_code = 4


class ParseError(CorpusError, ValueError):
    """Text that does not follow a grammar, with the offending position."""

    def __init__(self, message: str, position: int = 0, text: Optional[str] = None) -> None:
        super().__init__(f"{message} (at position {position})")
        self.message: str = message
        self.position: int = position
        self.text: Optional[str] = text


class DuplicateRevision(CorpusError):
    """Two revisions with the same product and version."""


class UnknownArcEndpoint(CorpusError):
    """A call arc names a node its call graph does not declare."""


class EmptyClause(CorpusError):
    """A dependency clause without alternatives (an unsatisfiable disjunction)."""


class UnknownRevision(CorpusError, KeyError):
    """A revision id that is not part of the ecosystem."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown revision"


class UnknownFunction(CorpusError, KeyError):
    """A function id that is not a node of the queried graph."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown function"


class SnapshotExcludesRoot(CorpusError):
    """The resolution root is newer than the context snapshot."""


class Unsatisfiable(EcostitchError):
    """No resolved set exists for the requested root and context."""
    exit_code = 3

    def __init__(self, clause: Optional[DependencyClause], chain: Sequence[RevisionId]) -> None:
        self.clause: Optional[DependencyClause] = clause
        self.chain: Tuple[RevisionId, ...] = tuple(chain)
        path = " -> ".join(str(r) for r in self.chain)
        super().__init__(f"cannot satisfy clause {clause} required by {path}")


class DanglingExternal(EcostitchError):
    """An external call that stitching could not identify with any internal function."""
    exit_code = 5

    def __init__(self, revision: RevisionId, local_id: str, patterns: Sequence[TargetPattern]) -> None:
        self.revision: RevisionId = revision
        self.local_id: str = local_id
        self.patterns: Tuple[TargetPattern, ...] = tuple(patterns)
        targets = ", ".join(str(p) for p in self.patterns)
        super().__init__(f"external {local_id} of {revision} matches nothing in the resolution: {targets}")


class UnknownNode(EcostitchError, KeyError):
    """A graph query on a node that is not in the graph."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown node"


class EmptyGraph(EcostitchError, ValueError):
    """A measure that is undefined on the empty graph."""


class InvalidParams(EcostitchError, ValueError):
    """Generator or configuration parameters outside their allowed range."""

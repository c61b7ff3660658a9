#!/usr/bin/env python3
"""
Domain types shared by every other module: products, versions, version
constraints, CNF dependency specifications and per-revision call graphs.

All values are immutable after construction and validate themselves, so a
value that exists is a valid one.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import total_ordering
import re
from types import MappingProxyType
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple

from ecostitch.errors import (DuplicateRevision, EmptyClause, ParseError,
                              UnknownArcEndpoint, UnknownFunction, UnknownRevision)

UNKNOWN_LICENSE = "UNKNOWN"

_VERSION_RE = re.compile(r"(\d+(?:\.\d+)*)(?:-([0-9A-Za-z][0-9A-Za-z.\-]*))?")
_OPERATORS = (">=", "<=", ">", "<", "=")


class Ordering(Enum):
    """Result of a three-way comparison."""
    LESS = -1
    EQUAL = 0
    GREATER = 1

    def __str__(self) -> str:
        return self.name.lower()


@dataclass(frozen=True, order=True)
class ProductId:
    """The abstract name shared by all revisions of a library."""
    name: str

    def __post_init__(self) -> None:
        if not self.name:
            raise ParseError("product name must not be empty", 0, self.name)
        if ":" in self.name:
            raise ParseError(
                f"product name {self.name!r} must not contain ':'", self.name.index(":"), self.name)

    def __str__(self) -> str:
        return self.name


def _numeric_core(components: Tuple[int, ...]) -> Tuple[int, ...]:
    """drops trailing zero components, keeping at least one"""
    end = len(components)
    while end > 1 and components[end - 1] == 0:
        end -= 1
    return components[:end]


@total_ordering
@dataclass(frozen=True, eq=False)
class Version:
    """
    Dotted non-negative integers with an optional prerelease tag.

    Missing trailing components compare as 0, so ``1.0`` equals ``1.0.0``.
    A prerelease orders below the release with the same numeric core.
    """
    components: Tuple[int, ...]
    prerelease: Optional[str] = None

    def __post_init__(self) -> None:
        if len(self.components) == 0:
            raise ParseError("version needs at least one numeric component")
        if any(c < 0 for c in self.components):
            raise ParseError(f"negative version component in {self.components}")
        if self.prerelease is not None and not self.prerelease:
            raise ParseError("prerelease tag must not be empty")

    @classmethod
    def parse(cls, text: str) -> "Version":
        """Parse ``1.7.25`` or ``2.0.0-alpha1``."""
        match = _VERSION_RE.fullmatch(text.strip())
        if match is None:
            raise ParseError(f"malformed version {text!r}", 0, text)
        components = tuple(int(part) for part in match.group(1).split("."))
        return cls(components, match.group(2))

    @property
    def sort_key(self) -> Tuple[Tuple[int, ...], int, str]:
        return (_numeric_core(self.components),
                0 if self.prerelease is not None else 1,
                self.prerelease or "")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Version):
            return NotImplemented
        return self.sort_key == other.sort_key

    def __lt__(self, other: "Version") -> bool:
        return self.sort_key < other.sort_key

    def __hash__(self) -> int:
        return hash(self.sort_key)

    def __str__(self) -> str:
        core = ".".join(str(c) for c in self.components)
        return f"{core}-{self.prerelease}" if self.prerelease is not None else core


def compare_versions(a: Version, b: Version) -> Ordering:
    """Three-way comparison of two versions under the dotted-integer order."""
    if a.sort_key < b.sort_key:
        return Ordering.LESS
    if a.sort_key > b.sort_key:
        return Ordering.GREATER
    return Ordering.EQUAL


@dataclass(frozen=True)
class Interval:
    """A version interval; a missing bound is unbounded on that side."""
    lower: Optional[Version] = None
    lower_inclusive: bool = True
    upper: Optional[Version] = None
    upper_inclusive: bool = True

    def __post_init__(self) -> None:
        # inclusiveness of a missing bound is meaningless, keep equality exact
        if self.lower is None:
            object.__setattr__(self, "lower_inclusive", True)
        if self.upper is None:
            object.__setattr__(self, "upper_inclusive", True)
        if self.lower is not None and self.upper is not None:
            if self.upper < self.lower or (self.lower == self.upper
                                           and not (self.lower_inclusive and self.upper_inclusive)):
                raise ParseError(f"empty interval {self}")

    @property
    def is_any(self) -> bool:
        return self.lower is None and self.upper is None

    @property
    def is_point(self) -> bool:
        return self.lower is not None and self.lower == self.upper

    def contains(self, version: Version) -> bool:
        if self.lower is not None:
            if version < self.lower or (not self.lower_inclusive and version == self.lower):
                return False
        if self.upper is not None:
            if self.upper < version or (not self.upper_inclusive and version == self.upper):
                return False
        return True

    def __str__(self) -> str:
        if self.is_any:
            return "*"
        if self.is_point:
            return f"={self.lower}"
        bounds: List[str] = []
        if self.lower is not None:
            bounds.append(f"{'>=' if self.lower_inclusive else '>'}{self.lower}")
        if self.upper is not None:
            bounds.append(f"{'<=' if self.upper_inclusive else '<'}{self.upper}")
        return ",".join(bounds)


@dataclass(frozen=True)
class VersionConstraint:
    """A union of intervals; matches a version lying in any of them."""
    intervals: Tuple[Interval, ...]

    def __post_init__(self) -> None:
        if len(self.intervals) == 0:
            raise ParseError("a constraint needs at least one interval")

    def matches(self, version: Version) -> bool:
        return any(interval.contains(version) for interval in self.intervals)

    def __str__(self) -> str:
        return " || ".join(str(interval) for interval in self.intervals)


ANY = VersionConstraint((Interval(),))


def constraint_matches(constraint: VersionConstraint, version: Version) -> bool:
    """True iff ``version`` lies in some interval of ``constraint``."""
    return constraint.matches(version)


class _ConstraintScanner:
    """hand-written scanner for the constraint grammar, keeps positions for errors"""

    def __init__(self, text: str) -> None:
        self.text: str = text
        self.pos: int = 0

    def skip_spaces(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def at_end(self) -> bool:
        self.skip_spaces()
        return self.pos >= len(self.text)

    def accept(self, token: str) -> bool:
        self.skip_spaces()
        if self.text.startswith(token, self.pos):
            self.pos += len(token)
            return True
        return False

    def operator(self) -> str:
        self.skip_spaces()
        for op in _OPERATORS:
            if self.text.startswith(op, self.pos):
                self.pos += len(op)
                return op
        raise ParseError("expected one of =, <, <=, >, >= or *", self.pos, self.text)

    def version(self) -> Version:
        self.skip_spaces()
        match = _VERSION_RE.match(self.text, self.pos)
        if match is None:
            raise ParseError("expected a version", self.pos, self.text)
        self.pos = match.end()
        components = tuple(int(part) for part in match.group(1).split("."))
        return Version(components, match.group(2))

    def disjunct(self) -> Interval:
        if self.accept("*"):
            return Interval()
        start = self.pos
        lower: Optional[Tuple[Version, bool]] = None
        upper: Optional[Tuple[Version, bool]] = None
        while True:
            op = self.operator()
            version = self.version()
            if op == "=":
                if lower is not None or upper is not None:
                    raise ParseError("'=' cannot be combined with other bounds", start, self.text)
                lower = upper = (version, True)
            elif op.startswith(">"):
                if lower is not None:
                    raise ParseError("duplicate lower bound", start, self.text)
                lower = (version, op == ">=")
            else:
                if upper is not None:
                    raise ParseError("duplicate upper bound", start, self.text)
                upper = (version, op == "<=")
            if not self.accept(","):
                break
        try:
            return Interval(lower[0] if lower else None, lower[1] if lower else True,
                            upper[0] if upper else None, upper[1] if upper else True)
        except ParseError as e:
            raise ParseError(e.message, start, self.text) from e


def parse_constraint(text: str) -> VersionConstraint:
    """
    Parse a version constraint.

    Grammar: ``*`` or ``OP VERSION`` disjuncts joined by ``||``, where
    ``OP`` is one of ``=, <, <=, >, >=``; bounds inside one disjunct may be
    joined by ``,`` to form a bounded interval.

    Raises:
        ParseError: on malformed input, with the position of the problem.
    """
    scanner = _ConstraintScanner(text)
    if scanner.at_end():
        raise ParseError("empty constraint", 0, text)
    intervals = [scanner.disjunct()]
    while scanner.accept("||"):
        intervals.append(scanner.disjunct())
    if not scanner.at_end():
        raise ParseError("unexpected trailing input", scanner.pos, text)
    return VersionConstraint(tuple(intervals))


@dataclass(frozen=True)
class Dependency:
    """A product plus the set of its versions that are acceptable."""
    target: ProductId
    constraint: VersionConstraint = ANY

    def __str__(self) -> str:
        return f"{self.target} {self.constraint}"


@dataclass(frozen=True)
class DependencyClause:
    """A disjunction of dependencies."""
    alternatives: Tuple[Dependency, ...]

    def __post_init__(self) -> None:
        if len(self.alternatives) == 0:
            raise EmptyClause("a dependency clause needs at least one alternative")

    def products(self) -> Tuple[ProductId, ...]:
        """distinct target products in alternative order"""
        return tuple(dict.fromkeys(dep.target for dep in self.alternatives))

    def __str__(self) -> str:
        return "{" + " or ".join(str(dep) for dep in self.alternatives) + "}"


@dataclass(frozen=True)
class DependencySpec:
    """A conjunction of clauses; the empty spec is always satisfied."""
    clauses: Tuple[DependencyClause, ...] = ()

    def __str__(self) -> str:
        return " and ".join(str(clause) for clause in self.clauses) or "{}"


@dataclass(frozen=True, order=True)
class RevisionId:
    """A product at one version."""
    product: ProductId
    version: Version

    @classmethod
    def parse(cls, text: str) -> "RevisionId":
        """Parse the ``PRODUCT:VERSION`` command line form."""
        product, sep, version = text.partition(":")
        if not sep:
            raise ParseError(f"expected PRODUCT:VERSION, got {text!r}", 0, text)
        try:
            return cls(ProductId(product), Version.parse(version))
        except ParseError as e:
            raise ParseError(e.message, len(product) + 1, text) from e

    @property
    def label(self) -> str:
        return f"{self.product}:{self.version}"

    def __str__(self) -> str:
        return f"{self.product}-{self.version}"


@dataclass(frozen=True, order=True)
class FunctionId:
    """An internal function of a revision."""
    revision: RevisionId
    function: str

    @classmethod
    def parse(cls, text: str) -> "FunctionId":
        """Parse the ``PRODUCT:VERSION:FUNCTION`` command line form."""
        head, sep, function = text.rpartition(":")
        if not sep or not head or not function:
            raise ParseError(f"expected PRODUCT:VERSION:FUNCTION, got {text!r}", 0, text)
        return cls(RevisionId.parse(head), function)

    def __str__(self) -> str:
        return f"{self.revision}:{self.function}"


@dataclass(frozen=True, order=True)
class ExternalRef:
    """An external node of a revision's call graph, as a graph node."""
    revision: RevisionId
    local_id: str

    def __str__(self) -> str:
        return f"{self.revision}:<{self.local_id}>"


@dataclass(frozen=True)
class TargetPattern:
    """Which internal function an external call may denote."""
    product: ProductId
    constraint: VersionConstraint
    function: str

    def matches(self, revision: RevisionId) -> bool:
        return self.product == revision.product and self.constraint.matches(revision.version)

    def __str__(self) -> str:
        return f"{self.product} {self.constraint} {self.function}"


@dataclass(frozen=True)
class ExternalNode:
    """A call leaving its revision; targets encode the sigma mapping."""
    local_id: str
    targets: Tuple[TargetPattern, ...]

    def __post_init__(self) -> None:
        if not self.local_id:
            raise ParseError("external node id must not be empty")
        if len(self.targets) == 0:
            raise ParseError(f"external node {self.local_id!r} has no targets")


@dataclass(frozen=True)
class RevisionCallGraph:
    """
    Bipartite call graph of one revision.

    Internal names and external ids live in disjoint namespaces and every arc
    starts at an internal node. The node and arc collections are kept sorted.
    """
    internal: Tuple[str, ...] = ()
    external: Tuple[ExternalNode, ...] = ()
    arcs: Tuple[Tuple[str, str], ...] = ()

    _internal_set: frozenset = field(init=False, repr=False, compare=False, hash=False)
    _externals: Dict[str, ExternalNode] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        internal = tuple(sorted(self.internal))
        if len(set(internal)) != len(internal):
            raise ParseError("duplicate internal function name")
        external = tuple(sorted(self.external, key=lambda node: node.local_id))
        externals = {node.local_id: node for node in external}
        if len(externals) != len(external):
            raise ParseError("duplicate external node id")
        internal_set = frozenset(internal)
        clash = internal_set.intersection(externals)
        if clash:
            raise ParseError(f"names used both as internal and external: {sorted(clash)}")
        for origin, target in self.arcs:
            if origin not in internal_set:
                raise UnknownArcEndpoint(f"arc origin {origin!r} is not an internal function")
            if target not in internal_set and target not in externals:
                raise UnknownArcEndpoint(f"arc target {target!r} is not declared")
        object.__setattr__(self, "internal", internal)
        object.__setattr__(self, "external", external)
        object.__setattr__(self, "arcs", tuple(sorted(set(self.arcs))))
        object.__setattr__(self, "_internal_set", internal_set)
        object.__setattr__(self, "_externals", externals)

    def is_internal(self, name: str) -> bool:
        return name in self._internal_set

    def external_node(self, local_id: str) -> ExternalNode:
        try:
            return self._externals[local_id]
        except KeyError:
            raise UnknownArcEndpoint(f"no external node {local_id!r}") from None

    def __len__(self) -> int:
        """number of nodes, internal and external"""
        return len(self.internal) + len(self.external)


@dataclass(frozen=True)
class Revision:
    """A product version with its dependency specification and call graph."""
    id: RevisionId
    depspec: DependencySpec = field(default_factory=DependencySpec)
    callgraph: RevisionCallGraph = field(default_factory=RevisionCallGraph)
    timestamp: Optional[int] = None
    license: Optional[str] = None
    function_licenses: Mapping[str, str] = field(default_factory=dict, hash=False)

    def __post_init__(self) -> None:
        for name in self.function_licenses:
            if not self.callgraph.is_internal(name):
                raise UnknownFunction(f"license given for undeclared function {name!r} of {self.id}")
        object.__setattr__(self, "function_licenses",
                           MappingProxyType(dict(sorted(self.function_licenses.items()))))

    @property
    def product(self) -> ProductId:
        return self.id.product

    @property
    def version(self) -> Version:
        return self.id.version

    def functions(self) -> Tuple[FunctionId, ...]:
        return tuple(FunctionId(self.id, name) for name in self.callgraph.internal)

    def effective_license(self, function: str) -> str:
        """function license, else revision license, else UNKNOWN"""
        return self.function_licenses.get(function) or self.license or UNKNOWN_LICENSE

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Revision):
            return NotImplemented
        return (self.id, self.depspec, self.callgraph, self.timestamp, self.license,
                dict(self.function_licenses)) == (other.id, other.depspec, other.callgraph,
                                                  other.timestamp, other.license,
                                                  dict(other.function_licenses))

    def __hash__(self) -> int:
        return hash(self.id)


class Ecosystem:
    """
    A static snapshot of every known revision.

    Iteration and lookups are ordered by product name, then version ascending.
    """

    def __init__(self, revisions: Iterable[Revision] = (), description: Optional[str] = None) -> None:
        """
        Args:
            revisions: the revisions, in any order
            description: free text kept with the corpus document

        Raises:
            DuplicateRevision: if two revisions share product and version.
        """
        by_id: Dict[RevisionId, Revision] = {}
        for revision in revisions:
            if revision.id in by_id:
                raise DuplicateRevision(f"revision {revision.id} declared twice")
            by_id[revision.id] = revision
        self.description: Optional[str] = description
        self._revisions: Dict[RevisionId, Revision] = dict(sorted(by_id.items()))
        self._by_product: Dict[ProductId, Tuple[Revision, ...]] = {}
        for rid, revision in self._revisions.items():
            self._by_product[rid.product] = self._by_product.get(rid.product, ()) + (revision,)

    @property
    def revisions(self) -> Mapping[RevisionId, Revision]:
        return MappingProxyType(self._revisions)

    def get(self, rid: RevisionId) -> Revision:
        """Return the revision, raising UnknownRevision when absent."""
        try:
            return self._revisions[rid]
        except KeyError:
            raise UnknownRevision(f"revision {rid} is not in the ecosystem") from None

    def require(self, rids: Iterable[RevisionId]) -> None:
        """Raise UnknownRevision for the first id not in the ecosystem."""
        for rid in rids:
            self.get(rid)

    def products(self) -> Tuple[ProductId, ...]:
        return tuple(self._by_product)

    def revisions_of(self, product: ProductId) -> Tuple[Revision, ...]:
        """revisions of a product, oldest first"""
        return self._by_product.get(product, ())

    def ids(self) -> Tuple[RevisionId, ...]:
        return tuple(self._revisions)

    def __contains__(self, rid: object) -> bool:
        return rid in self._revisions

    def __iter__(self) -> Iterator[Revision]:
        return iter(self._revisions.values())

    def __len__(self) -> int:
        return len(self._revisions)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Ecosystem):
            return NotImplemented
        return (self.description == other.description
                and list(self._revisions.values()) == list(other._revisions.values()))

    def __repr__(self) -> str:
        return f"Ecosystem({len(self)} revisions, {len(self._by_product)} products)"

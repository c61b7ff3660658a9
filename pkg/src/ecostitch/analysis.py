#!/usr/bin/env python3
"""
Function-level queries over stitched and universe call graphs: reachability,
vulnerability and change impact, centrality and license consistency.
"""

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
import json
import math
from typing import Any, Dict, FrozenSet, Hashable, Iterable, List, Mapping, Optional, Set, Tuple

import networkx as nx
import numpy as np
import structlog

from ecostitch.errors import EmptyGraph, InvalidParams, UnknownFunction, UnknownNode
from ecostitch.model import UNKNOWN_LICENSE, Ecosystem, ExternalRef, FunctionId, ProductId, RevisionId
from ecostitch.resolver import ResolvedSet
from ecostitch.stitcher import StitchedGraph

logger = structlog.get_logger(__name__)


class Direction(Enum):
    """IN scores a node by what reaches it, OUT by what it reaches"""
    IN = "in"
    OUT = "out"

    def __str__(self) -> str:
        return self.value


class ImpactLevel(Enum):
    FUNCTION = "function"
    REVISION = "revision"

    def __str__(self) -> str:
        return self.value


class UnknownPolicy(Enum):
    """how pairs involving an unlicensed function are treated"""
    FLAG = "flag"
    IGNORE = "ignore"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ImpactReport:
    """Functions, revisions and products that can reach a seed function."""
    seed: FunctionId
    functions: Tuple[FunctionId, ...]
    revisions: Tuple[RevisionId, ...]
    products: Tuple[ProductId, ...]
    level: ImpactLevel = ImpactLevel.FUNCTION

    @classmethod
    def build(cls, seed: FunctionId, functions: Iterable[FunctionId],
              revisions: Iterable[RevisionId] = (), level: ImpactLevel = ImpactLevel.FUNCTION) -> "ImpactReport":
        """sorts everything and rolls functions up to revisions and products"""
        functions = set(functions) | {seed}
        owners = {f.revision for f in functions} | set(revisions)
        return cls(seed, tuple(sorted(functions)), tuple(sorted(owners)),
                   tuple(sorted({rid.product for rid in owners})), level)

    @property
    def counts(self) -> Dict[str, int]:
        return {"functions": len(self.functions), "revisions": len(self.revisions),
                "products": len(self.products)}


@dataclass(frozen=True)
class PageRankResult:
    scores: Dict[Hashable, float]
    iterations: int
    converged: bool
    delta: float


@dataclass(frozen=True, order=True)
class LicenseViolation:
    """A call whose callee license does not permit inclusion by the caller."""
    caller: FunctionId
    callee: FunctionId
    caller_license: str
    callee_license: str


@dataclass(frozen=True)
class LicenseMatrix:
    """Allowed (callee license, caller license) pairs."""
    allowed: FrozenSet[Tuple[str, str]] = field(default_factory=frozenset)
    unknown_policy: UnknownPolicy = UnknownPolicy.FLAG

    @classmethod
    def from_document(cls, document: Mapping[str, Any]) -> "LicenseMatrix":
        """
        Build from ``{"allowed": [[callee, caller], ...], "unknown": "flag"|"ignore"}``.

        Raises:
            InvalidParams: on a malformed document.
        """
        pairs = document.get("allowed", [])
        if not isinstance(pairs, list) or not all(
                isinstance(p, list) and len(p) == 2 and all(isinstance(x, str) for x in p) for p in pairs):
            raise InvalidParams("allowed must be a list of [callee, caller] label pairs")
        try:
            policy = UnknownPolicy(document.get("unknown", "flag"))
        except ValueError as e:
            raise InvalidParams(f"unknown policy must be flag or ignore: {e}") from e
        return cls(frozenset((callee, caller) for callee, caller in pairs), policy)

    @classmethod
    def from_json(cls, text: str) -> "LicenseMatrix":
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise InvalidParams(f"license matrix is not valid JSON: {e}") from e
        if not isinstance(document, dict):
            raise InvalidParams("license matrix must be a JSON object")
        return cls.from_document(document)

    def permits(self, callee_license: str, caller_license: str) -> bool:
        if self.unknown_policy is UnknownPolicy.IGNORE and UNKNOWN_LICENSE in (callee_license, caller_license):
            return True
        return (callee_license, caller_license) in self.allowed


def _require(graph: nx.DiGraph, node: Hashable) -> None:
    if node not in graph:
        raise UnknownNode(f"{node} is not a node of the graph")


def forward_reach(graph: nx.DiGraph, node: Hashable) -> FrozenSet[Hashable]:
    """
    Every node reachable from ``node``, itself included (breadth-first).

    Raises:
        UnknownNode: if ``node`` is not in ``graph``.
    """
    _require(graph, node)
    return frozenset(nx.descendants(graph, node)) | {node}


def impact_set(graph: nx.DiGraph, node: Hashable) -> FrozenSet[Hashable]:
    """
    Every node from which ``node`` is reachable, itself included: the
    co-reachability set, i.e. forward reach on the transposed graph.

    Raises:
        UnknownNode: if ``node`` is not in ``graph``.
    """
    _require(graph, node)
    return frozenset(nx.ancestors(graph, node)) | {node}


def vulnerable_revisions(stitched: StitchedGraph, function: FunctionId) -> FrozenSet[RevisionId]:
    """
    Owners of every internal function in a class that can reach the class
    of ``function``.

    Raises:
        UnknownFunction: if ``function`` is in no class of ``stitched``.
    """
    seed = stitched.class_of(function)
    labels = impact_set(stitched.graph, seed.label)
    return frozenset(f.revision for label in labels for f in stitched.classes[label].functions())


def stitched_impact(stitched: StitchedGraph, function: FunctionId) -> ImpactReport:
    """Function-level impact of a vulnerable ``function`` within one resolution."""
    seed = stitched.class_of(function)
    labels = impact_set(stitched.graph, seed.label)
    functions = [f for label in labels for f in stitched.classes[label].functions()]
    report = ImpactReport.build(function, functions)
    logger.info("impact.stitched", seed=str(function), **report.counts)
    return report


def revision_level_impact(resolved: ResolvedSet, eco: Ecosystem, function: FunctionId) -> ImpactReport:
    """
    Package-level over-approximation: every revision of the resolution from
    which the seed's revision is reachable is at risk, with all its functions.

    Raises:
        UnknownFunction: if the seed is not a function of a resolved revision.
    """
    if function.revision not in resolved or not eco.get(function.revision).callgraph.is_internal(
            function.function):
        raise UnknownFunction(f"{function} is not a function of the resolution of {resolved.root}")
    revisions = impact_set(resolved.to_networkx(), function.revision)
    functions = [f for rid in revisions for f in eco.get(rid).functions()]
    return ImpactReport.build(function, functions, revisions, ImpactLevel.REVISION)


def ecosystem_change_impact(universe: nx.DiGraph, function: FunctionId) -> ImpactReport:
    """
    Resolution-independent impact of changing or removing ``function``:
    co-reachability on the universe graph, external nodes attributed to the
    revision that owns them.

    Raises:
        UnknownFunction: if ``function`` is not in the universe graph.
    """
    if function not in universe:
        raise UnknownFunction(f"{function} is not a function of the ecosystem")
    nodes = impact_set(universe, function)
    functions = [n for n in nodes if isinstance(n, FunctionId)]
    owners = [n.revision for n in nodes if isinstance(n, ExternalRef)]
    report = ImpactReport.build(function, functions, owners)
    logger.info("impact.ecosystem", seed=str(function), **report.counts)
    return report


def pagerank(graph: nx.DiGraph, damping: float = 0.85, tolerance: float = 1e-9,
             max_iterations: int = 200, direction: Direction = Direction.IN) -> PageRankResult:
    """
    PageRank by power iteration.

    With ``Direction.IN`` rank flows along call arcs, so heavily called
    functions score high; ``Direction.OUT`` runs on the transposed graph.
    Dangling nodes spread their mass uniformly, so scores sum to 1.

    Args:
        graph: the graph to rank
        damping: probability of following an arc
        tolerance: stop once the L1 change of an iteration falls below it
        max_iterations: stop after this many iterations regardless
        direction: orientation of the ranking

    Raises:
        EmptyGraph: if ``graph`` has no nodes.
    """
    nodes = list(graph.nodes)
    n = len(nodes)
    if n == 0:
        raise EmptyGraph("pagerank of the empty graph")
    if not 0.0 <= damping <= 1.0 or max_iterations < 1:
        raise InvalidParams(f"damping must lie in [0, 1] and max_iterations be positive, "
                            f"got {damping} and {max_iterations}")
    index = {node: i for i, node in enumerate(nodes)}
    arcs = np.array([(index[u], index[v]) for u, v in graph.edges], dtype=np.int64).reshape(-1, 2)
    src, dst = (arcs[:, 0], arcs[:, 1]) if direction is Direction.IN else (arcs[:, 1], arcs[:, 0])
    out_degree = np.bincount(src, minlength=n).astype(np.float64)
    dangling = out_degree == 0
    share = np.divide(1.0, out_degree, out=np.zeros(n), where=~dangling)

    scores = np.full(n, 1.0 / n)
    delta = float("inf")
    converged = False
    iteration = 0
    for iteration in range(1, max_iterations + 1):
        spread = np.bincount(dst, weights=scores[src] * share[src], minlength=n)
        updated = damping * (spread + scores[dangling].sum() / n) + (1.0 - damping) / n
        delta = float(np.abs(updated - scores).sum())
        scores = updated
        if delta < tolerance:
            converged = True
            break
    if not converged:
        logger.warning("pagerank.not_converged", iterations=iteration, delta=delta)
    return PageRankResult({node: float(scores[i]) for i, node in enumerate(nodes)},
                          iteration, converged, delta)


def harmonic_centrality(graph: nx.DiGraph, direction: Direction = Direction.IN) -> Dict[Hashable, float]:
    """
    Harmonic centrality, exact BFS from every node. For ``Direction.IN``,
    H(x) sums 1/d(y, x) over every y != x with a path to x; ``Direction.OUT``
    uses d(x, y). Unreachable pairs contribute nothing; sums are correctly
    rounded, independent of visiting order.
    """
    search = graph.reverse(copy=False) if direction is Direction.IN else graph
    scores: Dict[Hashable, float] = {}
    for node in graph.nodes:
        distances = nx.single_source_shortest_path_length(search, node)
        scores[node] = math.fsum(1.0 / d for d in distances.values() if d > 0)
    return scores


def license_violations(stitched: StitchedGraph, eco: Ecosystem, matrix: LicenseMatrix) -> List[LicenseViolation]:
    """
    Calls whose callee license does not permit inclusion by the caller.

    The effective license of a function is its own label, else its
    revision's, else UNKNOWN. Every stitched arc is checked for each pair of
    internal caller and callee members of its two classes.
    """
    found: Set[LicenseViolation] = set()
    for origin, target in stitched.graph.edges:
        callers = stitched.classes[origin].functions()
        callees = stitched.classes[target].functions()
        for caller in callers:
            caller_license = eco.get(caller.revision).effective_license(caller.function)
            for callee in callees:
                callee_license = eco.get(callee.revision).effective_license(callee.function)
                if not matrix.permits(callee_license, caller_license):
                    found.add(LicenseViolation(caller, callee, caller_license, callee_license))
    violations = sorted(found)
    logger.info("license.checked", arcs=stitched.graph.number_of_edges(), violations=len(violations))
    return violations


def call_chain_statistics(graph: nx.DiGraph) -> Dict[int, int]:
    """
    Histogram of BFS depths: for each node, the longest shortest path to a
    node it reaches, counted per depth.
    """
    depths: Counter[int] = Counter()
    for node in graph.nodes:
        distances = nx.single_source_shortest_path_length(graph, node)
        depths[max(distances.values())] += 1
    return dict(sorted(depths.items()))


def dead_functions(stitched: StitchedGraph, root: Optional[RevisionId] = None) -> Tuple[FunctionId, ...]:
    """Functions of the stitched graph that no function of the root revision reaches."""
    root = root if root is not None else stitched.root
    reached: Set[Hashable] = set()
    for function in stitched.functions():
        if function.revision == root:
            reached |= forward_reach(stitched.graph, stitched.class_of(function).label)
    return tuple(f for f in stitched.functions() if stitched.class_of(f).label not in reached)

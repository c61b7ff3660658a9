#!/usr/bin/env python3
"""
Global source dependency graph and its per-root subgraphs.

An arc r -> r' exists iff r' satisfies at least one dependency of one of the
clauses of r. The out-neighbours of r are called its (direct) dependants,
the reverse of the colloquial meaning of the word.
"""

from typing import Dict, Iterable, Iterator, List, Optional, Set, Tuple

import networkx as nx
import structlog

from ecostitch.errors import UnknownRevision
from ecostitch.model import (Dependency, DependencyClause, DependencySpec, Ecosystem,
                             ProductId, RevisionId)

logger = structlog.get_logger(__name__)


def deterministic_order(rids: Iterable[RevisionId]) -> List[RevisionId]:
    """product name ascending, then version descending"""
    ordered = sorted(rids, key=lambda rid: rid.version, reverse=True)
    return sorted(ordered, key=lambda rid: rid.product.name)


class GlobalDepGraph:
    """Revision-level dependency graph; immutable once built."""

    def __init__(self, graph: nx.DiGraph) -> None:
        self._graph: nx.DiGraph = graph
        self._nodes: Tuple[RevisionId, ...] = tuple(deterministic_order(graph.nodes))
        self._out: Dict[RevisionId, Tuple[RevisionId, ...]] = {
            rid: tuple(deterministic_order(graph.successors(rid))) for rid in self._nodes}
        self._in: Dict[RevisionId, Tuple[RevisionId, ...]] = {
            rid: tuple(deterministic_order(graph.predecessors(rid))) for rid in self._nodes}

    @property
    def nodes(self) -> Tuple[RevisionId, ...]:
        return self._nodes

    def out_neighbors(self, rid: RevisionId) -> Tuple[RevisionId, ...]:
        """The dependants of ``rid``: revisions satisfying one of its dependencies."""
        try:
            return self._out[rid]
        except KeyError:
            raise UnknownRevision(f"revision {rid} is not in the graph") from None

    def in_neighbors(self, rid: RevisionId) -> Tuple[RevisionId, ...]:
        """Revisions having ``rid`` among their dependants."""
        try:
            return self._in[rid]
        except KeyError:
            raise UnknownRevision(f"revision {rid} is not in the graph") from None

    def arcs(self) -> Iterator[Tuple[RevisionId, RevisionId]]:
        for rid in self._nodes:
            for target in self._out[rid]:
                yield rid, target

    def to_networkx(self) -> nx.DiGraph:
        """a read-only view on the underlying graph"""
        return self._graph.copy(as_view=True)

    def is_acyclic(self) -> bool:
        return bool(nx.is_directed_acyclic_graph(self._graph))

    def __contains__(self, rid: object) -> bool:
        return rid in self._out

    def __len__(self) -> int:
        return len(self._nodes)

    def number_of_arcs(self) -> int:
        return int(self._graph.number_of_edges())


def revision_satisfies_dependency(eco: Ecosystem, rid: RevisionId, dep: Dependency) -> bool:
    """
    Args:
        eco: the ecosystem ``rid`` belongs to
        rid: the candidate revision
        dep: the dependency to satisfy

    Returns:
        True iff the revision is of the dependency's product and its version
        matches the constraint.

    Raises:
        UnknownRevision: if ``rid`` is not part of ``eco``.
    """
    eco.get(rid)
    return dep.target == rid.product and dep.constraint.matches(rid.version)


def _products_index(rids: Iterable[RevisionId]) -> Dict[ProductId, List[RevisionId]]:
    index: Dict[ProductId, List[RevisionId]] = {}
    for rid in rids:
        index.setdefault(rid.product, []).append(rid)
    return index


def _clause_satisfied(index: Dict[ProductId, List[RevisionId]], clause: DependencyClause) -> bool:
    return any(dep.constraint.matches(rid.version)
               for dep in clause.alternatives for rid in index.get(dep.target, ()))


def first_unsatisfied_clause(eco: Ecosystem, members: Iterable[RevisionId],
                             spec: DependencySpec) -> Optional[DependencyClause]:
    """The first clause of ``spec`` that no member satisfies, if any."""
    members = list(members)
    eco.require(members)
    index = _products_index(members)
    for clause in spec.clauses:
        if not _clause_satisfied(index, clause):
            return clause
    return None


def set_satisfies_spec(eco: Ecosystem, members: Iterable[RevisionId], spec: DependencySpec) -> bool:
    """
    True iff every clause of ``spec`` has an alternative satisfied by some
    member. The empty spec is satisfied by every set.

    Raises:
        UnknownRevision: if a member is not part of ``eco``.
    """
    return first_unsatisfied_clause(eco, members, spec) is None


def unsatisfied_clauses(eco: Ecosystem, members: Iterable[RevisionId]
                        ) -> Iterator[Tuple[RevisionId, DependencyClause]]:
    """Yields (member, clause) for every clause of a member left unsatisfied by the set."""
    members = sorted(set(members))
    eco.require(members)
    index = _products_index(members)
    for rid in members:
        for clause in eco.get(rid).depspec.clauses:
            if not _clause_satisfied(index, clause):
                yield rid, clause


def is_dependency_closed(eco: Ecosystem, members: Iterable[RevisionId]) -> bool:
    """
    True iff the set satisfies the dependency specification of each member.

    Raises:
        UnknownRevision: if a member is not part of ``eco``.
    """
    return next(unsatisfied_clauses(eco, members), None) is None


def build_global_graph(eco: Ecosystem) -> GlobalDepGraph:
    """Build the global source dependency graph over every revision of ``eco``."""
    graph = nx.DiGraph()
    graph.add_nodes_from(eco.ids())
    for revision in eco:
        for clause in revision.depspec.clauses:
            for dep in clause.alternatives:
                for candidate in eco.revisions_of(dep.target):
                    if dep.constraint.matches(candidate.version):
                        graph.add_edge(revision.id, candidate.id)
    logger.debug("depgraph.built", revisions=graph.number_of_nodes(), arcs=graph.number_of_edges())
    return GlobalDepGraph(graph)


def source_dep_graph(g: GlobalDepGraph, root: RevisionId) -> GlobalDepGraph:
    """
    The smallest subgraph containing ``root`` and closed under out-arcs:
    everything reachable from the root, with induced arcs. Cycles are allowed.

    Raises:
        UnknownRevision: if ``root`` is not a node of ``g``.
    """
    if root not in g:
        raise UnknownRevision(f"revision {root} is not in the graph")
    graph = g.to_networkx()
    reachable: Set[RevisionId] = nx.descendants(graph, root) | {root}
    return GlobalDepGraph(graph.subgraph(reachable).copy())

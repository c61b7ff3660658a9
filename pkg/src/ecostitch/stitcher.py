#!/usr/bin/env python3
"""
Stitching of per-revision call graphs.

External nodes are identified with the internal functions their target
patterns denote (sigma); the union of the call graphs of a resolved set is
then quotiented by the smallest equivalence containing those pairs.
"""

from dataclasses import dataclass
from enum import Enum
from typing import (Any, Callable, Dict, FrozenSet, Hashable, Iterable, Iterator, List,
                    Optional, Tuple, Union)

import networkx as nx
from networkx.utils import UnionFind
import structlog

from ecostitch.depgraph import GlobalDepGraph
from ecostitch.errors import (DanglingExternal, UnknownFunction, UnknownNode,
                              UnknownRevision)
from ecostitch.model import Ecosystem, ExternalNode, ExternalRef, FunctionId, RevisionId
from ecostitch.resolver import ResolvedSet

logger = structlog.get_logger(__name__)

CallNode = Union[FunctionId, ExternalRef]


class StitchMode(Enum):
    """what to do with external calls that match nothing in the resolution"""
    STRICT = "strict"
    LENIENT = "lenient"

    def __str__(self) -> str:
        return self.value


def node_sort_key(node: CallNode) -> Tuple[int, RevisionId, str]:
    """internal functions before external nodes, then by revision and name"""
    if isinstance(node, FunctionId):
        return (0, node.revision, node.function)
    return (1, node.revision, node.local_id)


@dataclass(frozen=True)
class NodeClass:
    """An equivalence class of the stitched graph."""
    label: CallNode
    members: Tuple[CallNode, ...]

    @property
    def phantom(self) -> bool:
        """true iff no internal function belongs to the class"""
        return not any(isinstance(m, FunctionId) for m in self.members)

    def functions(self) -> Tuple[FunctionId, ...]:
        return tuple(m for m in self.members if isinstance(m, FunctionId))

    def __str__(self) -> str:
        return str(self.label)


def sigma(eco: Ecosystem, g: GlobalDepGraph, rid: RevisionId, node: ExternalNode) -> FrozenSet[FunctionId]:
    """
    Internal functions an external node of ``rid`` may denote.

    Returns:
        every (r', f) with r' a dependant of ``rid`` in ``g``, some target
        pattern of ``node`` naming product and version of r', and ``f``
        declared internal in r'.

    Raises:
        UnknownRevision: if ``rid`` is not part of ``eco`` or ``g``.
    """
    eco.get(rid)
    result = set()
    for dependant in g.out_neighbors(rid):
        callgraph = eco.get(dependant).callgraph
        for pattern in node.targets:
            if pattern.matches(dependant) and callgraph.is_internal(pattern.function):
                result.add(FunctionId(dependant, pattern.function))
    return frozenset(result)


def quotient(graph: nx.DiGraph, pairs: Iterable[Tuple[Hashable, Hashable]],
             key: Optional[Callable[[Any], Any]] = None) -> Tuple[nx.DiGraph, Dict[Hashable, Hashable]]:
    """
    Quotient of a directed graph by the smallest equivalence containing ``pairs``.

    Args:
        graph: the graph to quotient
        pairs: node pairs to identify
        key: orders members of a class; the least member labels the class

    Returns:
        the quotient graph, whose nodes are class labels carrying their sorted
        ``members`` as node attribute, and the node to label mapping. There is
        an arc [x] -> [y] iff some x' ~ x and y' ~ y have an arc; self-loops
        produced by merging are kept.

    Raises:
        UnknownNode: if a pair names a node not in ``graph``.
    """
    classes = UnionFind(graph.nodes)
    for a, b in pairs:
        for node in (a, b):
            if node not in graph:
                raise UnknownNode(f"{node} is not a node of the graph")
        classes.union(a, b)
    order: Callable[[Any], Any] = key if key is not None else (lambda node: node)
    blocks = sorted((sorted(block, key=order) for block in classes.to_sets()), key=lambda b: order(b[0]))
    label_of: Dict[Hashable, Hashable] = {}
    result = nx.DiGraph()
    for block in blocks:
        label = block[0]
        result.add_node(label, members=tuple(block))
        for node in block:
            label_of[node] = label
    result.add_edges_from((label_of[u], label_of[v]) for u, v in graph.edges)
    return result, label_of


class StitchedGraph:
    """
    The stitched call graph of a resolved set: a quotient graph over
    ``NodeClass`` labels. Immutable once built.
    """

    def __init__(self, root: RevisionId, graph: nx.DiGraph, label_of: Dict[CallNode, CallNode]) -> None:
        self.root: RevisionId = root
        self.graph: nx.DiGraph = graph
        self._label_of: Dict[CallNode, CallNode] = label_of
        self.classes: Dict[CallNode, NodeClass] = {
            label: NodeClass(label, data["members"]) for label, data in graph.nodes(data=True)}

    def class_of(self, node: CallNode) -> NodeClass:
        """
        Raises:
            UnknownFunction: if ``node`` belongs to no class.
        """
        try:
            return self.classes[self._label_of[node]]
        except KeyError:
            raise UnknownFunction(f"{node} is not part of the stitched graph") from None

    def sorted_classes(self) -> List[NodeClass]:
        return sorted(self.classes.values(), key=lambda c: node_sort_key(c.label))

    def arcs(self) -> List[Tuple[CallNode, CallNode]]:
        return sorted(self.graph.edges, key=lambda arc: (node_sort_key(arc[0]), node_sort_key(arc[1])))

    def phantom_classes(self) -> List[NodeClass]:
        return [c for c in self.sorted_classes() if c.phantom]

    def functions(self) -> Iterator[FunctionId]:
        for node_class in self.sorted_classes():
            yield from node_class.functions()

    def __len__(self) -> int:
        return len(self.classes)

    def to_dot(self) -> str:
        """edge-list text in dot syntax, in canonical order"""
        lines = ["digraph stitched {"]
        for node_class in self.sorted_classes():
            attrs = ' [style=dashed]' if node_class.phantom else ""
            lines.append(f'  "{node_class.label}"{attrs};')
        for origin, target in self.arcs():
            lines.append(f'  "{origin}" -> "{target}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _union_graph(eco: Ecosystem, members: Iterable[RevisionId]) -> nx.DiGraph:
    """disjoint union of the members' call graphs, internal and external nodes"""
    union = nx.DiGraph()
    for rid in sorted(members):
        callgraph = eco.get(rid).callgraph
        union.add_nodes_from(FunctionId(rid, name) for name in callgraph.internal)
        union.add_nodes_from(ExternalRef(rid, node.local_id) for node in callgraph.external)
        for origin, target in callgraph.arcs:
            head: CallNode = (FunctionId(rid, target) if callgraph.is_internal(target)
                              else ExternalRef(rid, target))
            union.add_edge(FunctionId(rid, origin), head)
    return union


def stitch(eco: Ecosystem, g: GlobalDepGraph, resolved: ResolvedSet,
           mode: StitchMode = StitchMode.STRICT) -> StitchedGraph:
    """
    Stitched call graph of a resolved set.

    Every external node of a member is identified with its sigma targets that
    lie inside the resolution, and the union of the member call graphs is
    quotiented accordingly.

    Raises:
        UnknownRevision: if a member is not part of ``eco``.
        DanglingExternal: in strict mode, for the first class left without
            an internal function.
    """
    eco.require(resolved.sorted_members())
    if resolved.root not in resolved.members:
        raise UnknownRevision(f"root {resolved.root} is not a member of its resolution")
    union = _union_graph(eco, resolved.members)
    pairs: List[Tuple[CallNode, CallNode]] = []
    for rid in resolved.sorted_members():
        for node in eco.get(rid).callgraph.external:
            for target in sorted(sigma(eco, g, rid, node)):
                if target.revision in resolved.members:
                    pairs.append((ExternalRef(rid, node.local_id), target))
    quotient_graph, label_of = quotient(union, pairs, key=node_sort_key)
    stitched = StitchedGraph(resolved.root, quotient_graph, label_of)
    phantoms = stitched.phantom_classes()
    logger.info("stitch.done", root=str(resolved.root), nodes=union.number_of_nodes(),
                pairs=len(pairs), classes=len(stitched), phantoms=len(phantoms), mode=str(mode))
    if mode is StitchMode.STRICT and phantoms:
        ref = phantoms[0].label
        assert isinstance(ref, ExternalRef)
        node = eco.get(ref.revision).callgraph.external_node(ref.local_id)
        raise DanglingExternal(ref.revision, ref.local_id, node.targets)
    return stitched


def build_universe_graph(eco: Ecosystem, g: GlobalDepGraph) -> nx.DiGraph:
    """
    Resolution-independent linked graph of the whole ecosystem: every internal
    function and external node, intra-revision calls, and an arc from each
    external node to each function of its sigma set. No quotienting.
    """
    universe = _union_graph(eco, eco.ids())
    for revision in eco:
        for node in revision.callgraph.external:
            ref = ExternalRef(revision.id, node.local_id)
            universe.add_edges_from((ref, target) for target in sorted(sigma(eco, g, revision.id, node)))
    logger.info("universe.built", nodes=universe.number_of_nodes(), arcs=universe.number_of_edges())
    return universe


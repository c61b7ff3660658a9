#!/usr/bin/env python3
"""
Shared fixtures and brute-force oracles for the unit-tests.

The oracles work by subset enumeration, repeated relabelling, boolean closure
and dense matrices.
"""

from collections import deque
import itertools
import math
import random
from typing import Dict, FrozenSet, Hashable, Iterable, Iterator, List, Optional, Set, Tuple

import networkx as nx
import numpy as np
import pytest

from ecostitch.corpus import fixture_fig1
from ecostitch.depgraph import build_global_graph, is_dependency_closed
from ecostitch.generatorconfig import GeneratorParams
from ecostitch.model import Ecosystem, FunctionId, RevisionId
from ecostitch.resolutioncontext import ResolutionContext, Strategy
from ecostitch.resolver import ResolvedSet, resolve
from ecostitch.stitcher import StitchedGraph, stitch


def rid(text: str) -> RevisionId:
    """``rid("B:1.3")`` is revision B-1.3"""
    return RevisionId.parse(text)


def fid(text: str) -> FunctionId:
    """``fid("B:1.3:f2")`` is function f2 of B-1.3"""
    return FunctionId.parse(text)


@pytest.fixture(scope="session")
def fig1() -> Ecosystem:
    return fixture_fig1()


@pytest.fixture(scope="session")
def fig1_newest(fig1: Ecosystem) -> ResolvedSet:
    return resolve(fig1, rid("D:1.0"), ResolutionContext(Strategy.NEWEST))


@pytest.fixture(scope="session")
def fig1_minimal(fig1: Ecosystem) -> ResolvedSet:
    return resolve(fig1, rid("D:1.0"), ResolutionContext(Strategy.MINIMAL_PRODUCTS))


@pytest.fixture(scope="session")
def fig1_stitched(fig1: Ecosystem, fig1_newest: ResolvedSet) -> StitchedGraph:
    return stitch(fig1, build_global_graph(fig1), fig1_newest)


def small_params(seed: int, product_dag: bool = True) -> GeneratorParams:
    """ecosystems of at most 12 revisions, small enough for subset enumeration"""
    return GeneratorParams(products=4, revisions_per_product=3, functions_per_revision=3,
                           clauses_per_revision=1.5, disjunction_probability=0.4,
                           call_arcs_per_function=1.5, external_ratio=0.5,
                           product_dag=product_dag, seed=seed)


def is_valid_resolution(eco: Ecosystem, root: RevisionId, members: FrozenSet[RevisionId]) -> bool:
    """contains the root, closed, one revision per product"""
    products = [m.product for m in members]
    return (root in members and len(products) == len(set(products))
            and is_dependency_closed(eco, members))


def candidate_sets(eco: Ecosystem, root: RevisionId) -> Iterator[FrozenSet[RevisionId]]:
    """every set holding the root and at most one revision of each other product"""
    choices: List[List[Optional[RevisionId]]] = []
    for product in eco.products():
        if product == root.product:
            continue
        choices.append([None] + [r.id for r in eco.revisions_of(product)])
    for picked in itertools.product(*choices):
        yield frozenset([root] + [r for r in picked if r is not None])


def valid_resolutions(eco: Ecosystem, root: RevisionId) -> List[FrozenSet[RevisionId]]:
    return [s for s in candidate_sets(eco, root) if is_valid_resolution(eco, root, s)]


def is_inclusion_minimal(eco: Ecosystem, root: RevisionId, members: FrozenSet[RevisionId]) -> bool:
    """no proper subset holding the root is closed"""
    others = sorted(members - {root})
    for size in range(len(others)):
        for subset in itertools.combinations(others, size):
            if is_valid_resolution(eco, root, frozenset(subset) | {root}):
                return False
    return True


def quotient_oracle(nodes: Iterable[Hashable], arcs: Iterable[Tuple[Hashable, Hashable]],
                    pairs: Iterable[Tuple[Hashable, Hashable]]
                    ) -> Tuple[Dict[Hashable, FrozenSet[Hashable]], Set[Tuple[Hashable, Hashable]]]:
    """classes by their least member, and projected arcs, by repeated relabelling"""
    label = {n: n for n in nodes}
    for a, b in pairs:
        old, new = max(label[a], label[b]), min(label[a], label[b])
        for n in label:
            if label[n] == old:
                label[n] = new
    classes: Dict[Hashable, Set[Hashable]] = {}
    for n, lab in label.items():
        classes.setdefault(lab, set()).add(n)
    arc_set = set(arcs)
    projected = set()
    for a, members_a in classes.items():
        for b, members_b in classes.items():
            if any((x, y) in arc_set for x in members_a for y in members_b):
                projected.add((a, b))
    return {lab: frozenset(members) for lab, members in classes.items()}, projected


def closure_oracle(graph: nx.DiGraph) -> Dict[Hashable, Set[Hashable]]:
    """reflexive transitive closure by boolean Warshall"""
    nodes = list(graph.nodes)
    index = {n: i for i, n in enumerate(nodes)}
    reach = np.eye(len(nodes), dtype=bool)
    for u, v in graph.edges:
        reach[index[u], index[v]] = True
    for k in range(len(nodes)):
        reach |= np.outer(reach[:, k], reach[k, :])
    return {n: {nodes[j] for j in np.flatnonzero(reach[index[n]])} for n in nodes}


def bfs_distances(graph: nx.DiGraph, source: Hashable) -> Dict[Hashable, int]:
    distances = {source: 0}
    queue = deque([source])
    while queue:
        node = queue.popleft()
        for succ in graph.successors(node):
            if succ not in distances:
                distances[succ] = distances[node] + 1
                queue.append(succ)
    return distances


def harmonic_in_oracle(graph: nx.DiGraph) -> Dict[Hashable, float]:
    """H(x) = sum of 1/d(y, x), all-pairs BFS"""
    terms: Dict[Hashable, List[float]] = {n: [] for n in graph.nodes}
    for y in graph.nodes:
        for x, d in bfs_distances(graph, y).items():
            if d > 0:
                terms[x].append(1.0 / d)
    return {n: math.fsum(ts) for n, ts in terms.items()}


def pagerank_oracle(graph: nx.DiGraph, damping: float = 0.85, iterations: int = 3000) -> Dict[Hashable, float]:
    """dense transition matrix, rank flowing along arcs, dangling mass spread uniformly"""
    nodes = list(graph.nodes)
    n = len(nodes)
    index = {node: i for i, node in enumerate(nodes)}
    transition = np.zeros((n, n))
    for u in nodes:
        succ = list(graph.successors(u))
        if succ:
            for v in succ:
                transition[index[v], index[u]] = 1.0 / len(succ)
        else:
            transition[:, index[u]] = 1.0 / n
    x = np.full(n, 1.0 / n)
    for _ in range(iterations):
        x = damping * transition @ x + (1.0 - damping) / n
    return {node: float(x[index[node]]) for node in nodes}


def random_digraph(seed: int, max_nodes: int, p: Optional[float] = None) -> nx.DiGraph:
    rand = random.Random(seed)
    n = rand.randint(1, max_nodes)
    probability = p if p is not None else rand.uniform(0.0, 4.0 / max(n, 1))
    return nx.gnp_random_graph(n, min(probability, 1.0), seed=seed, directed=True)

#!/usr/bin/env python3
"""
The package manager: picks, for a root revision and a context, a set of
revisions that contains the root, is dependency-closed, holds one revision
per product and is inclusion-minimal.
"""

from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

import networkx as nx
import structlog

from ecostitch.depgraph import unsatisfied_clauses
from ecostitch.errors import SnapshotExcludesRoot, Unsatisfiable
from ecostitch.model import Dependency, DependencyClause, Ecosystem, ProductId, RevisionId
from ecostitch.resolutioncontext import ResolutionContext, Strategy

logger = structlog.get_logger(__name__)

# subsets of larger sets are not enumerated
EXACT_MINIMALITY_LIMIT = 17


class Minimality(Enum):
    """verdict on the fourth condition"""
    MINIMAL = "minimal"
    HEURISTIC_MINIMAL = "heuristic-minimal"
    NOT_MINIMAL = "not-minimal"
    NOT_APPLICABLE = "not-applicable"  # the root is missing

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ResolvedSet:
    """The resolved dependency graph of a root revision."""
    root: RevisionId
    members: FrozenSet[RevisionId]
    arcs: Tuple[Tuple[RevisionId, RevisionId], ...]

    def sorted_members(self) -> Tuple[RevisionId, ...]:
        return tuple(sorted(self.members))

    def products(self) -> Tuple[ProductId, ...]:
        return tuple(sorted({rid.product for rid in self.members}))

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(self.sorted_members())
        graph.add_edges_from(self.arcs)
        return graph

    def __contains__(self, rid: object) -> bool:
        return rid in self.members

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class ConditionReport:
    """One verdict per resolution condition, with witnesses for failures."""
    root: RevisionId
    contains_root: bool
    closed: bool
    unsatisfied: Optional[Tuple[RevisionId, DependencyClause]]
    unique: bool
    collision: Optional[Tuple[RevisionId, RevisionId]]
    minimality: Minimality
    smaller: Optional[FrozenSet[RevisionId]]

    @property
    def minimal(self) -> bool:
        return self.minimality in (Minimality.MINIMAL, Minimality.HEURISTIC_MINIMAL)

    @property
    def holds(self) -> bool:
        return self.contains_root and self.closed and self.unique and self.minimal

    def verdicts(self) -> List[Tuple[str, bool, str]]:
        """(condition, verdict, witness) rows in condition order"""
        unsatisfied = "" if self.unsatisfied is None else f"{self.unsatisfied[0]} needs {self.unsatisfied[1]}"
        collision = "" if self.collision is None else f"{self.collision[0]} and {self.collision[1]}"
        smaller = "" if self.smaller is None else ", ".join(str(r) for r in sorted(self.smaller))
        return [
            ("root", self.contains_root, "" if self.contains_root else f"{self.root} missing"),
            ("closed", self.closed, unsatisfied),
            ("one-revision-per-product", self.unique, collision),
            (str(self.minimality), self.minimal, smaller),
        ]


class _WitnessTable:
    """
    Bitmask view of a fixed candidate set: per member, one mask of satisfying
    members per clause, and a mask of same-product members.
    """

    def __init__(self, eco: Ecosystem, members: Sequence[RevisionId]) -> None:
        self.members: List[RevisionId] = list(members)
        self.index: Dict[RevisionId, int] = {rid: i for i, rid in enumerate(self.members)}
        self.clauses: List[List[int]] = []
        self.conflicts: List[int] = []
        for rid in self.members:
            masks: List[int] = []
            for clause in eco.get(rid).depspec.clauses:
                mask = 0
                for i, other in enumerate(self.members):
                    if any(dep.target == other.product and dep.constraint.matches(other.version)
                           for dep in clause.alternatives):
                        mask |= 1 << i
                masks.append(mask)
            self.clauses.append(masks)
            conflict = 0
            for i, other in enumerate(self.members):
                if other.product == rid.product and other != rid:
                    conflict |= 1 << i
            self.conflicts.append(conflict)

    @property
    def full(self) -> int:
        return (1 << len(self.members)) - 1

    def bits(self, mask: int) -> Iterator[int]:
        for i in range(len(self.members)):
            if mask >> i & 1:
                yield i

    def to_set(self, mask: int) -> FrozenSet[RevisionId]:
        return frozenset(self.members[i] for i in self.bits(mask))

    def broken(self, mask: int) -> List[int]:
        """members of the mask with a clause the mask leaves unsatisfied"""
        return [i for i in self.bits(mask) if any(c & mask == 0 for c in self.clauses[i])]

    def valid(self, mask: int, root: int) -> bool:
        """conditions one to three for the subset"""
        if not mask >> root & 1:
            return False
        for i in self.bits(mask):
            if self.conflicts[i] & mask:
                return False
        return not self.broken(mask)

    def cascade(self, mask: int, victim: int, root: int) -> Optional[int]:
        """
        Removes the victim, then every member left with a broken clause, until
        nothing breaks. None when the cascade reaches the root.
        """
        if victim == root:
            return None
        mask &= ~(1 << victim)
        while True:
            broken = self.broken(mask)
            if not broken:
                return mask if self.valid(mask, root) else None
            if root in broken:
                return None
            for i in broken:
                mask &= ~(1 << i)

    def smallest_valid_proper_subset(self, mask: int, root: int) -> Optional[int]:
        """Enumerates proper subsets containing the root by increasing size."""
        others = [i for i in self.bits(mask) if i != root]
        for size in range(len(others)):
            for combo in combinations(others, size):
                candidate = 1 << root
                for i in combo:
                    candidate |= 1 << i
                if self.valid(candidate, root):
                    return candidate
        return None


@dataclass
class _Frame:
    """one choice point: the owner of the clause it branches on, its candidates and the conflict so far"""
    owner: RevisionId
    candidates: List[RevisionId]
    conflict: Set[RevisionId]
    tried: int = 0


Pending = List[Tuple[RevisionId, DependencyClause]]


class _Search:
    """
    Depth-first search over the first unsatisfied clause of the chosen
    revisions. Candidates of a clause are tried in strategy order; a candidate
    of an already chosen product is a collision and is skipped.

    Every choice is forward checked: a clause left without candidates fails
    the choice at once. A failure carries the members that caused it; the
    search jumps back to the latest choice among them and remembers the set
    as a nogood. Only subtrees without a valid set are pruned, so the first
    set found is the one plain backtracking would find.
    """

    def __init__(self, eco: Ecosystem, root: RevisionId, ctx: ResolutionContext) -> None:
        self.eco: Ecosystem = eco
        self.root: RevisionId = root
        self.ctx: ResolutionContext = ctx
        self.members: List[RevisionId] = [root]
        self.chosen: Set[RevisionId] = {root}
        self.assigned: Dict[ProductId, RevisionId] = {root.product: root}
        self.required_by: Dict[RevisionId, RevisionId] = {}
        self.pending: List[Pending] = []
        self.nogoods: Dict[RevisionId, List[FrozenSet[RevisionId]]] = {}
        self.failure: Optional[Tuple[DependencyClause, Tuple[RevisionId, ...]]] = None
        self.steps: int = 0
        self.backjumps: int = 0
        self._matching: Dict[Dependency, Tuple[RevisionId, ...]] = {}
        self._clause_products: Dict[DependencyClause, FrozenSet[ProductId]] = {}

    def _matches(self, dep: Dependency) -> Tuple[RevisionId, ...]:
        """visible revisions matching the dependency, oldest first"""
        found = self._matching.get(dep)
        if found is None:
            found = tuple(revision.id for revision in self.eco.revisions_of(dep.target)
                          if dep.constraint.matches(revision.version) and self.ctx.is_visible(revision))
            self._matching[dep] = found
        return found

    def _products_of(self, clause: DependencyClause) -> FrozenSet[ProductId]:
        found = self._clause_products.get(clause)
        if found is None:
            found = self._clause_products[clause] = frozenset(clause.products())
        return found

    def _satisfied(self, clause: DependencyClause) -> bool:
        for dep in clause.alternatives:
            chosen = self.assigned.get(dep.target)
            if chosen is not None and chosen in self._matches(dep):
                return True
        return False

    def _chain(self, rid: RevisionId) -> Tuple[RevisionId, ...]:
        chain = [rid]
        while chain[-1] in self.required_by:
            chain.append(self.required_by[chain[-1]])
        return tuple(reversed(chain))

    @staticmethod
    def _forced(clauses: Iterable[DependencyClause]) -> Set[ProductId]:
        """products named by clauses that have no alternative product"""
        forced: Set[ProductId] = set()
        for clause in clauses:
            products = clause.products()
            if len(products) == 1:
                forced.add(products[0])
        return forced

    def _blockers(self, clause: DependencyClause) -> Set[RevisionId]:
        """chosen revisions whose products shut out matching revisions of the clause"""
        return {self.assigned[rid.product] for dep in clause.alternatives
                for rid in self._matches(dep) if rid.product in self.assigned}

    def _has_candidate(self, clause: DependencyClause) -> bool:
        return any(rid.product not in self.assigned for dep in clause.alternatives for rid in self._matches(dep))

    def _candidates(self, clause: DependencyClause, pending: Pending) -> List[RevisionId]:
        newest_first = self.ctx.strategy.prefers_newest
        seen: Set[RevisionId] = set()
        candidates: List[RevisionId] = []
        for dep in clause.alternatives:
            matching = self._matches(dep)
            for rid in (reversed(matching) if newest_first else matching):
                if rid in seen or rid.product in self.assigned:
                    continue
                seen.add(rid)
                candidates.append(rid)
        if self.ctx.strategy is Strategy.MINIMAL_PRODUCTS:
            committed = set(self.assigned) | self._forced(c for _, c in pending)

            def introduced(rid: RevisionId) -> Tuple[bool, int]:
                needs = {rid.product} | self._forced(self.eco.get(rid).depspec.clauses)
                return rid.product not in committed, len(needs - committed)
            candidates.sort(key=introduced)
        return candidates

    def _dead(self, owner: RevisionId, clause: DependencyClause) -> FrozenSet[RevisionId]:
        if self.failure is None:
            self.failure = (clause, self._chain(owner))
        return frozenset({owner} | self._blockers(clause))

    def _open(self) -> Optional[FrozenSet[RevisionId]]:
        """pending clauses of the root; a conflict when one of them is dead already"""
        pending: Pending = []
        for clause in self.eco.get(self.root).depspec.clauses:
            if not self._satisfied(clause):
                pending.append((self.root, clause))
        self.pending.append(pending)
        for owner, clause in pending:
            if not self._has_candidate(clause):
                return self._dead(owner, clause)
        return None

    def _add(self, rid: RevisionId, owner: RevisionId) -> Optional[FrozenSet[RevisionId]]:
        """
        Choose ``rid`` and update the pending clauses. Returns the members of a
        conflict when a learned nogood or a clause without candidates rules
        the choice out.
        """
        self.steps += 1
        self.members.append(rid)
        self.chosen.add(rid)
        self.assigned[rid.product] = rid
        self.required_by[rid] = owner
        previous = self.pending[-1]
        pending: Pending = []
        touched: Pending = []
        for entry in previous:
            clause = entry[1]
            if rid.product not in self._products_of(clause):
                pending.append(entry)
            elif not any(rid in self._matches(dep) for dep in clause.alternatives):
                pending.append(entry)
                touched.append(entry)
        for clause in self.eco.get(rid).depspec.clauses:
            if not self._satisfied(clause):
                pending.append((rid, clause))
                touched.append((rid, clause))
        self.pending.append(pending)

        for nogood in self.nogoods.get(rid, ()):
            if nogood <= self.chosen:
                return nogood
        for owner_, clause in touched:
            if not self._has_candidate(clause):
                return self._dead(owner_, clause)
        return None

    def _undo(self) -> RevisionId:
        rid = self.members.pop()
        self.chosen.discard(rid)
        del self.assigned[rid.product]
        del self.required_by[rid]
        self.pending.pop()
        return rid

    def _learn(self, nogood: FrozenSet[RevisionId]) -> None:
        for rid in nogood:
            self.nogoods.setdefault(rid, []).append(nogood)

    def _unsatisfiable(self) -> Unsatisfiable:
        if self.failure is not None:
            return Unsatisfiable(self.failure[0], self.failure[1])
        clauses = self.eco.get(self.root).depspec.clauses
        return Unsatisfiable(clauses[0] if clauses else None, (self.root,))

    def _backjump(self, frames: List[_Frame], conflict: FrozenSet[RevisionId]) -> None:
        """
        Undo choices until one of them is part of the conflict and hand the
        rest of the conflict to that choice's frame. Frames whose choice
        played no part are dropped with their untried candidates.
        """
        while frames:
            choice = self._undo()
            if choice in conflict:
                frames[-1].conflict |= conflict - {choice}
                return
            frames.pop()
            self.backjumps += 1
            logger.debug("resolve.backjump", skipped=str(choice), depth=len(frames))
        raise self._unsatisfiable()

    def _advance(self, frames: List[_Frame]) -> Optional[FrozenSet[RevisionId]]:
        """Try the next candidate of the top frame; an exhausted frame fails its parent's choice."""
        frame = frames[-1]
        if frame.tried < len(frame.candidates):
            choice = frame.candidates[frame.tried]
            frame.tried += 1
            return self._add(choice, frame.owner)
        exhausted = frozenset(frame.conflict)
        self._learn(exhausted)
        frames.pop()
        return exhausted

    def run(self) -> List[RevisionId]:
        frames: List[_Frame] = []
        conflict = self._open()
        while True:
            if conflict is None:
                pending = self.pending[-1]
                if not pending:
                    return list(self.members)
                owner, clause = pending[0]
                frames.append(_Frame(owner, self._candidates(clause, pending), {owner} | self._blockers(clause)))
            else:
                self._backjump(frames, conflict)
            conflict = self._advance(frames)


def _induced_arcs(eco: Ecosystem, members: Iterable[RevisionId]) -> Tuple[Tuple[RevisionId, RevisionId], ...]:
    members = sorted(members)
    by_product: Dict[ProductId, List[RevisionId]] = {}
    for rid in members:
        by_product.setdefault(rid.product, []).append(rid)
    arcs: Set[Tuple[RevisionId, RevisionId]] = set()
    for rid in members:
        for clause in eco.get(rid).depspec.clauses:
            for dep in clause.alternatives:
                for other in by_product.get(dep.target, ()):
                    if dep.constraint.matches(other.version):
                        arcs.add((rid, other))
    return tuple(sorted(arcs))


def _minimize(eco: Ecosystem, root: RevisionId, found: List[RevisionId]) -> FrozenSet[RevisionId]:
    """
    Cascade sweep in reverse order of choice until a fixpoint, then, for small
    sets, exact enumeration for a smaller valid subset.
    """
    table = _WitnessTable(eco, found)
    root_index = table.index[root]
    mask = table.full
    changed = True
    while changed:
        changed = False
        for victim in reversed(range(len(found))):
            if victim == root_index or not mask >> victim & 1:
                continue
            reduced = table.cascade(mask, victim, root_index)
            if reduced is not None:
                logger.debug("resolve.removed", revision=str(found[victim]),
                             dropped=bin(mask & ~reduced).count("1"))
                mask = reduced
                changed = True
    if bin(mask).count("1") <= EXACT_MINIMALITY_LIMIT:
        smaller = table.smallest_valid_proper_subset(mask, root_index)
        if smaller is not None:
            mask = smaller
    return table.to_set(mask)


def resolve(eco: Ecosystem, root: RevisionId, ctx: Optional[ResolutionContext] = None) -> ResolvedSet:
    """
    Compute the resolved dependency graph of ``root``.

    Args:
        eco: the ecosystem
        root: the revision to resolve
        ctx: strategy and snapshot, newest without snapshot by default

    Returns:
        ResolvedSet: contains the root, dependency-closed, one revision per
        product and inclusion-minimal. Deterministic for fixed inputs.

    Raises:
        UnknownRevision: if ``root`` is not in ``eco``.
        SnapshotExcludesRoot: if the snapshot hides ``root``.
        Unsatisfiable: if no such set exists.
    """
    ctx = ctx if ctx is not None else ResolutionContext()
    revision = eco.get(root)
    if not ctx.is_visible(revision):
        raise SnapshotExcludesRoot(f"{root} was published after snapshot {ctx.snapshot}")
    search = _Search(eco, root, ctx)
    found = search.run()
    members = _minimize(eco, root, found)
    logger.info("resolve.done", root=str(root), context=str(ctx), found=len(found),
                members=len(members), steps=search.steps, backjumps=search.backjumps)
    return ResolvedSet(root, members, _induced_arcs(eco, members))


def verify_resolution(eco: Ecosystem, root: RevisionId, members: Iterable[RevisionId]) -> ConditionReport:
    """
    Check a candidate set against the four conditions of a resolution.

    Minimality is exact (all proper subsets containing the root) up to
    ``EXACT_MINIMALITY_LIMIT`` members; beyond that single removals, their
    cascades and the removal of every member no other member relies on are
    tried, and success is reported as heuristic-minimal.

    Raises:
        UnknownRevision: if the root or a member is not part of ``eco``.
    """
    member_set = frozenset(members)
    eco.get(root)
    eco.require(sorted(member_set))
    ordered = sorted(member_set)

    contains_root = root in member_set
    unsatisfied = next(unsatisfied_clauses(eco, ordered), None)
    collision: Optional[Tuple[RevisionId, RevisionId]] = None
    seen: Dict[ProductId, RevisionId] = {}
    for rid in ordered:
        if rid.product in seen:
            collision = (seen[rid.product], rid)
            break
        seen[rid.product] = rid

    minimality = Minimality.MINIMAL if contains_root else Minimality.NOT_APPLICABLE
    smaller: Optional[FrozenSet[RevisionId]] = None
    if contains_root:
        table = _WitnessTable(eco, ordered)
        root_index = table.index[root]
        if len(ordered) <= EXACT_MINIMALITY_LIMIT:
            found = table.smallest_valid_proper_subset(table.full, root_index)
            if found is not None:
                minimality, smaller = Minimality.NOT_MINIMAL, table.to_set(found)
        else:
            minimality = Minimality.HEURISTIC_MINIMAL
            attempts: List[Optional[int]] = [table.cascade(table.full, i, root_index)
                                             for i in range(len(ordered)) if i != root_index]
            relied_on = 0
            for i in range(len(ordered)):
                for clause_mask in table.clauses[i]:
                    relied_on |= clause_mask & ~(1 << i)
            unreferenced = table.full & ~relied_on & ~(1 << root_index)
            if unreferenced:
                attempts.append(table.full & ~unreferenced)
            for attempt in attempts:
                if attempt is not None and table.valid(attempt, root_index):
                    minimality, smaller = Minimality.NOT_MINIMAL, table.to_set(attempt)
                    break

    return ConditionReport(root=root, contains_root=contains_root, closed=unsatisfied is None,
                           unsatisfied=unsatisfied, unique=collision is None, collision=collision,
                           minimality=minimality, smaller=smaller)

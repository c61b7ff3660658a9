#!/usr/bin/env python3
"""
Corpus documents: loading and canonical saving, the shipped example
ecosystem, and a seeded generator of synthetic ecosystems.

A corpus is a single UTF-8 JSON document::

    {"description": text?,
     "revisions": [{"product", "version", "timestamp"?, "license"?,
                    "depspec": [[{"product", "constraint"}, ...], ...],
                    "callgraph": {"internal": [{"name", "license"?}, ...],
                                  "external": [{"id", "targets": [...]}, ...],
                                  "arcs": [{"from", "to"}, ...]}}, ...]}
"""

from importlib import resources
import json
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import structlog

from ecostitch.errors import ParseError
from ecostitch.generatorconfig import GeneratorParams
from ecostitch.model import (ANY, Dependency, DependencyClause, DependencySpec, Ecosystem,
                             ExternalNode, ProductId, Revision, RevisionCallGraph, RevisionId,
                             TargetPattern, Version, VersionConstraint, parse_constraint)

logger = structlog.get_logger(__name__)

FIXTURE_NAME = "fig1"
_LICENSES = ("MIT", "Apache-2.0", "BSD-3-Clause", "GPL-3.0", "LGPL-2.1")


def _expect(value: Any, kind: Union[type, Tuple[type, ...]], where: str) -> Any:
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        expected = kind.__name__ if isinstance(kind, type) else " or ".join(k.__name__ for k in kind)
        raise ParseError(f"{where}: expected {expected}, got {type(value).__name__}")
    return value


def _field(doc: Mapping[str, Any], key: str, kind: Union[type, Tuple[type, ...]], where: str,
           required: bool = True) -> Any:
    if key not in doc:
        if required:
            raise ParseError(f"{where}: missing key {key!r}")
        return None
    return _expect(doc[key], kind, f"{where}.{key}")


def _constraint(text: str, where: str) -> VersionConstraint:
    try:
        return parse_constraint(text)
    except ParseError as e:
        raise ParseError(f"{where}: {e.message}", e.position, text) from e


def _load_depspec(doc: List[Any], where: str) -> DependencySpec:
    clauses = []
    for i, clause_doc in enumerate(doc):
        clause_where = f"{where}[{i}]"
        alternatives = []
        for j, dep_doc in enumerate(_expect(clause_doc, list, clause_where)):
            dep_where = f"{clause_where}[{j}]"
            _expect(dep_doc, dict, dep_where)
            product = ProductId(_field(dep_doc, "product", str, dep_where))
            constraint = _constraint(_field(dep_doc, "constraint", str, dep_where), dep_where)
            alternatives.append(Dependency(product, constraint))
        clauses.append(DependencyClause(tuple(alternatives)))
    return DependencySpec(tuple(clauses))


def _name_equality_default(local_id: str, where: str) -> Tuple[TargetPattern, ...]:
    """an external without targets named ``PRODUCT/FUNCTION`` calls FUNCTION of any PRODUCT version"""
    product, sep, function = local_id.partition("/")
    if not sep or not product or not function:
        raise ParseError(f"{where}: external {local_id!r} has no targets and is not named PRODUCT/FUNCTION")
    return (TargetPattern(ProductId(product), ANY, function),)


def _load_external(doc: Mapping[str, Any], where: str) -> ExternalNode:
    local_id = _field(doc, "id", str, where)
    targets_doc = _field(doc, "targets", list, where, required=False) or []
    targets = []
    for k, target_doc in enumerate(targets_doc):
        target_where = f"{where}.targets[{k}]"
        _expect(target_doc, dict, target_where)
        targets.append(TargetPattern(
            ProductId(_field(target_doc, "product", str, target_where)),
            _constraint(_field(target_doc, "constraint", str, target_where), target_where),
            _field(target_doc, "function", str, target_where)))
    if not targets:
        return ExternalNode(local_id, _name_equality_default(local_id, where))
    return ExternalNode(local_id, tuple(targets))


def _load_revision(doc: Mapping[str, Any], where: str) -> Revision:
    _expect(doc, dict, where)
    rid = RevisionId(ProductId(_field(doc, "product", str, where)),
                     Version.parse(_field(doc, "version", str, where)))
    timestamp = _field(doc, "timestamp", int, where, required=False)
    license_ = _field(doc, "license", str, where, required=False)
    depspec = _load_depspec(_field(doc, "depspec", list, where), f"{where}.depspec")

    cg_where = f"{where}.callgraph"
    cg_doc = _field(doc, "callgraph", dict, where)
    internal: List[str] = []
    function_licenses: Dict[str, str] = {}
    for i, fn_doc in enumerate(_field(cg_doc, "internal", list, cg_where)):
        fn_where = f"{cg_where}.internal[{i}]"
        _expect(fn_doc, dict, fn_where)
        name = _field(fn_doc, "name", str, fn_where)
        internal.append(name)
        fn_license = _field(fn_doc, "license", str, fn_where, required=False)
        if fn_license is not None:
            function_licenses[name] = fn_license
    external = [_load_external(_expect(node_doc, dict, f"{cg_where}.external[{i}]"),
                               f"{cg_where}.external[{i}]")
                for i, node_doc in enumerate(_field(cg_doc, "external", list, cg_where))]
    arcs = []
    for i, arc_doc in enumerate(_field(cg_doc, "arcs", list, cg_where)):
        arc_where = f"{cg_where}.arcs[{i}]"
        _expect(arc_doc, dict, arc_where)
        arcs.append((_field(arc_doc, "from", str, arc_where), _field(arc_doc, "to", str, arc_where)))
    callgraph = RevisionCallGraph(tuple(internal), tuple(external), tuple(arcs))
    return Revision(rid, depspec, callgraph, timestamp, license_, function_licenses)


def load_ecosystem(data: Union[bytes, str]) -> Ecosystem:
    """
    Parse and validate a corpus document.

    Args:
        data: the document, UTF-8 bytes or text

    Returns:
        Ecosystem: the fully validated ecosystem.

    Raises:
        ParseError: on malformed JSON or a document not following the schema.
        DuplicateRevision: if a product version appears twice.
        UnknownArcEndpoint: if an arc names an undeclared node.
        EmptyClause: if a dependency clause has no alternatives.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"corpus is not UTF-8: {e.reason}", e.start) from e
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.pos, data) from e
    _expect(doc, dict, "document")
    description = _field(doc, "description", str, "document", required=False)
    revisions = [_load_revision(revision_doc, f"revisions[{i}]")
                 for i, revision_doc in enumerate(_field(doc, "revisions", list, "document"))]
    eco = Ecosystem(revisions, description)
    logger.debug("corpus.loaded", revisions=len(eco), products=len(eco.products()))
    return eco


def _dump_revision(revision: Revision) -> Dict[str, Any]:
    doc: Dict[str, Any] = {"product": revision.product.name, "version": str(revision.version)}
    if revision.timestamp is not None:
        doc["timestamp"] = revision.timestamp
    if revision.license is not None:
        doc["license"] = revision.license
    doc["depspec"] = [[{"product": dep.target.name, "constraint": str(dep.constraint)}
                       for dep in clause.alternatives]
                      for clause in revision.depspec.clauses]
    internal = []
    for name in revision.callgraph.internal:
        fn_doc = {"name": name}
        if name in revision.function_licenses:
            fn_doc["license"] = revision.function_licenses[name]
        internal.append(fn_doc)
    doc["callgraph"] = {
        "internal": internal,
        "external": [{"id": node.local_id,
                      "targets": [{"product": t.product.name, "constraint": str(t.constraint),
                                   "function": t.function} for t in node.targets]}
                     for node in revision.callgraph.external],
        "arcs": [{"from": origin, "to": target} for origin, target in revision.callgraph.arcs],
    }
    return doc


def save_ecosystem(eco: Ecosystem) -> bytes:
    """
    Canonical serialisation: two-space indentation, keys in schema order,
    revisions sorted by product then version. ``load_ecosystem`` inverts it.
    """
    doc: Dict[str, Any] = {}
    if eco.description is not None:
        doc["description"] = eco.description
    doc["revisions"] = [_dump_revision(revision) for revision in eco]
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def fixture_fig1() -> Ecosystem:
    """The eight-revision example ecosystem shipped as package data."""
    data = resources.files("ecostitch").joinpath("data").joinpath(f"{FIXTURE_NAME}.json").read_bytes()
    return load_ecosystem(data)


class _SyntheticBuilder:
    """Draws one synthetic ecosystem; dependency and call-graph draws use separate streams."""

    def __init__(self, params: GeneratorParams) -> None:
        self.params: GeneratorParams = params
        self._dep_rand: np.random.Generator = np.random.default_rng(params.dependency_seed)
        self._cg_rand: np.random.Generator = np.random.default_rng(params.callgraph_seed)
        self.products: List[ProductId] = [ProductId(f"P{i}") for i in range(params.products)]
        self._rank: Dict[ProductId, int] = {}
        self._depspecs: Dict[RevisionId, DependencySpec] = {}
        self._meta: Dict[RevisionId, Tuple[int, Optional[str]]] = {}

    def _versions(self) -> List[Version]:
        return [Version((1, k)) for k in range(self.params.revisions_per_product)]

    def _random_constraint(self) -> VersionConstraint:
        j = int(self._dep_rand.integers(0, self.params.revisions_per_product))
        kind = int(self._dep_rand.integers(0, 4))
        if kind == 0:
            return ANY
        return parse_constraint(f"{('>=', '=', '<=')[kind - 1]}1.{j}")

    def _dependency_targets(self, product: ProductId) -> List[ProductId]:
        """products ``product`` may depend on; later in the topological order when a DAG is asked for"""
        if self.params.product_dag:
            return [p for p in self.products if self._rank[p] > self._rank[product]]
        return [p for p in self.products if p != product]

    def _create_depspecs(self) -> None:
        order = self._dep_rand.permutation(len(self.products))
        self._rank = {self.products[int(index)]: position for position, index in enumerate(order)}
        for product in self.products:
            targets = self._dependency_targets(product)
            for k, version in enumerate(self._versions()):
                rid = RevisionId(product, version)
                clauses = []
                for _ in range(int(self._dep_rand.poisson(self.params.clauses_per_revision))):
                    if not targets:
                        break
                    alternatives = []
                    while True:
                        target = targets[int(self._dep_rand.integers(0, len(targets)))]
                        alternatives.append(Dependency(target, self._random_constraint()))
                        if len(alternatives) >= 3 or self._dep_rand.random() >= self.params.disjunction_probability:
                            break
                    clauses.append(DependencyClause(tuple(alternatives)))
                self._depspecs[rid] = DependencySpec(tuple(clauses))
                timestamp = 1000 * (k + 1) + int(self._dep_rand.integers(0, 1000))
                license_ = _LICENSES[int(self._dep_rand.integers(0, len(_LICENSES)))]
                self._meta[rid] = (timestamp, license_)

    def _create_callgraph(self, rid: RevisionId) -> RevisionCallGraph:
        functions = [f"f{i}" for i in range(self.params.functions_per_revision)]
        dependencies: Sequence[Dependency] = [dep for clause in self._depspecs[rid].clauses
                                              for dep in clause.alternatives]
        external: List[ExternalNode] = []
        arcs: List[Tuple[str, str]] = []
        for origin in functions:
            for _ in range(int(self._cg_rand.poisson(self.params.call_arcs_per_function))):
                if dependencies and self._cg_rand.random() < self.params.external_ratio:
                    dep = dependencies[int(self._cg_rand.integers(0, len(dependencies)))]
                    if self._cg_rand.random() < self.params.dangling_probability:
                        function = f"missing{len(external)}"
                    else:
                        function = functions[int(self._cg_rand.integers(0, len(functions)))]
                    local_id = f"x{len(external)}"
                    external.append(ExternalNode(local_id, (TargetPattern(dep.target, dep.constraint, function),)))
                    arcs.append((origin, local_id))
                else:
                    arcs.append((origin, functions[int(self._cg_rand.integers(0, len(functions)))]))
        return RevisionCallGraph(tuple(functions), tuple(external), tuple(arcs))

    def build(self) -> Ecosystem:
        self._create_depspecs()
        revisions = []
        for rid, depspec in self._depspecs.items():
            timestamp, license_ = self._meta[rid]
            revisions.append(Revision(rid, depspec, self._create_callgraph(rid), timestamp, license_))
        return Ecosystem(revisions, f"synthetic ecosystem, seed {self.params.seed}")


def generate_synthetic(params: GeneratorParams) -> Ecosystem:
    """
    Draw a synthetic ecosystem.

    Products are named ``P0, P1, ...`` with versions ``1.0, 1.1, ...`` and
    functions ``f0, f1, ...``. Dependencies only target existing products;
    with ``product_dag`` they follow a random topological order of the
    products, so the revision-level graph is acyclic. An external call names
    a product the revision depends on and, with ``dangling_probability``, a
    function no revision declares.

    Args:
        params: the validated generator parameters

    Returns:
        Ecosystem: the same ecosystem for the same parameters.
    """
    eco = _SyntheticBuilder(params).build()
    logger.info("corpus.generated", seed=params.seed, revisions=len(eco), products=len(eco.products()))
    return eco

#!/usr/bin/env python3
"""
Unit-tests for model.py: versions, constraints and the validated value types.
"""
import itertools
import random

import pytest

from ecostitch.errors import (DuplicateRevision, EmptyClause, ParseError, UnknownArcEndpoint,
                              UnknownFunction, UnknownRevision)
from ecostitch.model import (ANY, Dependency, DependencyClause, Ecosystem, ExternalNode,
                             FunctionId, Interval, Ordering, ProductId, Revision,
                             RevisionCallGraph, RevisionId, TargetPattern, Version,
                             compare_versions, constraint_matches, parse_constraint)


def v(text: str) -> Version:
    return Version.parse(text)


def test_compare_versions() -> None:
    """positional integers, trailing zeros and prerelease tags"""
    assert compare_versions(v("1.0"), v("1.1")) is Ordering.LESS
    assert compare_versions(v("1.0"), v("1.0.0")) is Ordering.EQUAL
    assert compare_versions(v("2.0.0-alpha1"), v("2.0.0")) is Ordering.LESS
    assert compare_versions(v("1.10"), v("1.9")) is Ordering.GREATER
    assert compare_versions(v("34"), v("1.7")) is Ordering.GREATER


def test_version_equality_and_text() -> None:
    """equal versions hash alike but keep their spelling"""
    assert v("1.0") == v("1.0.0")
    assert hash(v("1.0")) == hash(v("1.0.0"))
    assert str(v("1.0.0")) == "1.0.0"
    assert str(v("2.0.0-alpha1")) == "2.0.0-alpha1"


@pytest.mark.parametrize("text", ["", "a", "1.", ".1", "1..2", "1.0-", "-1"])
def test_version_parse_rejects(text: str) -> None:
    with pytest.raises(ParseError):
        Version.parse(text)


def test_compare_versions_is_a_total_order() -> None:
    """antisymmetric, transitive and total on random versions"""
    rand = random.Random(7)
    versions = []
    for _ in range(40):
        components = tuple(rand.randint(0, 3) for _ in range(rand.randint(1, 4)))
        tag = rand.choice([None, None, "alpha1", "beta", "rc2"])
        versions.append(Version(components, tag))
    for a, b in itertools.product(versions, repeat=2):
        ab, ba = compare_versions(a, b), compare_versions(b, a)
        assert ab.value == -ba.value
        assert (ab is Ordering.EQUAL) == (a == b)
    for a, b, c in itertools.product(versions[:15], repeat=3):
        if compare_versions(a, b) is not Ordering.GREATER and compare_versions(b, c) is not Ordering.GREATER:
            assert compare_versions(a, c) is not Ordering.GREATER


def test_constraint_matches() -> None:
    assert constraint_matches(parse_constraint(">=1.7"), v("1.7.25"))
    assert not constraint_matches(parse_constraint("<=1.0 || >=1.3"), v("1.2"))
    assert constraint_matches(parse_constraint("<=1.0 || >=1.3"), v("1.3"))
    assert constraint_matches(parse_constraint("*"), v("0"))
    assert not constraint_matches(parse_constraint(">1.0,<2.0"), v("2.0"))
    assert constraint_matches(parse_constraint(">1.0,<2.0"), v("1.0.1"))
    assert not constraint_matches(parse_constraint("<2.0"), v("2.0.0"))


def test_parse_constraint_intervals() -> None:
    assert parse_constraint("=1.1").intervals == (Interval(v("1.1"), True, v("1.1"), True),)
    assert parse_constraint(">=1.1").intervals == (Interval(lower=v("1.1")),)
    assert parse_constraint("*") == ANY
    assert parse_constraint(" <= 1.0 ||>=1.3 ").intervals == (Interval(upper=v("1.0")),
                                                               Interval(lower=v("1.3")))


@pytest.mark.parametrize("text,position", [("<=>", 2), ("", 0), (">=1.0 ||", 8), ("=1.0,>=0.5", 0),
                                           (">=2.0,<1.0", 0), ("1.0", 0), (">=1.0 x", 6)])
def test_parse_constraint_errors(text: str, position: int) -> None:
    """malformed text reports where the problem is"""
    with pytest.raises(ParseError) as info:
        parse_constraint(text)
    assert info.value.position == position


def test_parse_constraint_round_trip() -> None:
    """parse after serialisation gives the same value"""
    for text in ["*", "=1.1", ">=1.1", "<=1.0 || >=1.3", ">1.0,<=2.0-rc1", "<0.9 || =1.0 || >2"]:
        constraint = parse_constraint(text)
        assert parse_constraint(str(constraint)) == constraint


def test_point_constraint_matches_only_equal_versions() -> None:
    x = v("1.1")
    for other in ["1.0", "1.1", "1.1.0", "1.1.1", "1.1-rc1"]:
        assert constraint_matches(parse_constraint("=1.1"), v(other)) == (
            compare_versions(x, v(other)) is Ordering.EQUAL)


def test_ids_parse_and_print() -> None:
    b13 = RevisionId.parse("B:1.3")
    assert b13 == RevisionId(ProductId("B"), v("1.3"))
    assert str(b13) == "B-1.3"
    assert b13.label == "B:1.3"
    f = FunctionId.parse("B:1.3:f2")
    assert f == FunctionId(b13, "f2")
    assert str(f) == "B-1.3:f2"
    with pytest.raises(ParseError):
        RevisionId.parse("B-1.3")
    with pytest.raises(ParseError):
        FunctionId.parse("B:1.3")


def test_product_names() -> None:
    with pytest.raises(ParseError):
        ProductId("")
    with pytest.raises(ParseError):
        ProductId("a:b")


def test_empty_clause_rejected() -> None:
    with pytest.raises(EmptyClause):
        DependencyClause(())
    clause = DependencyClause((Dependency(ProductId("A")), Dependency(ProductId("B")),
                               Dependency(ProductId("A"), parse_constraint("=1.0"))))
    assert clause.products() == (ProductId("A"), ProductId("B"))


def test_callgraph_validation() -> None:
    pattern = TargetPattern(ProductId("B"), ANY, "f1")
    graph = RevisionCallGraph(("f2", "f1"), (ExternalNode("x1", (pattern,)),), (("f1", "x1"), ("f1", "f2")))
    assert graph.internal == ("f1", "f2")
    assert len(graph) == 3
    assert graph.is_internal("f1") and not graph.is_internal("x1")
    with pytest.raises(UnknownArcEndpoint):
        RevisionCallGraph(("f1",), (), (("f1", "f9"),))
    with pytest.raises(UnknownArcEndpoint):
        RevisionCallGraph(("f1",), (ExternalNode("x1", (pattern,)),), (("x1", "f1"),))
    with pytest.raises(ParseError):
        RevisionCallGraph(("f1",), (ExternalNode("f1", (pattern,)),), ())
    with pytest.raises(ParseError):
        ExternalNode("x1", ())


def test_effective_license() -> None:
    revision = Revision(RevisionId.parse("A:1.0"), callgraph=RevisionCallGraph(("f1", "f2")),
                        license="MIT", function_licenses={"f2": "GPL-3.0-only"})
    assert revision.effective_license("f1") == "MIT"
    assert revision.effective_license("f2") == "GPL-3.0-only"
    unlicensed = Revision(RevisionId.parse("A:1.1"), callgraph=RevisionCallGraph(("f1",)))
    assert unlicensed.effective_license("f1") == "UNKNOWN"
    with pytest.raises(UnknownFunction):
        Revision(RevisionId.parse("A:1.2"), function_licenses={"f9": "MIT"})


def test_ecosystem_lookup() -> None:
    revisions = [Revision(RevisionId.parse(text)) for text in ["B:1.0", "A:1.1", "A:1.0"]]
    eco = Ecosystem(revisions)
    assert eco.ids() == tuple(RevisionId.parse(t) for t in ["A:1.0", "A:1.1", "B:1.0"])
    assert [r.id.label for r in eco.revisions_of(ProductId("A"))] == ["A:1.0", "A:1.1"]
    assert eco.revisions_of(ProductId("Z")) == ()
    with pytest.raises(UnknownRevision):
        eco.get(RevisionId.parse("C:1.0"))
    with pytest.raises(DuplicateRevision):
        Ecosystem(revisions + [Revision(RevisionId.parse("B:1.0.0"))])

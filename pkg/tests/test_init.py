#!/usr/bin/env python3
"""
Unit-tests for __init__.py: the package exposes a working end-to-end API.
"""
import ecostitch
from ecostitch import (build_global_graph, fixture_fig1, impact_set, resolve, stitch,
                       vulnerable_revisions, RevisionId, FunctionId)


def test_public_names_exist() -> None:
    """every name listed in __all__ is importable from the package"""
    for name in ecostitch.__all__:
        assert hasattr(ecostitch, name), name
    assert ecostitch.__version__ == "0.1.0"


def test_end_to_end() -> None:
    """
    Test for the whole pipeline on the shipped example: resolve, stitch,
    then ask who can reach a vulnerable function.
    """
    eco = fixture_fig1()
    resolved = resolve(eco, RevisionId.parse("D:1.0"))
    stitched = stitch(eco, build_global_graph(eco), resolved)
    seed = FunctionId.parse("B:1.3:f2")
    assert len(impact_set(stitched.graph, stitched.class_of(seed).label)) == 2
    assert {str(r) for r in vulnerable_revisions(stitched, seed)} == {"B-1.3", "C-1.4"}

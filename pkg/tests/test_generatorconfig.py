#!/usr/bin/env python3
"""
Unit-tests for generatorconfig.py.
"""
import pytest

from ecostitch.errors import InvalidParams
from ecostitch.generatorconfig import GeneratorParams


def test_seeds_are_derived_per_stream() -> None:
    params = GeneratorParams(seed=7)
    assert params.dependency_seed != params.callgraph_seed
    assert params.dependency_seed == GeneratorParams(seed=7, products=2).dependency_seed
    assert params.dependency_seed != GeneratorParams(seed=8).dependency_seed
    assert 0 <= params.callgraph_seed < 2**64


@pytest.mark.parametrize("overrides", [{"products": -1}, {"revisions_per_product": 1.5},
                                       {"clauses_per_revision": -0.1}, {"disjunction_probability": 1.1},
                                       {"external_ratio": -0.5}, {"dangling_probability": 0.2},
                                       {"seed": 2**64}])
def test_invalid_parameters(overrides: dict) -> None:
    with pytest.raises(InvalidParams):
        GeneratorParams(**overrides)


def test_edge_values_are_accepted() -> None:
    params = GeneratorParams(products=0, revisions_per_product=0, functions_per_revision=0,
                             clauses_per_revision=0.0, disjunction_probability=1.0,
                             external_ratio=0.0, dangling_probability=0.1, seed=-1)
    assert params.products == 0

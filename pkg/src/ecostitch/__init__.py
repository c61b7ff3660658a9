#!/usr/bin/env python3
"""
ecostitch: dependency resolution and call-graph stitching for software
ecosystems.

A corpus of revisions, each with a CNF dependency specification and a call
graph, is resolved per root revision; the call graphs of the resolved set
are stitched into one function-level graph on which vulnerability impact,
centrality and license queries run.
"""

from ecostitch.analysis import (Direction, ImpactReport, LicenseMatrix, ecosystem_change_impact,
                                forward_reach, harmonic_centrality, impact_set, license_violations,
                                pagerank, revision_level_impact, stitched_impact,
                                vulnerable_revisions)
from ecostitch.corpus import fixture_fig1, generate_synthetic, load_ecosystem, save_ecosystem
from ecostitch.depgraph import build_global_graph, source_dep_graph
from ecostitch.errors import EcostitchError
from ecostitch.generatorconfig import GeneratorParams
from ecostitch.model import (Ecosystem, FunctionId, ProductId, Revision, RevisionId, Version,
                             compare_versions, constraint_matches, parse_constraint)
from ecostitch.resolutioncontext import ResolutionContext, Strategy
from ecostitch.resolver import ResolvedSet, resolve, verify_resolution
from ecostitch.stitcher import StitchedGraph, StitchMode, build_universe_graph, quotient, sigma, stitch

__version__ = "0.1.0"

__all__ = [
    "Direction", "Ecosystem", "EcostitchError", "FunctionId", "GeneratorParams", "ImpactReport",
    "LicenseMatrix", "ProductId", "ResolutionContext", "ResolvedSet", "Revision", "RevisionId",
    "StitchMode", "StitchedGraph", "Strategy", "Version", "build_global_graph",
    "build_universe_graph", "compare_versions", "constraint_matches", "ecosystem_change_impact",
    "fixture_fig1", "forward_reach", "generate_synthetic", "harmonic_centrality", "impact_set",
    "license_violations", "load_ecosystem", "pagerank", "parse_constraint", "quotient", "resolve",
    "revision_level_impact", "save_ecosystem", "sigma", "source_dep_graph", "stitch",
    "stitched_impact", "verify_resolution", "vulnerable_revisions",
]

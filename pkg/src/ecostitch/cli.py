#!/usr/bin/env python3
"""
Command line front-end.

Every subcommand loads a corpus (a file, or ``fig1`` for the shipped
example), delegates to one library operation and prints either plain text or
JSON lines. Exit codes: 0 success, 1 findings with ``--fail-on-findings``,
2 usage, 3 unsatisfiable, 4 corpus or reference errors, 5 dangling externals
in strict stitching.
"""

import argparse
import json
from pathlib import Path
import sys
from typing import Any, Callable, Dict, Hashable, List, Optional, Sequence

import networkx as nx
import structlog
from termcolor import colored

from ecostitch.analysis import (Direction, ImpactLevel, ImpactReport, LicenseMatrix,
                                call_chain_statistics, dead_functions, ecosystem_change_impact,
                                harmonic_centrality, license_violations, pagerank,
                                revision_level_impact, stitched_impact)
from ecostitch.config import RuntimeConfig
from ecostitch.corpus import FIXTURE_NAME, fixture_fig1, generate_synthetic, load_ecosystem, save_ecosystem
from ecostitch.depgraph import build_global_graph
from ecostitch.errors import CorpusError, EcostitchError, InvalidParams, ParseError
from ecostitch.generatorconfig import GeneratorParams
from ecostitch.logconfig import configure_logging
from ecostitch.model import Ecosystem, FunctionId, RevisionId
from ecostitch.resolutioncontext import ResolutionContext, Strategy
from ecostitch.resolver import ResolvedSet, resolve, verify_resolution
from ecostitch.stitcher import (StitchedGraph, StitchMode, build_universe_graph, node_sort_key,
                                stitch)

logger = structlog.get_logger(__name__)

TEXT = "text"
JSON = "json"


class Output:
    """Collects the lines of one command and writes them at the end."""

    def __init__(self, fmt: str, path: Optional[Path], colors: bool) -> None:
        self.format: str = fmt
        self.path: Optional[Path] = path
        self.colors: bool = colors and path is None and sys.stdout.isatty()
        self.lines: List[str] = []

    @property
    def structured(self) -> bool:
        return self.format == JSON

    def style(self, text: str, color: Optional[str] = None, bold: bool = False) -> str:
        if not self.colors:
            return text
        return colored(text, color, attrs=["bold"] if bold else None)

    def text(self, line: str = "") -> None:
        """a human-readable line; dropped in structured mode"""
        if not self.structured:
            self.lines.append(line)

    def record(self, kind: str, **fields: Any) -> None:
        """a JSON-lines record; dropped in text mode"""
        if self.structured:
            self.lines.append(json.dumps({"kind": kind, **fields}, ensure_ascii=False))

    def write(self) -> None:
        content = "".join(line + "\n" for line in self.lines)
        if self.path is None:
            sys.stdout.write(content)
            sys.stdout.flush()
        else:
            self.path.write_text(content, encoding="utf-8")


def _revision_arg(text: str) -> RevisionId:
    try:
        return RevisionId.parse(text)
    except ParseError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _function_arg(text: str) -> FunctionId:
    try:
        return FunctionId.parse(text)
    except ParseError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _members_arg(text: str) -> List[RevisionId]:
    return [_revision_arg(part.strip()) for part in text.split(",") if part.strip()]


def load_corpus(name: str) -> Ecosystem:
    """
    Load ``name`` as a corpus file; the name of the shipped example selects it
    unless a file of that name exists.

    Raises:
        CorpusError: if the file cannot be read or does not hold a valid corpus.
    """
    path = Path(name)
    if name == FIXTURE_NAME and not path.exists():
        return fixture_fig1()
    try:
        data = path.read_bytes()
    except OSError as e:
        raise CorpusError(f"cannot read corpus {name}: {e.strerror}") from e
    return load_ecosystem(data)


def _context(args: argparse.Namespace) -> ResolutionContext:
    return ResolutionContext(Strategy.from_text(args.strategy), args.snapshot)


def _resolved(eco: Ecosystem, args: argparse.Namespace) -> ResolvedSet:
    return resolve(eco, args.root, _context(args))


def _stitched(eco: Ecosystem, resolved: ResolvedSet, mode: str) -> StitchedGraph:
    return stitch(eco, build_global_graph(eco), resolved, StitchMode(mode))


def _finding_code(args: argparse.Namespace, found: bool) -> int:
    return 1 if found and getattr(args, "fail_on_findings", False) else 0


def cmd_resolve(args: argparse.Namespace, out: Output) -> int:
    """Print the resolved dependency graph of the root."""
    eco = load_corpus(args.corpus)
    resolved = _resolved(eco, args)
    out.text(out.style(f"resolved {resolved.root} ({_context(args)}): {len(resolved)} revisions", bold=True))
    for rid in resolved.sorted_members():
        out.text(f"  {rid}")
        out.record("member", revision=str(rid), product=str(rid.product), version=str(rid.version))
    for origin, target in resolved.arcs:
        out.text(f"  {origin} -> {target}")
        out.record("arc", **{"from": str(origin), "to": str(target)})
    return 0


def cmd_verify(args: argparse.Namespace, out: Output) -> int:
    """Check a candidate member set against the resolution conditions."""
    eco = load_corpus(args.corpus)
    report = verify_resolution(eco, args.root, args.members)
    out.text(out.style(f"verification of {len(set(args.members))} revisions for root {args.root}", bold=True))
    for condition, verdict, witness in report.verdicts():
        mark = out.style("ok", "green") if verdict else out.style("FAILED", "red")
        out.text(f"  {condition:<26} {mark}" + (f"  {witness}" if witness else ""))
        out.record("condition", condition=condition, holds=verdict, witness=witness)
    out.record("summary", holds=report.holds)
    return _finding_code(args, not report.holds)


def cmd_stitch(args: argparse.Namespace, out: Output) -> int:
    """Print the stitched call graph as a class listing or dot edge list."""
    eco = load_corpus(args.corpus)
    stitched = _stitched(eco, _resolved(eco, args), args.mode)
    if args.dot and not out.structured:
        out.lines.extend(stitched.to_dot().splitlines())
        return 0
    out.text(out.style(f"stitched call graph of {stitched.root}: {len(stitched)} classes, "
                       f"{len(stitched.arcs())} arcs", bold=True))
    for node_class in stitched.sorted_classes():
        members = ", ".join(str(m) for m in node_class.members)
        suffix = out.style(" (phantom)", "yellow") if node_class.phantom else ""
        out.text(f"  [{node_class.label}] {members}{suffix}")
        out.record("class", label=str(node_class.label), members=[str(m) for m in node_class.members],
                   phantom=node_class.phantom)
    for origin, target in stitched.arcs():
        out.text(f"  [{origin}] -> [{target}]")
        out.record("arc", **{"from": str(origin), "to": str(target)})
    return 0


def _print_impact(out: Output, report: ImpactReport, scope: Sequence[RevisionId], title: str) -> None:
    out.text(out.style(title, bold=True))
    out.text("at risk:")
    for function in report.functions:
        out.text(f"  {out.style(str(function), 'red')}")
        out.record("function", id=str(function), status="at-risk")
    at_risk = set(report.revisions)
    out.text("revisions at risk: " + ", ".join(str(r) for r in report.revisions))
    idle = [rid for rid in sorted(scope) if rid not in at_risk]
    out.text("not involved: " + (", ".join(str(r) for r in idle) or "-"))
    for rid in sorted(set(scope) | at_risk):
        out.record("revision", id=str(rid), status="at-risk" if rid in at_risk else "not-involved")
    out.record("summary", seed=str(report.seed), level=str(report.level), **report.counts)


def cmd_impact(args: argparse.Namespace, out: Output) -> int:
    """Report what can reach a vulnerable function."""
    eco = load_corpus(args.corpus)
    if args.ecosystem_wide:
        universe = build_universe_graph(eco, build_global_graph(eco))
        report = ecosystem_change_impact(universe, args.vuln)
        scope: Sequence[RevisionId] = eco.ids()
        title = f"ecosystem-wide impact of {args.vuln}"
    else:
        if args.root is None:
            raise InvalidParams("impact needs --root unless --ecosystem-wide is given")
        resolved = _resolved(eco, args)
        if ImpactLevel(args.level) is ImpactLevel.REVISION:
            report = revision_level_impact(resolved, eco, args.vuln)
        else:
            report = stitched_impact(_stitched(eco, resolved, args.mode), args.vuln)
        scope = resolved.sorted_members()
        title = f"impact of {args.vuln} ({args.level} level, root {resolved.root})"
    _print_impact(out, report, scope, title)
    return _finding_code(args, len(report.functions) > 1)


def _centrality_graph(eco: Ecosystem, args: argparse.Namespace) -> nx.DiGraph:
    if args.ecosystem_wide:
        return build_universe_graph(eco, build_global_graph(eco))
    if args.root is None:
        raise InvalidParams("centrality needs --root unless --ecosystem-wide is given")
    return _stitched(eco, _resolved(eco, args), args.mode).graph


def cmd_centrality(args: argparse.Namespace, out: Output) -> int:
    """Rank the nodes of a stitched or universe graph."""
    eco = load_corpus(args.corpus)
    graph = _centrality_graph(eco, args)
    direction = Direction(args.direction)
    scores: Dict[Hashable, float]
    if args.measure == "pagerank":
        result = pagerank(graph, damping=args.damping, direction=direction)
        scores = result.scores
        out.record("pagerank", iterations=result.iterations, converged=result.converged, delta=result.delta)
    else:
        scores = harmonic_centrality(graph, direction)
    ranked = sorted(scores.items(), key=lambda item: (-item[1], node_sort_key(item[0])))
    if args.top > 0:
        ranked = ranked[:args.top]
    out.text(out.style(f"{args.measure} ({direction}) over {graph.number_of_nodes()} nodes", bold=True))
    for node, score in ranked:
        out.text(f"  {score:12.6f}  {node}")
        out.record("score", node=str(node), score=score)
    return 0


def cmd_license_check(args: argparse.Namespace, out: Output) -> int:
    """List calls whose callee license does not permit the caller."""
    try:
        matrix = LicenseMatrix.from_json(Path(args.matrix).read_text(encoding="utf-8"))
    except OSError as e:
        raise InvalidParams(f"cannot read license matrix {args.matrix}: {e.strerror}") from e
    eco = load_corpus(args.corpus)
    stitched = _stitched(eco, _resolved(eco, args), args.mode)
    violations = license_violations(stitched, eco, matrix)
    out.text(out.style(f"{len(violations)} license violations in the resolution of {stitched.root}", bold=True))
    for v in violations:
        out.text(f"  {v.caller} ({v.caller_license}) calls {out.style(str(v.callee), 'red')} ({v.callee_license})")
        out.record("violation", caller=str(v.caller), callee=str(v.callee),
                   caller_license=v.caller_license, callee_license=v.callee_license)
    return _finding_code(args, bool(violations))


def cmd_generate(args: argparse.Namespace, out: Output) -> int:
    """Write a synthetic corpus."""
    params = GeneratorParams(products=args.products, revisions_per_product=args.revisions,
                             functions_per_revision=args.functions, clauses_per_revision=args.clauses,
                             disjunction_probability=args.disjunction, call_arcs_per_function=args.calls,
                             external_ratio=args.external_ratio, product_dag=not args.cyclic,
                             seed=args.seed, dangling_probability=args.dangling)
    out.lines.extend(save_ecosystem(generate_synthetic(params)).decode("utf-8").splitlines())
    return 0


def cmd_stats(args: argparse.Namespace, out: Output) -> int:
    """Summarise a corpus and, with a root, its resolution."""
    eco = load_corpus(args.corpus)
    g = build_global_graph(eco)
    universe = build_universe_graph(eco, g)
    stats: Dict[str, Any] = {
        "revisions": len(eco),
        "products": len(eco.products()),
        "functions": sum(len(r.callgraph.internal) for r in eco),
        "externals": sum(len(r.callgraph.external) for r in eco),
        "call_arcs": sum(len(r.callgraph.arcs) for r in eco),
        "dependency_arcs": g.number_of_arcs(),
        "dependency_graph_acyclic": g.is_acyclic(),
    }
    chains = call_chain_statistics(universe)
    if args.root is not None:
        resolved = _resolved(eco, args)
        stitched = stitch(eco, g, resolved, StitchMode.LENIENT)
        stats.update({"resolved_revisions": len(resolved), "stitched_classes": len(stitched),
                      "phantom_classes": len(stitched.phantom_classes()),
                      "dead_functions": len(dead_functions(stitched))})
    out.text(out.style(f"corpus {args.corpus}", bold=True))
    for key, value in stats.items():
        out.text(f"  {key:<26} {str(value).lower() if isinstance(value, bool) else value}")
    out.text("  call chain depths          " + " ".join(f"{d}:{n}" for d, n in chains.items()))
    out.record("stats", **stats)
    out.record("call_chains", depths={str(d): n for d, n in chains.items()})
    return 0


def _add_resolution_args(parser: argparse.ArgumentParser, root_required: bool = True) -> None:
    parser.add_argument("--root", type=_revision_arg, required=root_required,
                        help="root revision as PRODUCT:VERSION")
    parser.add_argument("--strategy", choices=Strategy.names(), default=str(Strategy.NEWEST),
                        help="candidate ordering of the package manager")
    parser.add_argument("--snapshot", type=int, default=None,
                        help="hide revisions published after this timestamp")


def _add_mode_arg(parser: argparse.ArgumentParser, default: StitchMode = StitchMode.STRICT) -> None:
    parser.add_argument("--mode", choices=[str(m) for m in StitchMode], default=str(default),
                        help="strict stitching rejects external calls matching nothing")


def build_parser() -> argparse.ArgumentParser:
    """The argument parser of the ``ecostitch`` command."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=[TEXT, JSON], default=TEXT,
                        help="plain text or one JSON record per line")
    common.add_argument("--output", type=Path, default=None, help="write to this file instead of stdout")
    common.add_argument("-v", "--verbose", action="count", default=0, help="log more, repeat for debug")

    with_corpus = argparse.ArgumentParser(add_help=False, parents=[common])
    with_corpus.add_argument("--corpus", required=True,
                             help=f"corpus file, or {FIXTURE_NAME} for the shipped example")

    parser = argparse.ArgumentParser(prog="ecostitch", description=(
        "Resolve dependencies, stitch call graphs and analyse the result."))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("resolve", parents=[with_corpus], help="compute a resolved dependency graph")
    _add_resolution_args(p)
    p.set_defaults(handler=cmd_resolve)

    p = sub.add_parser("verify", parents=[with_corpus], help="check a candidate resolution")
    p.add_argument("--root", type=_revision_arg, required=True, help="root revision as PRODUCT:VERSION")
    p.add_argument("--members", type=_members_arg, required=True,
                   help="comma-separated PRODUCT:VERSION list")
    p.add_argument("--fail-on-findings", action="store_true", help="exit 1 if a condition fails")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("stitch", parents=[with_corpus], help="stitch the call graphs of a resolution")
    _add_resolution_args(p)
    _add_mode_arg(p)
    p.add_argument("--dot", action="store_true", help="emit a dot edge list")
    p.set_defaults(handler=cmd_stitch)

    p = sub.add_parser("impact", parents=[with_corpus], help="who can reach a vulnerable function")
    _add_resolution_args(p, root_required=False)
    _add_mode_arg(p)
    p.add_argument("--vuln", type=_function_arg, required=True,
                   help="vulnerable function as PRODUCT:VERSION:FUNCTION")
    scope = p.add_mutually_exclusive_group()
    scope.add_argument("--level", choices=[str(level) for level in ImpactLevel], default=str(ImpactLevel.FUNCTION))
    scope.add_argument("--ecosystem-wide", action="store_true",
                       help="use the resolution-independent universe graph, ignores --root")
    p.add_argument("--fail-on-findings", action="store_true",
                   help="exit 1 if anything besides the seed is at risk")
    p.set_defaults(handler=cmd_impact)

    p = sub.add_parser("centrality", parents=[with_corpus], help="rank functions by centrality")
    _add_resolution_args(p, root_required=False)
    _add_mode_arg(p)
    p.add_argument("--measure", choices=["pagerank", "harmonic"], default="pagerank")
    p.add_argument("--direction", choices=[str(d) for d in Direction], default=str(Direction.IN))
    p.add_argument("--damping", type=float, default=0.85)
    p.add_argument("--top", type=int, default=10, help="number of nodes listed, 0 for all")
    p.add_argument("--ecosystem-wide", action="store_true", help="rank the universe graph")
    p.set_defaults(handler=cmd_centrality)

    p = sub.add_parser("license-check", parents=[with_corpus], help="check function-level licenses")
    _add_resolution_args(p)
    _add_mode_arg(p)
    p.add_argument("--matrix", required=True, help="JSON file of allowed (callee, caller) license pairs")
    p.add_argument("--fail-on-findings", action="store_true", help="exit 1 on any violation")
    p.set_defaults(handler=cmd_license_check)

    p = sub.add_parser("generate", parents=[common], help="write a synthetic corpus")
    defaults = GeneratorParams()
    p.add_argument("--products", type=int, default=defaults.products)
    p.add_argument("--revisions", type=int, default=defaults.revisions_per_product,
                   help="revisions per product")
    p.add_argument("--functions", type=int, default=defaults.functions_per_revision,
                   help="functions per revision")
    p.add_argument("--clauses", type=float, default=defaults.clauses_per_revision,
                   help="mean clauses per revision")
    p.add_argument("--disjunction", type=float, default=defaults.disjunction_probability,
                   help="probability of one more alternative in a clause")
    p.add_argument("--calls", type=float, default=defaults.call_arcs_per_function,
                   help="mean call arcs per function")
    p.add_argument("--external-ratio", type=float, default=defaults.external_ratio)
    p.add_argument("--dangling", type=float, default=defaults.dangling_probability,
                   help="probability that an external call names a missing function")
    p.add_argument("--cyclic", action="store_true", help="allow cyclic product dependencies")
    p.add_argument("--seed", type=int, default=defaults.seed)
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("stats", parents=[with_corpus], help="summarise a corpus")
    _add_resolution_args(p, root_required=False)
    p.set_defaults(handler=cmd_stats)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one subcommand.

    Args:
        argv: the arguments without the program name, ``sys.argv[1:]`` by default

    Returns:
        int: the process exit code.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else 2

    handler: Callable[[argparse.Namespace, Output], int] = args.handler
    try:
        config = RuntimeConfig.from_env().with_verbosity(args.verbose)
        configure_logging(config.numeric_level, config.colors)
        out = Output(args.format, args.output, config.colors)
        code = handler(args, out)
        out.write()
    except EcostitchError as e:
        logger.debug("command.failed", command=args.command, error=type(e).__name__)
        sys.stderr.write(f"ecostitch {args.command}: error: {e}\n")
        return e.exit_code
    except OSError as e:
        sys.stderr.write(f"ecostitch {args.command}: error: {e}\n")
        return 2
    return code

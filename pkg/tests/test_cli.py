#!/usr/bin/env python3
"""
Unit-tests for cli.py. Commands run in-process through ``main`` and their
output is captured with pytest's ``capsys``.
"""
import json
from pathlib import Path
from typing import Any, Dict, List, Tuple

import pytest

from ecostitch.cli import main
from ecostitch.corpus import generate_synthetic, save_ecosystem
from ecostitch.generatorconfig import GeneratorParams
from ecostitch.stitcher import StitchedGraph


def run(capsys: pytest.CaptureFixture, *argv: str) -> Tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def records(text: str) -> List[Dict[str, Any]]:
    return [json.loads(line) for line in text.splitlines()]


def test_resolve_newest(capsys: pytest.CaptureFixture) -> None:
    code, out, _ = run(capsys, "resolve", "--corpus", "fig1", "--root", "D:1.0")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "resolved D-1.0 (newest): 5 revisions"
    assert lines[1:6] == ["  A-1.1", "  B-1.3", "  C-1.4", "  D-1.0", "  E-1.0"]
    assert "  D-1.0 -> C-1.4" in lines


def test_resolve_minimal_products_as_json(capsys: pytest.CaptureFixture) -> None:
    code, out, _ = run(capsys, "resolve", "--corpus", "fig1", "--root", "D:1.0",
                       "--strategy", "minimal-products", "--format", "json")
    assert code == 0
    members = [r["revision"] for r in records(out) if r["kind"] == "member"]
    assert members == ["A-1.0", "B-1.3", "D-1.0", "E-1.0"]
    assert {"kind": "arc", "from": "E-1.0", "to": "A-1.0"} in records(out)


def test_output_is_deterministic(capsys: pytest.CaptureFixture) -> None:
    argv = ("stitch", "--corpus", "fig1", "--root", "D:1.0", "--format", "json")
    first = run(capsys, *argv)
    assert first == run(capsys, *argv)


def test_error_exit_codes(capsys: pytest.CaptureFixture, tmp_path: Path) -> None:
    code, out, err = run(capsys, "resolve", "--corpus", "fig1", "--root", "X:9.9")
    assert code == 4 and out == ""
    assert err.startswith("ecostitch resolve: error:")
    assert run(capsys, "resolve", "--corpus", "fig1", "--root", "D-1.0")[0] == 2
    assert run(capsys, "resolve", "--corpus", str(tmp_path / "absent.json"), "--root", "D:1.0")[0] == 4
    assert run(capsys, "resolve", "--corpus", "fig1")[0] == 2
    assert run(capsys, "impact", "--corpus", "fig1", "--vuln", "B:1.3:f2")[0] == 2
    broken = tmp_path / "broken.json"
    broken.write_text('{"revisions": [', encoding="utf-8")
    assert run(capsys, "stats", "--corpus", str(broken))[0] == 4


def test_unsatisfiable_exit_code(capsys: pytest.CaptureFixture, tmp_path: Path) -> None:
    corpus = tmp_path / "corpus.json"
    corpus.write_text(json.dumps({"revisions": [
        {"product": "R", "version": "1.0", "depspec": [[{"product": "B", "constraint": ">=2.0"}]],
         "callgraph": {"internal": [], "external": [], "arcs": []}},
        {"product": "B", "version": "1.0", "depspec": [],
         "callgraph": {"internal": [], "external": [], "arcs": []}}]}), encoding="utf-8")
    code, _, err = run(capsys, "resolve", "--corpus", str(corpus), "--root", "R:1.0")
    assert code == 3
    assert "B >=2.0" in err


def test_impact_function_level(capsys: pytest.CaptureFixture) -> None:
    code, out, _ = run(capsys, "impact", "--corpus", "fig1", "--root", "D:1.0", "--vuln", "B:1.3:f2")
    assert code == 0
    lines = out.splitlines()
    at_risk = lines.index("at risk:")
    assert lines[at_risk + 1:at_risk + 3] == ["  B-1.3:f2", "  C-1.4:f1"]
    assert "revisions at risk: B-1.3, C-1.4" in lines
    assert "not involved: A-1.1, D-1.0, E-1.0" in lines


def test_impact_revision_level_and_failure(capsys: pytest.CaptureFixture) -> None:
    code, out, _ = run(capsys, "impact", "--corpus", "fig1", "--root", "D:1.0", "--vuln", "B:1.3:f2",
                       "--level", "revision", "--fail-on-findings")
    assert code == 1
    assert "revisions at risk: B-1.3, C-1.4, D-1.0" in out.splitlines()
    assert run(capsys, "impact", "--corpus", "fig1", "--root", "D:1.0", "--vuln", "Z:1.0:f1")[0] == 4


def test_impact_ecosystem_wide(capsys: pytest.CaptureFixture) -> None:
    code, out, _ = run(capsys, "impact", "--corpus", "fig1", "--vuln", "A:1.1:f3", "--ecosystem-wide",
                       "--format", "json")
    assert code == 0
    statuses = {r["id"]: r["status"] for r in records(out) if r["kind"] == "revision"}
    assert [rid for rid, status in statuses.items() if status == "at-risk"] == ["A-1.1", "C-1.0", "D-1.0"]
    assert len(statuses) == 8
    summary = records(out)[-1]
    assert summary == {"kind": "summary", "seed": "A-1.1:f3", "level": "function",
                       "functions": 3, "revisions": 3, "products": 3}
    code, _, err = run(capsys, "impact", "--corpus", "fig1", "--vuln", "A:1.1:f3", "--ecosystem-wide",
                       "--level", "revision")
    assert code == 2 and "not allowed with" in err


def test_stitch_dot(capsys: pytest.CaptureFixture, fig1_stitched: StitchedGraph) -> None:
    code, out, _ = run(capsys, "stitch", "--corpus", "fig1", "--root", "D:1.0", "--dot")
    assert code == 0
    assert out == fig1_stitched.to_dot()


def test_stitch_modes(capsys: pytest.CaptureFixture) -> None:
    argv = ("stitch", "--corpus", "fig1", "--root", "D:1.0", "--strategy", "minimal-products")
    code, _, err = run(capsys, *argv)
    assert code == 5
    assert "x1" in err
    code, out, _ = run(capsys, *argv, "--mode", "lenient")
    assert code == 0
    assert "  [D-1.0:<x1>] D-1.0:<x1> (phantom)" in out.splitlines()


def test_centrality(capsys: pytest.CaptureFixture) -> None:
    code, out, _ = run(capsys, "centrality", "--corpus", "fig1", "--root", "D:1.0", "--top", "3",
                       "--format", "json")
    assert code == 0
    rows = records(out)
    assert rows[0]["kind"] == "pagerank" and rows[0]["converged"]
    scores = [r["score"] for r in rows[1:]]
    assert len(scores) == 3 and scores == sorted(scores, reverse=True)
    code, out, _ = run(capsys, "centrality", "--corpus", "fig1", "--root", "D:1.0", "--measure", "harmonic",
                       "--top", "1")
    assert code == 0
    assert out.splitlines()[1].split() == ["1.500000", "A-1.1:f1"]


def test_license_check(capsys: pytest.CaptureFixture, tmp_path: Path) -> None:
    matrix = tmp_path / "matrix.json"
    matrix.write_text('{"allowed": []}', encoding="utf-8")
    argv = ("license-check", "--corpus", "fig1", "--root", "D:1.0", "--matrix", str(matrix))
    code, out, _ = run(capsys, *argv)
    assert code == 0
    assert out.splitlines()[0] == "6 license violations in the resolution of D-1.0"
    assert run(capsys, *argv, "--fail-on-findings")[0] == 1
    matrix.write_text('{"allowed": [], "unknown": "ignore"}', encoding="utf-8")
    assert run(capsys, *argv, "--fail-on-findings")[0] == 0
    code, _, err = run(capsys, "license-check", "--corpus", "fig1", "--root", "D:1.0",
                       "--matrix", str(tmp_path / "absent.json"))
    assert code == 2 and "license matrix" in err


def test_verify(capsys: pytest.CaptureFixture) -> None:
    code, out, _ = run(capsys, "verify", "--corpus", "fig1", "--root", "D:1.0",
                       "--members", "D:1.0,C:1.4,B:1.3,E:1.0,A:1.1", "--format", "json")
    assert code == 0
    assert records(out)[-1] == {"kind": "summary", "holds": True}
    code, out, _ = run(capsys, "verify", "--corpus", "fig1", "--root", "D:1.0", "--members", "D:1.0",
                       "--fail-on-findings")
    assert code == 1
    assert "FAILED" in out


def test_generate_then_load(capsys: pytest.CaptureFixture, tmp_path: Path) -> None:
    code, out, _ = run(capsys, "generate", "--products", "4", "--seed", "3")
    assert code == 0
    expected = save_ecosystem(generate_synthetic(GeneratorParams(products=4, seed=3))).decode("utf-8")
    assert out == expected
    corpus = tmp_path / "generated.json"
    assert run(capsys, "generate", "--products", "4", "--seed", "3", "--output", str(corpus))[0] == 0
    assert corpus.read_text(encoding="utf-8") == expected
    code, out, _ = run(capsys, "stats", "--corpus", str(corpus), "--format", "json")
    assert code == 0
    assert records(out)[0]["revisions"] == 4 * GeneratorParams().revisions_per_product
    assert run(capsys, "generate", "--dangling", "0.5")[0] == 2


def test_stats(capsys: pytest.CaptureFixture) -> None:
    code, out, _ = run(capsys, "stats", "--corpus", "fig1", "--root", "D:1.0", "--format", "json")
    assert code == 0
    stats = records(out)[0]
    assert stats == {"kind": "stats", "revisions": 8, "products": 5, "functions": 14, "externals": 8,
                     "call_arcs": 8, "dependency_arcs": 12, "dependency_graph_acyclic": True,
                     "resolved_revisions": 5, "stitched_classes": 10, "phantom_classes": 0,
                     "dead_functions": 5}


def test_environment_settings(capsys: pytest.CaptureFixture, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("ECOSTITCH_NO_COLOR", "1")
    code, out, _ = run(capsys, "resolve", "--corpus", "fig1", "--root", "D:1.0")
    assert code == 0 and "\x1b[" not in out
    monkeypatch.setenv("ECOSTITCH_LOG_LEVEL", "chatty")
    code, _, err = run(capsys, "resolve", "--corpus", "fig1", "--root", "D:1.0")
    assert code == 2 and "chatty" in err.lower()

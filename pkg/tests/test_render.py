from __future__ import annotations

import json

from artifact.engine import Config, prove
from artifact.parser import parse_ptrs
from artifact.render import render_proof, substitution_text

from conftest import RW, TERNARY, T, load

FAST = Config(timeout=60)


def test_trivial_proof():  # [TRIVIAL]
    text = render_proof(prove(parse_ptrs("(RULES a -> b)"), FAST))
    assert text.splitlines() == [
        "YES (almost-surely innermost terminating)",
        "trivially iAST: no annotations",
    ]


def test_maybe_trace_names_processor():  # [TRIVIAL]
    text = render_proof(prove(parse_ptrs(TERNARY), FAST))
    lines = text.splitlines()
    assert lines[0] == "MAYBE"
    assert "failure trace:" in lines
    assert any("no progress" in line for line in lines)
    assert any(line.strip().startswith(("forward instantiation", "reduction pair")) for line in lines)


def test_rw_text_contains_witness():
    text = render_proof(prove(parse_ptrs(RW), FAST))
    assert "Pol(g#) = 1" in text and "Pol(g) = x1" in text
    assert "1. reduction pair" in text
    assert "result: no annotations left" in text


def test_incpl_text_lists_steps(R_incpl):
    text = render_proof(prove(R_incpl, FAST))
    assert "rewriting" in text and "reduction pair" in text
    assert "side condition NO+L+NE" in text
    assert "[1] a -> {1:f#(h#(g#),g#)}^true" in text


def test_substitution_rendering():  # [PAPER]
    assert substitution_text({"x": T("a")}) == "{x/a}"
    text = render_proof(prove(load("rule_overlap"), FAST))
    assert "{x/a}" in text


def test_machine_format_is_stable_json(R_incpl):
    out = render_proof(prove(R_incpl, FAST), "machine")
    doc = json.loads(out)
    assert doc["verdict"] == "YES" and doc["timed_out"] is False
    assert out == json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + ("\n" if out.endswith("\n") else "")
    node = doc["proof"]
    assert node["processor"] == "usable terms"
    assert node["justification"]["removed"][0] == {"adp": 1, "term": 1, "position": "1.1"}


def test_machine_format_reduction_pair():
    doc = json.loads(render_proof(prove(parse_ptrs(RW), FAST), "machine"))
    node = doc["proof"]
    assert node["processor"] == "reduction pair"
    assert node["justification"] == {"interpretation": {"g": "x1", "g#": "1"}, "strict": [1]}
    assert node["children"][0]["processor"] == "solved"


def test_machine_format_maybe():
    doc = json.loads(render_proof(prove(parse_ptrs(TERNARY), FAST), "machine"))
    assert doc["verdict"] == "MAYBE" and doc["proof"] is None and doc["trace"]

from __future__ import annotations

from pathlib import Path

import pytest

from artifact.adp import ADPProblem, make_adp
from artifact.parser import parse_ptrs, parse_term

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

RW = "(VAR x) (RULES g(x) -> {1/2 : g(g(x)), 1/2 : x})"
INCPL = """
(VAR x)
(RULES
  a -> f(h(g), g)
  g -> {1/2 : b1, 1/2 : b2}
  h(b1) -> a
  f(x, b2) -> a
)
"""
BINARY = "(RULES a -> {1/2 : b, 1/2 : c(a,a)})"
TERNARY = "(RULES a -> {1/2 : b, 1/2 : c(a,a,a)})"
FFG = "(VAR x) (RULES f(f(g(x))) -> f(g(f(g(f(x))))))"
REX = "(VAR x) (RULES f(s(x)) -> c(f(g(x))) g(x) -> s(x))"


def T(text: str, variables: str = "x y z u v w xs ys") -> object:
    """Parse a term; ``f#`` marks an annotated occurrence."""
    return parse_term(text, variables.split())


def load(name: str):
    return parse_ptrs((CORPUS / f"{name}.ptrs").read_text())


def rewritten_incpl() -> ADPProblem:
    """The incpl problem after rewriting every g and cleaning up usable terms."""
    return ADPProblem(
        (
            make_adp(T("a"), [("1/4", T("f(h#(b1),b1)")), ("1/4", T("f(h(b2),b1)")),
                              ("1/4", T("f#(h#(b1),b2)")), ("1/4", T("f#(h(b2),b2)"))]),
            make_adp(T("g"), [("1/2", T("b1")), ("1/2", T("b2"))]),
            make_adp(T("h(b1)"), T("a#")),
            make_adp(T("f(x,b2)"), T("a#"), flag=False),
        )
    )


@pytest.fixture
def R_rw():
    return parse_ptrs(RW)


@pytest.fixture
def R_incpl():
    return parse_ptrs(INCPL)


@pytest.fixture
def R_ffg():
    return parse_ptrs(FFG)


# acceptance reporting --------------------------------------------------------------

ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split(".")[0]), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'} - {detail}")

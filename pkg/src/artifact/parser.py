"""Reader for the ``(VAR ...) (RULES ...)`` rewrite-system format.

Grammar (whitespace-insensitive)::

    file     := decl*
    decl     := "(VAR" ident* ")" | "(RULES" rule* ")"
    rule     := term "->" rhs
    rhs      := term | "{" weighted ("," weighted)* "}"
    weighted := rational ":" term
    rational := int | int "/" int
    term     := ident | ident "(" term ("," term)* ")"

``(COMMENT ...)`` sections are skipped.  A ``#`` directly after a function
symbol marks an annotated occurrence; this is only meaningful for terms given
on the command line or in tests, not for rules.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .ptrs import PTRS, InputError, MultiDistribution, Rule
from .terms import App, Term, Var

_TOKEN = re.compile(r"\s+|(->)|([A-Za-z0-9_']+)|([(){},:/#])")


class ParseError(InputError):
    def __init__(self, line: int, col: int, msg: str):
        super().__init__(f"parse error at {line}:{col}: {msg}")
        self.line, self.col, self.msg = line, col, msg


class ArityMismatch(InputError):
    pass


@dataclass
class Token:
    kind: str  # "ident", "->", or a punctuation character
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out = []
    line, line_start, i = 1, 0, 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            raise ParseError(line, i - line_start + 1, f"unexpected character {text[i]!r}")
        col = i - line_start + 1
        if m.group(1):
            out.append(Token("->", "->", line, col))
        elif m.group(2):
            out.append(Token("ident", m.group(2), line, col))
        elif m.group(3):
            out.append(Token(m.group(3), m.group(3), line, col))
        chunk = m.group(0)
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = i + chunk.rfind("\n") + 1
        i = m.end()
    return out


class _Reader:
    def __init__(self, tokens: list[Token], variables: Iterable[str] = (), allow_annotations=False):
        self.toks = tokens
        self.i = 0
        self.variables = set(variables)
        self.arity: dict[str, int] = {}
        self.allow_annotations = allow_annotations

    # token helpers
    def peek(self, k: int = 0) -> Token | None:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def error(self, msg: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.peek()
        if tok is None:
            last = self.toks[-1] if self.toks else Token("", "", 1, 0)
            return ParseError(last.line, last.col + len(last.text), msg + " (at end of input)")
        return ParseError(tok.line, tok.col, msg)

    def take(self, kind: str) -> Token:
        tok = self.peek()
        if tok is None or tok.kind != kind:
            found = "end of input" if tok is None else repr(tok.text)
            raise self.error(f"expected {kind!r}, found {found}")
        self.i += 1
        return tok

    def at(self, kind: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == kind

    # grammar
    def file(self) -> PTRS:
        rules: list[Rule] = []
        while self.peek() is not None:
            self.take("(")
            head = self.take("ident")
            if head.text == "VAR":
                while self.at("ident"):
                    tok = self.take("ident")
                    if tok.text.startswith("_"):
                        raise self.error("variable names must not start with '_'", tok)
                    if tok.text in self.arity:
                        raise ArityMismatch(
                            f"{tok.line}:{tok.col}: {tok.text} already used as a function symbol"
                        )
                    self.variables.add(tok.text)
                self.take(")")
            elif head.text == "RULES":
                while not self.at(")"):
                    if self.peek() is None:
                        raise self.error("unterminated RULES section")
                    rules.append(self.rule())
                self.take(")")
            elif head.text == "COMMENT":
                self.skip_balanced()
            else:
                raise self.error(f"unknown section {head.text!r}", head)
        return PTRS(tuple(rules))

    def skip_balanced(self) -> None:
        depth = 1
        while depth:
            tok = self.peek()
            if tok is None:
                raise self.error("unterminated section")
            depth += {"(": 1, ")": -1}.get(tok.kind, 0)
            self.i += 1

    def rule(self) -> Rule:
        start = self.peek()
        lhs = self.term()
        if isinstance(lhs, Var):
            raise self.error("left-hand side must not be a variable", start)
        self.take("->")
        rhs = self.rhs()
        return Rule(lhs, rhs)

    def rhs(self) -> MultiDistribution:
        if not self.at("{"):
            return MultiDistribution.dirac(self.term())
        self.take("{")
        entries = [self.weighted()]
        while self.at(","):
            self.take(",")
            entries.append(self.weighted())
        self.take("}")
        return MultiDistribution(tuple(entries))

    def weighted(self) -> tuple[Fraction, Term]:
        num = self.integer()
        den = 1
        if self.at("/"):
            self.take("/")
            tok = self.peek()
            den = self.integer()
            if den == 0:
                raise self.error("zero denominator", tok)
        self.take(":")
        return Fraction(num, den), self.term()

    def integer(self) -> int:
        tok = self.take("ident")
        if not tok.text.isdigit():
            raise self.error(f"expected a number, found {tok.text!r}", tok)
        return int(tok.text)

    def term(self) -> Term:
        tok = self.take("ident")
        name = tok.text
        annotated = False
        if self.at("#"):
            hash_tok = self.take("#")
            if not self.allow_annotations:
                raise self.error("annotations are not allowed here", hash_tok)
            annotated = True
        args: list[Term] = []
        if self.at("("):
            self.take("(")
            args.append(self.term())
            while self.at(","):
                self.take(",")
                args.append(self.term())
            self.take(")")
        if name in self.variables:
            if args or annotated:
                raise ArityMismatch(f"{tok.line}:{tok.col}: variable {name} used as a function symbol")
            return Var(name)
        known = self.arity.setdefault(name, len(args))
        if known != len(args):
            raise ArityMismatch(
                f"{tok.line}:{tok.col}: {name} used with {len(args)} argument(s), "
                f"first used with {known}"
            )
        return App(name, args, annotated)


def parse_ptrs(text: str) -> PTRS:
    return _Reader(tokenize(text)).file()


def parse_term(
    text: str,
    variables: Iterable[str] = (),
    arities: dict[str, int] | None = None,
) -> Term:
    """Parse a single term; identifiers in ``variables`` are variables, ``f#`` is annotated."""
    reader = _Reader(tokenize(text), variables, allow_annotations=True)
    if arities:
        reader.arity.update(arities)
    t = reader.term()
    if reader.peek() is not None:
        raise reader.error("trailing input")
    return t


def signature(R: PTRS) -> dict[str, int]:
    """Arity of every function symbol occurring in ``R``."""
    out: dict[str, int] = {}

    def walk(t: Term) -> None:
        if isinstance(t, App):
            out.setdefault(t.fn, len(t.args))
            for a in t.args:
                walk(a)

    for r in R.rules:
        walk(r.lhs)
        for t in r.rhs.support:
            walk(t)
    return out

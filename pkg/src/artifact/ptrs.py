"""Probabilistic rewrite rules, multi-distributions and innermost rewriting."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, NamedTuple

from .terms import (
    App,
    Position,
    Substitution,
    Symbol,
    Term,
    Var,
    flatten,
    match,
    positions,
    replace_at,
    subterm_at,
    substitute,
    variables,
)


class InputError(ValueError):
    """Malformed rewrite system; the CLI maps these to exit code 2."""


class ProbabilitySumError(InputError):
    pass


class ExtraVariableError(InputError):
    pass


class NotInnermostRedex(ValueError):
    pass


@dataclass(frozen=True)
class MultiDistribution:
    """Finite multiset of ``(probability, term)`` pairs; order is kept for output."""

    entries: tuple[tuple[Fraction, Term], ...]

    def __post_init__(self):
        entries = tuple((Fraction(p), t) for p, t in self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise ProbabilitySumError("empty distribution")
        for p, _ in entries:
            if not 0 < p <= 1:
                raise ProbabilitySumError(f"probability {p} outside (0, 1]")
        total = sum(p for p, _ in entries)
        if total != 1:
            raise ProbabilitySumError(f"probabilities sum to {total}, not 1")

    @classmethod
    def dirac(cls, t: Term) -> MultiDistribution:
        return cls(((Fraction(1), t),))

    def __iter__(self) -> Iterator[tuple[Fraction, Term]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def support(self) -> tuple[Term, ...]:
        return tuple(t for _, t in self.entries)

    @property
    def probabilities(self) -> tuple[Fraction, ...]:
        return tuple(p for p, _ in self.entries)

    def is_trivial(self) -> bool:
        return len(self.entries) == 1

    def map(self, f) -> MultiDistribution:
        return MultiDistribution(tuple((p, f(t)) for p, t in self.entries))

    def flatten(self) -> MultiDistribution:
        return self.map(flatten)

    def substitute(self, sigma: Mapping[str, Term]) -> MultiDistribution:
        return self.map(lambda t: substitute(t, sigma))

    def __str__(self) -> str:
        return "{" + ", ".join(f"{p}:{t}" for p, t in self.entries) + "}"


def lhs_index(lhss: Iterable[Term]) -> dict[Symbol, tuple[Term, ...]]:
    index: dict[Symbol, list[Term]] = {}
    for lhs in lhss:
        index.setdefault(lhs.symbol, []).append(lhs)
    return {k: tuple(v) for k, v in index.items()}


@dataclass(frozen=True)
class Rule:
    lhs: Term
    rhs: MultiDistribution

    def __post_init__(self):
        if isinstance(self.lhs, Var):
            raise ValueError("left-hand side must not be a variable")
        if self.lhs.has_annotation:
            raise ValueError("left-hand side must be annotation-free")
        lvars = set(variables(self.lhs))
        for r in self.rhs.support:
            extra = [v for v in variables(r) if v not in lvars]
            if extra:
                raise ExtraVariableError(
                    f"variable(s) {', '.join(extra)} occur on the right but not in {self.lhs}"
                )

    def variables(self) -> list[str]:
        seen = dict.fromkeys(variables(self.lhs))
        for r in self.rhs.support:
            seen.update(dict.fromkeys(variables(r)))
        return list(seen)

    def substitute(self, sigma: Mapping[str, Term]) -> Rule:
        return Rule(substitute(self.lhs, sigma), self.rhs.substitute(sigma))

    def __str__(self) -> str:
        return f"{self.lhs} -> {self.rhs}"


@dataclass(frozen=True)
class PTRS:
    rules: tuple[Rule, ...]
    lhss_by_symbol: dict = field(init=False, repr=False, compare=False, hash=False)
    rules_by_symbol: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "lhss_by_symbol", lhs_index(r.lhs for r in self.rules))
        by_sym: dict[Symbol, list[Rule]] = {}
        for r in self.rules:
            by_sym.setdefault(r.lhs.symbol, []).append(r)
        object.__setattr__(self, "rules_by_symbol", {k: tuple(v) for k, v in by_sym.items()})

    @property
    def defined(self) -> frozenset[Symbol]:
        return frozenset(self.lhss_by_symbol)

    def __iter__(self):
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def __str__(self) -> str:
        return "\n".join(str(r) for r in self.rules)


def defined_symbols(R: PTRS) -> frozenset[Symbol]:
    return R.defined


def is_root_redex(t: Term, R) -> bool:
    if isinstance(t, Var):
        return False
    for lhs in R.lhss_by_symbol.get(t.symbol, ()):
        if match(lhs, t) is not None:
            return True
    return False


def is_nf(t: Term, R) -> bool:
    """True iff no left-hand side of ``R`` matches a subterm of ♭(t)."""
    index = R.lhss_by_symbol
    stack = [flatten(t)]
    while stack:
        s = stack.pop()
        if isinstance(s, Var):
            continue
        for lhs in index.get(s.symbol, ()):
            if match(lhs, s) is not None:
                return False
        stack.extend(s.args)
    return True


def is_anf(t: Term, R) -> bool:
    """True iff every proper subterm of ♭(t) is a normal form."""
    if isinstance(t, Var):
        return True
    return all(is_nf(a, R) for a in t.args)


class Redex(NamedTuple):
    position: Position
    rule: Rule
    sigma: Substitution


def innermost_redexes(t: Term, R: PTRS) -> list[Redex]:
    """Innermost redexes of ♭(t), leftmost-outermost, rules in declaration order."""
    flat = flatten(t)
    out = []
    for pos in positions(flat):
        s = subterm_at(flat, pos)
        if isinstance(s, Var):
            continue
        candidates = R.rules_by_symbol.get(s.symbol, ())
        if not candidates:
            continue
        matches = [(rule, match(rule.lhs, s)) for rule in candidates]
        matches = [(rule, sigma) for rule, sigma in matches if sigma is not None]
        if matches and is_anf(s, R):
            out.extend(Redex(pos, rule, sigma) for rule, sigma in matches)
    return out


def rewrite_innermost(t: Term, pos: Position, rule: Rule, R: PTRS | None = None) -> MultiDistribution:
    """Apply ``rule`` at ``pos``; the redex must be innermost w.r.t. ``R`` (default: {rule})."""
    s = subterm_at(t, pos)
    sigma = match(rule.lhs, flatten(s))
    if sigma is None:
        raise NotInnermostRedex(f"{rule.lhs} does not match {s}")
    if not is_anf(s, R if R is not None else PTRS((rule,))):
        raise NotInnermostRedex(f"{s} has a reducible argument")
    return MultiDistribution(
        tuple((p, replace_at(t, pos, substitute(r, sigma))) for p, r in rule.rhs)
    )


def make_rule(lhs: Term, rhs: Iterable[tuple[Fraction | int | str, Term]] | Term) -> Rule:
    if isinstance(rhs, (Var, App)):
        return Rule(lhs, MultiDistribution.dirac(rhs))
    return Rule(lhs, MultiDistribution(tuple((Fraction(p), r) for p, r in rhs)))

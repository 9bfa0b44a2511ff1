"""Annotated dependency pairs (ADPs), ADP problems and the annotated rewrite relation."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple

from .ptrs import PTRS, MultiDistribution, Rule, is_anf, lhs_index
from .terms import (
    App,
    Position,
    Substitution,
    Symbol,
    Term,
    Var,
    annotate_defined,
    annotate_root,
    annotated_subterms,
    canonical_renaming,
    flatten,
    match,
    positions,
    replace_at,
    strip_above,
    substitute,
    subterm_at,
    variables,
)


class NontrivialDistribution(ValueError):
    pass


@dataclass(frozen=True)
class ADP:
    lhs: Term
    rhs: MultiDistribution
    flag: bool = True

    def __post_init__(self):
        if isinstance(self.lhs, Var):
            raise ValueError("left-hand side must not be a variable")
        if self.lhs.has_annotation:
            raise ValueError("left-hand side must be annotation-free")
        lvars = set(variables(self.lhs))
        for r in self.rhs.support:
            if not set(variables(r)) <= lvars:
                raise ValueError(f"extra variables in {r} w.r.t. {self.lhs}")

    @property
    def has_annotation(self) -> bool:
        return any(r.has_annotation for r in self.rhs.support)

    def flatten(self) -> ADP:
        if not self.has_annotation:
            return self
        return ADP(self.lhs, self.rhs.flatten(), self.flag)

    def with_flag(self, flag: bool) -> ADP:
        return ADP(self.lhs, self.rhs, flag)

    def with_rhs(self, rhs: MultiDistribution) -> ADP:
        return ADP(self.lhs, rhs, self.flag)

    def variables(self) -> list[str]:
        seen = dict.fromkeys(variables(self.lhs))
        for r in self.rhs.support:
            seen.update(dict.fromkeys(variables(r)))
        return list(seen)

    def substitute(self, sigma: Mapping[str, Term]) -> ADP:
        return ADP(substitute(self.lhs, sigma), self.rhs.substitute(sigma), self.flag)

    def canonical(self) -> ADP:
        """Variant with variables renamed by first occurrence."""
        return self.substitute(canonical_renaming([self.lhs, *self.rhs.support]))

    def annotated_subterms(self) -> list[tuple[int, Position, Term]]:
        """``(j, π, t)`` for every t ⊴# r_j, with j 0-based."""
        return [
            (j, pos, t)
            for j, r in enumerate(self.rhs.support)
            for pos, t in annotated_subterms(r)
        ]

    def __str__(self) -> str:
        return f"{self.lhs} -> {self.rhs}^{'true' if self.flag else 'false'}"


@dataclass(frozen=True)
class ADPProblem:
    adps: tuple[ADP, ...]
    classical: bool = False
    lhss_by_symbol: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "adps", tuple(self.adps))
        object.__setattr__(self, "lhss_by_symbol", lhs_index(a.lhs for a in self.adps))

    def __iter__(self):
        return iter(self.adps)

    def __len__(self) -> int:
        return len(self.adps)

    def __getitem__(self, i: int) -> ADP:
        return self.adps[i]

    @property
    def defined(self) -> frozenset[Symbol]:
        return frozenset(self.lhss_by_symbol)

    @property
    def np_defined(self) -> frozenset[Symbol]:
        """Root symbols of left-hand sides of ADPs with flag true."""
        return frozenset(a.lhs.symbol for a in self.adps if a.flag)

    def replace(self, adps: Iterable[ADP]) -> ADPProblem:
        return ADPProblem(tuple(adps), self.classical)

    def flatten(self) -> ADPProblem:
        return self.replace(a.flatten() for a in self.adps)

    def key(self) -> frozenset:
        """Identity modulo variable renaming and ADP order."""
        return frozenset(a.canonical() for a in self.adps)

    def __str__(self) -> str:
        return "\n".join(str(a) for a in self.adps)


def dedupe(adps: Iterable[ADP]) -> list[ADP]:
    """Drop ADPs that are variants of earlier ones."""
    seen = set()
    out = []
    for a in adps:
        k = a.canonical()
        if k not in seen:
            seen.add(k)
            out.append(a)
    return out


def canonical_adps(R: PTRS) -> ADPProblem:
    D = R.defined
    return ADPProblem(
        tuple(ADP(r.lhs, r.rhs.map(lambda t: annotate_defined(t, D)), True) for r in R.rules)
    )


def np(P: ADPProblem) -> PTRS:
    """Plain rules ℓ → ♭(r_j) for every flag-true ADP and every support term."""
    return PTRS(
        tuple(
            Rule(a.lhs, MultiDistribution.dirac(flatten(r)))
            for a in P.adps
            if a.flag
            for r in a.rhs.support
        )
    )


def dp(P: ADPProblem) -> list[tuple[Term, Term]]:
    """Classical dependency pairs ℓ# → t# of a problem with trivial distributions."""
    out = []
    for a in P.adps:
        if not a.rhs.is_trivial():
            raise NontrivialDistribution(str(a))
        for _, t in annotated_subterms(a.rhs.support[0]):
            out.append((annotate_root(a.lhs), annotate_root(t)))
    return out


def is_solved(P: ADPProblem) -> bool:
    return not any(a.has_annotation for a in P.adps)


def as_ptrs(P: ADPProblem) -> PTRS:
    """The flattened problem read as a plain PTRS (flags ignored)."""
    return PTRS(tuple(Rule(a.lhs, a.rhs.flatten()) for a in P.adps))


class StepCase(enum.Enum):
    PR = "pr"
    P = "p"
    R = "r"
    IRR = "irr"

    @classmethod
    def of(cls, annotated: bool, flag: bool) -> StepCase:
        if annotated:
            return cls.PR if flag else cls.P
        return cls.R if flag else cls.IRR


class Step(NamedTuple):
    position: Position
    adp: ADP
    sigma: Substitution
    case: StepCase
    result: MultiDistribution


def step_result(s: Term, pos: Position, adp: ADP, sigma: Substitution, case: StepCase) -> MultiDistribution:
    entries = []
    for p, r in adp.rhs:
        body = r if case in (StepCase.PR, StepCase.P) else flatten(r)
        t = replace_at(s, pos, substitute(body, sigma))
        if case in (StepCase.P, StepCase.IRR):
            t = strip_above(t, pos)
        entries.append((p, t))
    return MultiDistribution(tuple(entries))


def adp_steps(s: Term, P: ADPProblem) -> list[Step]:
    """All innermost ⇒_P steps from ``s``, positions leftmost-outermost, ADPs in order."""
    out = []
    index = P.lhss_by_symbol
    for pos in positions(s):
        sub = subterm_at(s, pos)
        if isinstance(sub, Var) or sub.symbol not in index:
            continue
        flat = flatten(sub)
        found = []
        for a in P.adps:
            if a.lhs.symbol != flat.symbol:
                continue
            sigma = match(a.lhs, flat)
            if sigma is not None:
                found.append((a, sigma))
        if not found or not is_anf(flat, P):
            continue
        for a, sigma in found:
            case = StepCase.of(sub.annotated, a.flag)
            out.append(Step(pos, a, sigma, case, step_result(s, pos, a, sigma, case)))
    return out


def make_adp(lhs: Term, rhs, flag: bool = True) -> ADP:
    if isinstance(rhs, (Var, App)):
        return ADP(lhs, MultiDistribution.dirac(rhs), flag)
    return ADP(lhs, MultiDistribution(tuple((Fraction(p), r) for p, r in rhs)), flag)

"""Transformational processors: rewriting, instantiation, forward instantiation
and rule overlap instantiation, together with their syntactic side conditions."""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .adp import ADP, ADPProblem, dedupe
from .processors import ProcessorError, ProcessorResult, usable_rules_closure
from .ptrs import MultiDistribution, is_anf
from .terms import (
    Position,
    Substitution,
    Term,
    Var,
    annotate,
    annotate_root,
    annotated_subterms,
    cap,
    cap_all,
    flatten,
    format_position,
    is_ground,
    linearize,
    match,
    positions,
    rename_fresh,
    replace_at,
    substitute,
    subterm_at,
    unify,
    variable_occurrences,
    variables,
)


class SideConditionUnmet(ProcessorError):
    pass


class AnnotationBelowTau(ProcessorError):
    pass


class NoRuleApplicable(ProcessorError):
    pass


class SideCondition(enum.Enum):
    LINEAR_NON_ERASING = "NO+L+NE"
    ALL_TRIVIAL = "NO+all-trivial"
    GROUND_INNERMOST = "NO+ground+innermost"


# ---------------------------------------------------------------------------
# syntactic properties
# ---------------------------------------------------------------------------


def _lhs(rule) -> Term:
    # accepts rules, ADPs or bare left-hand sides
    return getattr(rule, "lhs", rule)


def is_non_overlapping(rules: Iterable) -> bool:
    """No left-hand side unifies with a non-variable subterm of another (or a proper one of itself)."""
    lhss = [_lhs(r) for r in rules]
    for a, la in enumerate(lhss):
        for b, lb in enumerate(lhss):
            la_r = rename_fresh(la)
            for pos in positions(lb):
                if a == b and not pos:
                    continue
                sub = subterm_at(lb, pos)
                if isinstance(sub, Var):
                    continue
                if unify(la_r, sub) is not None:
                    return False
    return True


def is_linear(rule) -> bool:
    occ = Counter(variable_occurrences(rule.lhs))
    if any(n > 1 for n in occ.values()):
        return False
    for r in rule.rhs.support:
        if any(n > 1 for n in Counter(variable_occurrences(r)).values()):
            return False
    return True


def is_non_erasing(rule) -> bool:
    lvars = set(variables(rule.lhs))
    return all(lvars <= set(variables(r)) for r in rule.rhs.support)


# ---------------------------------------------------------------------------
# rewriting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RewriteCheck:
    rule_index: int
    sigma: Substitution
    condition: SideCondition


def check_rewrite(P: ADPProblem, i: int, j: int, tau: Position) -> RewriteCheck:
    """Validate a rewriting-processor application and return the certified case."""
    a = P.adps[i]
    r = a.rhs.support[j]
    s = subterm_at(r, tau)
    if s.has_annotation:
        raise AnnotationBelowTau(f"annotation at or below {format_position(tau)}")
    if isinstance(s, Var) or s.symbol not in P.defined:
        raise NoRuleApplicable(f"{s} is not rooted by a defined symbol")
    applicable = [
        (k, sigma)
        for k, b in enumerate(P.adps)
        if b.flag and (sigma := match(b.lhs, s)) is not None
    ]
    if not applicable:
        raise NoRuleApplicable(f"no flag-true ADP rewrites {s}")
    k, sigma = applicable[0]
    usable = [P.adps[u] for u in sorted(usable_rules_closure(s, P))]
    if not is_non_overlapping(usable):
        raise SideConditionUnmet(f"usable rules of {s} overlap")
    rule = P.adps[k]
    if is_linear(rule) and is_non_erasing(rule):
        return RewriteCheck(k, sigma, SideCondition.LINEAR_NON_ERASING)
    if all(u.rhs.is_trivial() and u.flag for u in usable):
        return RewriteCheck(k, sigma, SideCondition.ALL_TRIVIAL)
    if is_ground(s) and is_anf(s, P):
        return RewriteCheck(k, sigma, SideCondition.GROUND_INNERMOST)
    raise SideConditionUnmet(f"{rule} is not linear and non-erasing, and no other case applies")


def proc_rewriting(P: ADPProblem, i: int, j: int, tau: Position) -> ProcessorResult:
    """Rewrite the unannotated redex at ``tau`` of support term ``j`` of ADP ``i``."""
    check = check_rewrite(P, i, j, tau)
    a = P.adps[i]
    rule = P.adps[check.rule_index]
    entries: list[tuple[Fraction, Term]] = []
    for jj, (p, r) in enumerate(a.rhs):
        if jj != j:
            entries.append((p, r))
            continue
        for q, e in rule.rhs:
            entries.append((p * q, replace_at(r, tau, substitute(flatten(e), check.sigma))))
    rewritten = ADP(a.lhs, MultiDistribution(tuple(entries)), a.flag)
    adps = list(P.adps[:i]) + [a.flatten(), rewritten] + list(P.adps[i + 1 :])
    return ProcessorResult(
        [P.replace(dedupe(adps))],
        {
            "adp": i,
            "j": j,
            "position": tau,
            "rule": check.rule_index,
            "condition": check.condition.value,
        },
    )


def rewrite_targets(P: ADPProblem, i: int) -> list[tuple[int, Position]]:
    """Candidate (j, τ): unannotated defined positions strictly below an annotation.

    Within each support term positions are listed innermost first, then left to right.
    """
    a = P.adps[i]
    defined = P.np_defined
    out = []
    for j, r in enumerate(a.rhs.support):
        anno = [pos for pos, _ in annotated_subterms(r)]
        found = []

        def walk(s: Term, pos: Position) -> None:
            if isinstance(s, Var):
                return
            for k, x in enumerate(s.args, 1):
                walk(x, pos + (k,))
            if (
                not s.has_annotation
                and s.symbol in defined
                and any(len(p) < len(pos) and pos[: len(p)] == p for p in anno)
            ):
                found.append(pos)

        walk(r, ())
        out.extend((j, pos) for pos in found)
    return out


# ---------------------------------------------------------------------------
# instantiation
# ---------------------------------------------------------------------------


def _replace_one(P: ADPProblem, i: int, new: list[ADP], keep_flat_copy: bool) -> ADPProblem:
    a = P.adps[i]
    block = list(new) + ([a.flatten()] if keep_flat_copy else [])
    adps = list(P.adps[:i]) + block + list(P.adps[i + 1 :])
    return P.replace(dedupe(adps))


def instantiation_substitutions(P: ADPProblem, i: int) -> list[Substitution]:
    a = P.adps[i]
    target = annotate_root(a.lhs)
    out = []
    for b in P.adps:
        if not b.has_annotation:
            continue
        b = rename_fresh(b)
        for _, _, t in b.annotated_subterms():
            capped = cap(annotate_root(t), P.np_defined, protect_root=True)
            delta = unify(capped, target)
            if delta is None:
                continue
            if is_anf(substitute(b.lhs, delta), P) and is_anf(substitute(a.lhs, delta), P):
                out.append(delta)
    return out


def proc_instantiation(P: ADPProblem, i: int) -> ProcessorResult:
    a = P.adps[i]
    deltas = instantiation_substitutions(P, i)
    new = dedupe(a.substitute(d) for d in deltas)
    return ProcessorResult(
        [_replace_one(P, i, new, keep_flat_copy=True)],
        {"adp": i, "instances": [n.lhs for n in new]},
    )


def reversed_usable_cap(t: Term, P: ADPProblem):
    """The Cap used against successors of t#: abstraction w.r.t. the reversed usable rules."""
    usable = [P.adps[u] for u in sorted(usable_rules_closure(annotate_root(t), P))]
    reversed_lhss = [flatten(r) for b in usable for r in b.rhs.support]
    collapsing = any(isinstance(r, Var) for r in reversed_lhss)
    extra_vars = any(
        not set(variables(b.lhs)) <= set(variables(flatten(r)))
        for b in usable
        for r in b.rhs.support
    )
    if collapsing or extra_vars:
        return lambda s: cap_all(s, protect_root=True)
    defined = {r.symbol for r in reversed_lhss}
    return lambda s: linearize(cap(s, defined, protect_root=True))


def forward_instantiation_substitutions(P: ADPProblem, i: int) -> list[Substitution]:
    a = P.adps[i]
    out = []
    for _, _, t in a.annotated_subterms():
        capq = reversed_usable_cap(t, P)
        source = annotate_root(t)
        for b in P.adps:
            if not b.has_annotation or b.lhs.symbol != t.symbol:
                continue
            lb = rename_fresh(b.lhs)
            delta = unify(source, capq(annotate_root(lb)))
            if delta is None:
                continue
            if is_anf(substitute(a.lhs, delta), P) and is_anf(substitute(lb, delta), P):
                out.append(delta)
    return out


def proc_forward_instantiation(P: ADPProblem, i: int) -> ProcessorResult:
    a = P.adps[i]
    deltas = forward_instantiation_substitutions(P, i)
    new = dedupe(a.substitute(d) for d in deltas)
    return ProcessorResult(
        [_replace_one(P, i, new, keep_flat_copy=True)],
        {"adp": i, "instances": [n.lhs for n in new]},
    )


# ---------------------------------------------------------------------------
# rule overlap instantiation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NarrowingCandidate:
    target: Term
    position: Position
    rule: int
    delta: Substitution


def narrowing_substitutions(t: Term, P: ADPProblem, lhs: Term) -> list[NarrowingCandidate]:
    """Unifiers of non-variable subterms of ♭(t) with renamed left-hand sides.

    ``lhs`` is the left-hand side of the ADP whose right-hand side contains t;
    both instantiated left-hand sides must be in argument normal form.
    """
    flat = flatten(t)
    out = []
    for pos in positions(flat):
        s = subterm_at(flat, pos)
        if isinstance(s, Var):
            continue
        for k, b in enumerate(P.adps):
            if b.lhs.symbol != s.symbol:
                continue
            lb = rename_fresh(b.lhs)
            delta = unify(s, lb)
            if delta is None:
                continue
            if is_anf(substitute(lhs, delta), P) and is_anf(substitute(lb, delta), P):
                out.append(NarrowingCandidate(flat, pos, k, delta))
    return out


def more_general(delta: Substitution, rho: Substitution, lhs: Term) -> bool:
    """Is ρ an instance of δ on the variables of ``lhs``?"""
    return match(substitute(lhs, delta), substitute(lhs, rho)) is not None


def is_captured(t: Term, deltas: list[Substitution], P: ADPProblem, lhs: Term) -> bool:
    return all(
        any(more_general(d, c.delta, lhs) for d in deltas)
        for c in narrowing_substitutions(t, P, lhs)
    )


def proc_rule_overlap_instantiation(
    P: ADPProblem, i: int, j: int, pos: Position
) -> ProcessorResult:
    a = P.adps[i]
    r = a.rhs.support[j]
    sub = subterm_at(r, pos)
    if isinstance(sub, Var) or not sub.annotated:
        raise ProcessorError(f"no annotated subterm at {format_position(pos)}")
    t = flatten(sub)
    deltas = [c.delta for c in narrowing_substitutions(t, P, a.lhs)]
    instances = [a.substitute(d) for d in deltas]
    entries = []
    for p, ri in a.rhs:
        keep = [
            q for q, s in annotated_subterms(ri) if not is_captured(s, deltas, P, a.lhs)
        ]
        entries.append((p, annotate(ri, keep)))
    residual = ADP(a.lhs, MultiDistribution(tuple(entries)), a.flag)
    new = dedupe(instances + [residual])
    return ProcessorResult(
        [_replace_one(P, i, new, keep_flat_copy=False)],
        {
            "adp": i,
            "j": j,
            "position": pos,
            "substitutions": deltas,
            "instances": [n.lhs for n in instances],
        },
    )


def overlap_targets(P: ADPProblem, i: int) -> list[tuple[int, Position]]:
    return [(j, pos) for j, pos, _ in P.adps[i].annotated_subterms()]


def contains_variant(P: ADPProblem, adp: ADP) -> bool:
    key = adp.canonical()
    return any(b.canonical() == key for b in P.adps)

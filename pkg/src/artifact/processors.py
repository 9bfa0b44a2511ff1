"""Core ADP processors: dependency graph, usable terms, usable rules,
reduction pair and probability removal.

Every processor takes an :class:`ADPProblem` and returns a
:class:`ProcessorResult`.  Reachability between ADPs is estimated by
renaming, ``cap`` and unification, plus argument-normal-form checks on the
instantiated left-hand sides.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import networkx as nx

from .adp import ADPProblem, NontrivialDistribution, dp, np
from .polysolve import (
    Interpretation,
    check_geq,
    check_gt,
    strict_inequalities,
    strict_set,
    weak_inequalities,
)
from .ptrs import is_anf
from .terms import (
    Term,
    annotate,
    annotate_root,
    annotated_subterms,
    cap,
    fresh_renaming,
    substitute,
    unify,
    variables,
)


class ProcessorError(ValueError):
    pass


class ConditionViolated(ProcessorError):
    def __init__(self, which: int, adp: int, j: int | None = None):
        where = f"ADP {adp + 1}" + ("" if j is None else f", support term {j + 1}")
        super().__init__(f"condition ({which}) violated for {where}")
        self.which, self.adp, self.j = which, adp, j


class EmptyStrictSet(ProcessorError):
    pass


@dataclass
class ProcessorResult:
    children: list[ADPProblem]
    justification: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class DependencyGraph:
    nodes: tuple[int, ...]
    edges: frozenset[tuple[int, int]]


# ---------------------------------------------------------------------------
# reachability estimate
# ---------------------------------------------------------------------------


def may_reach(P: ADPProblem, lhs1: Term, t: Term, lhs2: Term) -> bool:
    """Can an instance of t# (below lhs1 in ANF) reach an instance of lhs2# in ANF?

    ``t`` is a flattened subterm of a right-hand side whose left-hand side is ``lhs1``.
    """
    if t.fn != lhs2.fn or len(t.args) != len(lhs2.args):
        return False
    ren1 = fresh_renaming(variables(lhs1))
    l1 = substitute(lhs1, ren1)
    capped = cap(annotate_root(substitute(t, ren1)), P.np_defined, protect_root=True)
    l2 = substitute(lhs2, fresh_renaming(variables(lhs2)))
    delta = unify(capped, annotate_root(l2))
    if delta is None:
        return False
    return is_anf(substitute(l1, delta), P) and is_anf(substitute(l2, delta), P)


def dependency_graph(P: ADPProblem) -> DependencyGraph:
    edges = set()
    for i, a in enumerate(P.adps):
        targets = set()
        for _, _, t in a.annotated_subterms():
            for k, b in enumerate(P.adps):
                if k not in targets and may_reach(P, a.lhs, t, b.lhs):
                    targets.add(k)
        edges.update((i, k) for k in targets)
    return DependencyGraph(tuple(range(len(P))), frozenset(edges))


def cyclic_components(graph: DependencyGraph) -> list[list[int]]:
    """SCCs that contain a cycle, ordered by their smallest node."""
    g = nx.DiGraph()
    g.add_nodes_from(graph.nodes)
    g.add_edges_from(graph.edges)
    out = []
    for comp in nx.strongly_connected_components(g):
        nodes = sorted(comp)
        if len(nodes) > 1 or (nodes[0], nodes[0]) in graph.edges:
            out.append(nodes)
    return sorted(out, key=lambda c: c[0])


def proc_dependency_graph(P: ADPProblem) -> ProcessorResult:
    graph = dependency_graph(P)
    sccs = cyclic_components(graph)
    if not sccs:
        children = [P.flatten()]
    else:
        children = [
            P.replace(a if i in scc else a.flatten() for i, a in enumerate(P.adps))
            for scc in map(set, sccs)
        ]
    return ProcessorResult(
        children, {"sccs": sccs, "edges": sorted(graph.edges)}
    )


# ---------------------------------------------------------------------------
# usable terms
# ---------------------------------------------------------------------------


def _usable_terms_pass(P: ADPProblem, removed: list) -> ADPProblem:
    targets = [b for b in P.adps if b.has_annotation]
    new_adps = []
    for i, a in enumerate(P.adps):
        if not a.has_annotation:
            new_adps.append(a)
            continue
        entries = []
        for j, (p, r) in enumerate(a.rhs):
            keep = []
            for pos, t in annotated_subterms(r):
                if any(may_reach(P, a.lhs, t, b.lhs) for b in targets):
                    keep.append(pos)
                else:
                    removed.append((i, j, pos))
            entries.append((p, annotate(r, keep) if len(keep) != len(annotated_subterms(r)) else r))
        new_adps.append(a.with_rhs(type(a.rhs)(tuple(entries))))
    return P.replace(new_adps)


def proc_usable_terms(P: ADPProblem) -> ProcessorResult:
    """Drop annotations of non-usable terms, repeated until nothing changes.

    A single pass can empty an ADP of annotations, which removes it from the
    target set and may make further terms non-usable; iterating makes the
    processor idempotent.
    """
    removed: list = []
    while True:
        before = len(removed)
        P = _usable_terms_pass(P, removed)
        if len(removed) == before:
            return ProcessorResult([P], {"removed": removed})


# ---------------------------------------------------------------------------
# usable rules
# ---------------------------------------------------------------------------


def _unannotated_symbols(t: Term):
    """Symbols of t outside annotated occurrences (arguments of those still count)."""
    stack = [t]
    while stack:
        s = stack.pop()
        if s.is_var:
            continue
        if not s.annotated:
            yield s.symbol
        stack.extend(s.args)


def usable_rules_closure(t: Term, P: ADPProblem) -> frozenset[int]:
    """Indices of the usable rules U_P(t): flag-true ADPs reachable from t's symbols.

    Annotated occurrences contribute no rules of their own (no left-hand side
    is annotated) but their arguments are still inspected.
    """
    by_symbol: dict = {}
    for i, a in enumerate(P.adps):
        if a.flag:
            by_symbol.setdefault(a.lhs.symbol, []).append(i)
    out: set[int] = set()
    seen = set()
    todo = list(_unannotated_symbols(t))
    while todo:
        f = todo.pop()
        if f in seen:
            continue
        seen.add(f)
        for i in by_symbol.get(f, ()):
            out.add(i)
            for r in P.adps[i].rhs.support:
                todo.extend(_all_symbols(r))
    return frozenset(out)


def _all_symbols(t: Term):
    stack = [t]
    while stack:
        s = stack.pop()
        if s.is_var:
            continue
        yield s.symbol
        stack.extend(s.args)


def usable_rules(P: ADPProblem) -> frozenset[int]:
    out: set[int] = set()
    for a in P.adps:
        for _, _, t in a.annotated_subterms():
            out |= usable_rules_closure(annotate_root(t), P)
    return frozenset(out)


def proc_usable_rules(P: ADPProblem) -> ProcessorResult:
    usable = usable_rules(P)
    changed = [i for i, a in enumerate(P.adps) if a.flag and i not in usable]
    child = P.replace(
        a if i in usable else a.with_flag(False) for i, a in enumerate(P.adps)
    )
    return ProcessorResult([child], {"usable": sorted(usable), "deflagged": changed})


# ---------------------------------------------------------------------------
# reduction pair
# ---------------------------------------------------------------------------


def proc_reduction_pair(P: ADPProblem, pol: Interpretation) -> ProcessorResult:
    """Check ``pol`` against the weak and strict inequalities, then unannotate the strict ADPs."""
    for q in weak_inequalities(P):
        left, right = q.sides(pol)
        if not check_geq(left, right):
            raise ConditionViolated(q.condition, q.adp)
    strict = strict_set(P, pol)
    if not strict:
        raise EmptyStrictSet("no ADP decreases strictly")
    child = P.replace(a.flatten() if i in strict else a for i, a in enumerate(P.adps))
    return ProcessorResult([child], {"interpretation": pol, "strict": strict})


def check_strict(P: ADPProblem, pol: Interpretation, i: int, j: int) -> bool:
    for q in strict_inequalities(P, i, j):
        left, right = q.sides(pol)
        if not (check_gt if q.strict else check_geq)(left, right):
            return False
    return True


# ---------------------------------------------------------------------------
# probability removal
# ---------------------------------------------------------------------------


def proc_probability_removal(P: ADPProblem) -> ProcessorResult:
    for a in P.adps:
        if not a.rhs.is_trivial():
            raise NontrivialDistribution(str(a))
    child = ADPProblem(P.adps, classical=True)
    return ProcessorResult(
        [child],
        {"dependency_pairs": dp(P), "rules": list(np(P).rules)},
    )

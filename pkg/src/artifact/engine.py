"""Proof search over ADP problems, proof trees and their independent re-check."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Callable

from .adp import ADPProblem, canonical_adps, is_solved
from .polysolve import MissingSymbol, search_interpretation
from .processors import (
    ProcessorError,
    ProcessorResult,
    proc_dependency_graph,
    proc_probability_removal,
    proc_reduction_pair,
    proc_usable_rules,
    proc_usable_terms,
)
from .ptrs import PTRS
from .transforms import (
    contains_variant,
    overlap_targets,
    proc_forward_instantiation,
    proc_instantiation,
    proc_rewriting,
    proc_rule_overlap_instantiation,
    rewrite_targets,
)

DEPENDENCY_GRAPH = "dependency graph"
USABLE_TERMS = "usable terms"
USABLE_RULES = "usable rules"
REDUCTION_PAIR = "reduction pair"
PROBABILITY_REMOVAL = "probability removal"
REWRITING = "rewriting"
INSTANTIATION = "instantiation"
FORWARD_INSTANTIATION = "forward instantiation"
RULE_OVERLAP = "rule overlap instantiation"
SOLVED = "solved"

TRANSFORMS = (RULE_OVERLAP, REWRITING, INSTANTIATION, FORWARD_INSTANTIATION)


@dataclass(frozen=True)
class Config:
    max_coeff: int = 2
    transform_depth: int = 8
    timeout: float = 300.0
    enable_transforms: bool = True
    seed: int = 0
    proof_format: str = "text"
    search_budget: int = 1_000_000
    transform_budget: int = 2_000


@dataclass
class ProofNode:
    problem: ADPProblem
    processor: str
    justification: dict[str, Any] = field(default_factory=dict)
    children: list[ProofNode] = field(default_factory=list)

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()


@dataclass
class Verdict:
    answer: str  # "YES" or "MAYBE"
    proof: ProofNode | None = None
    trace: list[str] = field(default_factory=list)
    timed_out: bool = False
    elapsed: float = 0.0

    @property
    def yes(self) -> bool:
        return self.answer == "YES"


class _Timeout(Exception):
    pass


def problem_key(P: ADPProblem):
    return (P.classical, P.key())


def rerun(node: ProofNode) -> ProcessorResult:
    """Re-run the processor recorded in ``node`` with its justification."""
    P, j = node.problem, node.justification
    name = node.processor
    if name == DEPENDENCY_GRAPH:
        return proc_dependency_graph(P)
    if name == USABLE_TERMS:
        return proc_usable_terms(P)
    if name == USABLE_RULES:
        return proc_usable_rules(P)
    if name == REDUCTION_PAIR:
        return proc_reduction_pair(P, j["interpretation"])
    if name == PROBABILITY_REMOVAL:
        return proc_probability_removal(P)
    if name == REWRITING:
        return proc_rewriting(P, j["adp"], j["j"], j["position"])
    if name == INSTANTIATION:
        return proc_instantiation(P, j["adp"])
    if name == FORWARD_INSTANTIATION:
        return proc_forward_instantiation(P, j["adp"])
    if name == RULE_OVERLAP:
        return proc_rule_overlap_instantiation(P, j["adp"], j["j"], j["position"])
    raise ValueError(f"unknown processor {name!r}")


def verify_proof(node: ProofNode) -> bool:
    """Independently re-check every node: leaves solved, every step reproducible."""
    if node.processor == SOLVED:
        return is_solved(node.problem) and not node.children
    try:
        result = rerun(node)
    except (ProcessorError, MissingSymbol):
        return False
    if len(result.children) != len(node.children):
        return False
    for expected, child in zip(result.children, node.children):
        if problem_key(expected) != problem_key(child.problem):
            return False
        if not verify_proof(child):
            return False
    return True


class Prover:
    def __init__(self, cfg: Config):
        self.cfg = cfg
        self.deadline = time.monotonic() + cfg.timeout
        self.seen: set = set()
        self.transforms_used = 0
        self.trace: list[str] = []

    def check_time(self) -> None:
        if time.monotonic() > self.deadline:
            raise _Timeout

    def fail(self, P: ADPProblem, last: str) -> None:
        if len(self.trace) < 50:
            self.trace.append(f"{last}: no progress on problem with {len(P)} ADPs")

    def solve(self, P: ADPProblem, depth: int = 0) -> ProofNode | None:
        self.check_time()
        if is_solved(P):
            return ProofNode(P, SOLVED)

        if not P.classical and all(a.rhs.is_trivial() for a in P.adps):
            res = proc_probability_removal(P)
            return self._single(P, PROBABILITY_REMOVAL, res, depth)

        res = proc_dependency_graph(P)
        if res.children != [P]:
            kids = []
            for child in res.children:
                sub = self.solve(child, depth)
                if sub is None:
                    return None
                kids.append(sub)
            return ProofNode(P, DEPENDENCY_GRAPH, res.justification, kids)

        for name, proc in ((USABLE_TERMS, proc_usable_terms), (USABLE_RULES, proc_usable_rules)):
            res = proc(P)
            if res.children[0] != P:
                return self._single(P, name, res, depth)

        self.check_time()
        pol = search_interpretation(
            P, self.cfg.max_coeff, self.cfg.search_budget, deadline=self.deadline
        )
        self.check_time()
        if pol is not None:
            res = proc_reduction_pair(P, pol)
            return self._single(P, REDUCTION_PAIR, res, depth)

        last = REDUCTION_PAIR
        if self.cfg.enable_transforms and depth < self.cfg.transform_depth:
            for name, make in self.transform_candidates(P):
                if self.transforms_used >= self.cfg.transform_budget:
                    break
                self.check_time()
                last = name
                try:
                    res = make()
                except ProcessorError:
                    continue
                child = res.children[0]
                if name != REWRITING and contains_variant(child, P.adps[res.justification["adp"]]):
                    continue
                key = problem_key(child)
                if key in self.seen or child == P:
                    continue
                self.seen.add(key)
                self.transforms_used += 1
                if name == REWRITING:
                    sub = self.rewrite_chain(P, child, depth + 1)
                else:
                    sub = self.solve(child, depth + 1)
                if sub is not None:
                    return ProofNode(P, name, res.justification, [sub])
        self.fail(P, last)
        return None

    def rewrite_chain(self, before: ADPProblem, P: ADPProblem, depth: int) -> ProofNode | None:
        """Keep rewriting the ADP produced by the previous rewriting step.

        The first target (innermost, leftmost) that rewrites successfully is
        taken, and no other processor runs in between.  Intermediate problems
        are rarely provable while redexes remain, so this saves one failing
        interpretation search per step.  When nothing is left to rewrite the
        ordinary search resumes.
        """
        old = set(before.adps)
        fresh = [k for k, a in enumerate(P.adps) if a.has_annotation and a not in old]
        if (
            len(fresh) == 1
            and depth < self.cfg.transform_depth
            and self.transforms_used < self.cfg.transform_budget
        ):
            k = fresh[0]
            for j, tau in rewrite_targets(P, k):
                self.check_time()
                try:
                    res = proc_rewriting(P, k, j, tau)
                except ProcessorError:
                    continue
                child = res.children[0]
                key = problem_key(child)
                if key in self.seen or child == P:
                    continue
                self.seen.add(key)
                self.transforms_used += 1
                sub = self.rewrite_chain(P, child, depth + 1)
                return None if sub is None else ProofNode(P, REWRITING, res.justification, [sub])
        return self.solve(P, depth)

    def _single(self, P, name, res, depth) -> ProofNode | None:
        sub = self.solve(res.children[0], depth)
        if sub is None:
            return None
        return ProofNode(P, name, res.justification, [sub])

    def transform_candidates(self, P: ADPProblem) -> list[tuple[str, Callable[[], ProcessorResult]]]:
        annotated = [i for i, a in enumerate(P.adps) if a.has_annotation]
        out: list[tuple[str, Callable[[], ProcessorResult]]] = []
        for i in annotated:
            for j, pos in overlap_targets(P, i):
                out.append((RULE_OVERLAP, lambda i=i, j=j, pos=pos: proc_rule_overlap_instantiation(P, i, j, pos)))
        for i in annotated:
            for j, tau in rewrite_targets(P, i):
                out.append((REWRITING, lambda i=i, j=j, tau=tau: proc_rewriting(P, i, j, tau)))
        for i in annotated:
            out.append((INSTANTIATION, lambda i=i: proc_instantiation(P, i)))
        for i in annotated:
            out.append((FORWARD_INSTANTIATION, lambda i=i: proc_forward_instantiation(P, i)))
        return out


def prove(R: PTRS, cfg: Config = Config()) -> Verdict:
    start = time.monotonic()
    prover = Prover(cfg)
    P = canonical_adps(R)
    prover.seen.add(problem_key(P))
    try:
        proof = prover.solve(P)
    except _Timeout:
        return Verdict(
            "MAYBE",
            trace=prover.trace + [f"timeout after {cfg.timeout:g} s"],
            timed_out=True,
            elapsed=time.monotonic() - start,
        )
    elapsed = time.monotonic() - start
    if proof is None:
        return Verdict("MAYBE", trace=prover.trace or ["no processor applies"], elapsed=elapsed)
    if not verify_proof(proof):
        return Verdict("MAYBE", proof, ["proof failed independent re-verification"], elapsed=elapsed)
    return Verdict("YES", proof, elapsed=elapsed)

"""Executable semantics for cross-checking verdicts.

``simulate_run`` samples one innermost rewrite sequence with a seeded
generator; ``estimate_termination`` aggregates many runs into a Wilson
interval; ``bounded_mass`` computes the exact leaf mass of the rewrite
sequence tree truncated at a given depth.

The sampler evaluates call-by-value: arguments are normalised left to right
before the root is tried.  That is exactly the leftmost-innermost strategy,
and it avoids re-scanning the whole term after every step.
"""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import lcm, sqrt
from statistics import NormalDist

from .ptrs import PTRS, innermost_redexes
from .terms import App, Symbol, Term, Var, match, replace_at, substitute, variable_occurrences


class ExplosionGuard(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    trials: int = 1000
    step_cap: int = 10_000
    size_cap: int = 2_000
    seed: int = 0
    rule_policy: str = "first"  # or "uniform"
    position_policy: str = "leftmost-innermost"

    def __post_init__(self):
        if self.trials < 1 or self.step_cap < 1 or self.size_cap < 1:
            raise ValueError("trials and caps must be at least 1")
        if self.rule_policy not in ("first", "uniform"):
            raise ValueError(f"unknown rule policy {self.rule_policy!r}")
        if self.position_policy != "leftmost-innermost":
            raise ValueError(f"unknown position policy {self.position_policy!r}")


@dataclass(frozen=True)
class RunResult:
    terminated: bool
    steps: int
    final_size: int


class _Sampler:
    """Pre-processed rule set for fast sampling."""

    def __init__(self, R: PTRS):
        self.rules: dict[Symbol, list[tuple[Term, list[tuple[int, Term, list[str]]], int]]] = {}
        for rule in R.rules:
            den = lcm(*(p.denominator for p in rule.rhs.probabilities))
            support = [
                (int(p * den), r, variable_occurrences(r)) for p, r in rule.rhs
            ]
            self.rules.setdefault(rule.lhs.symbol, []).append((rule.lhs, support, den))

    def run(self, start: Term, cfg: SimConfig, rng: random.Random) -> RunResult:
        EVAL, BUILD = 0, 1
        work: list[tuple] = [(EVAL, start, None)]
        vals: list[Term] = []
        size = start.size
        steps = 0
        rules = self.rules
        uniform = cfg.rule_policy == "uniform"
        while work:
            item = work.pop()
            if item[0] == EVAL:
                t, sigma = item[1], item[2]
                if isinstance(t, Var):
                    vals.append(t if sigma is None else sigma[t.name])
                    continue
                work.append((BUILD, t.fn, len(t.args)))
                for a in reversed(t.args):
                    work.append((EVAL, a, sigma))
                continue
            _, fn, n = item
            if n:
                args = vals[-n:]
                del vals[-n:]
            else:
                args = ()
            node = App(fn, args)
            candidates = rules.get(Symbol(fn, n))
            chosen = None
            if candidates:
                hits = []
                for lhs, support, den in candidates:
                    sigma = match(lhs, node)
                    if sigma is not None:
                        hits.append((sigma, support, den))
                        if not uniform:
                            break
                if hits:
                    chosen = hits[rng.randrange(len(hits))] if uniform else hits[0]
            if chosen is None:
                vals.append(node)
                continue
            steps += 1
            if steps > cfg.step_cap:
                return RunResult(False, steps - 1, size)
            sigma, support, den = chosen
            draw = rng.randrange(den)
            for weight, r, occ in support:
                if draw < weight:
                    break
                draw -= weight
            size += r.size + sum(sigma[v].size - 1 for v in occ) - node.size
            if size > cfg.size_cap:
                return RunResult(False, steps, size)
            work.append((EVAL, r, sigma))
        return RunResult(True, steps, size)


def simulate_run(R: PTRS, start: Term, cfg: SimConfig, rng: random.Random | None = None) -> RunResult:
    if start.has_annotation:
        raise ValueError("start term must be annotation-free")
    rng = rng if rng is not None else random.Random(cfg.seed)
    return _Sampler(R).run(start, cfg, rng)


@dataclass(frozen=True)
class Estimate:
    terminated: int
    trials: int
    low: float
    high: float
    policy_relative: bool

    @property
    def point(self) -> Fraction:
        return Fraction(self.terminated, self.trials)


def wilson_interval(successes: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def _run_chunk(R: PTRS, start: Term, cfg: SimConfig, first: int, last: int) -> int:
    sampler = _Sampler(R)
    return sum(
        sampler.run(start, cfg, random.Random(cfg.seed + k)).terminated
        for k in range(first, last)
    )


def estimate_termination(R: PTRS, start: Term, cfg: SimConfig, jobs: int = 1) -> Estimate:
    """Fraction of terminated runs; censored runs count as non-terminated.

    Trial ``k`` uses seed ``cfg.seed + k``, so the result does not depend on ``jobs``.
    """
    from .transforms import is_non_overlapping

    if jobs <= 1:
        hits = _run_chunk(R, start, cfg, 0, cfg.trials)
    else:
        bounds = [cfg.trials * w // jobs for w in range(jobs + 1)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_run_chunk, R, start, cfg, bounds[w], bounds[w + 1])
                for w in range(jobs)
            ]
            hits = sum(f.result() for f in futures)
    low, high = wilson_interval(hits, cfg.trials)
    return Estimate(hits, cfg.trials, low, high, not is_non_overlapping(R.rules))


def bounded_mass(
    R: PTRS,
    start: Term,
    depth: int,
    adversarial: bool = False,
    node_budget: int = 10**6,
) -> Fraction:
    """Exact leaf mass of the rewrite sequence tree from ``start`` cut at ``depth`` steps.

    Without ``adversarial`` the tree follows the leftmost-innermost redex and
    the first matching rule.  With it, every node takes the minimum over all
    innermost redexes and rules, a lower bound valid for every strategy.
    """
    memo: dict[tuple[Term, int], Fraction] = {}
    visited = 0

    def mass(t: Term, d: int) -> Fraction:
        nonlocal visited
        key = (t, d)
        if key in memo:
            return memo[key]
        visited += 1
        if visited > node_budget:
            raise ExplosionGuard(f"more than {node_budget} nodes")
        redexes = innermost_redexes(t, R)
        if not redexes:
            result = Fraction(1)
        elif d == 0:
            result = Fraction(0)
        else:
            choices = redexes if adversarial else redexes[:1]
            result = min(
                sum(
                    (p * mass(replace_at(t, pos, substitute(r, sigma)), d - 1)
                     for p, r in rule.rhs),
                    Fraction(0),
                )
                for pos, rule, sigma in choices
            )
        memo[key] = result
        return result

    return mass(start, depth)

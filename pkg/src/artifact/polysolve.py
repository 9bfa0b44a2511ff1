"""Polynomial interpretations over the naturals and a search for reduction-pair witnesses.

A polynomial is a map from monomials to rational coefficients.  A monomial is
a sorted tuple of ``(variable, exponent)`` pairs.  Variables are strings:
term variables keep their names, argument placeholders of a symbol's
polynomial are ``$1 .. $n`` and template unknowns are ``?...``.

Inequalities are decided by absolute positiveness: ``p >= q`` holds if every
coefficient of ``p - q`` is non-negative, ``p > q`` additionally needs a
constant part of at least 1.  Both are sound for natural-valued variables.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterable, Mapping

from .ptrs import MultiDistribution
from .terms import App, Term, Var, annotate_root, annotated_subterms, flatten

Monomial = tuple[tuple[str, int], ...]


class MissingSymbol(KeyError):
    pass


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for v, e in b:
        exps[v] = exps.get(v, 0) + e
    return tuple(sorted(exps.items()))


class Poly:
    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        self.terms = {m: Fraction(c) for m, c in (terms or {}).items() if c != 0}

    @classmethod
    def const(cls, c) -> Poly:
        return cls({(): Fraction(c)})

    @classmethod
    def var(cls, name: str) -> Poly:
        return cls({((name, 1),): Fraction(1)})

    def __add__(self, other: Poly) -> Poly:
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return Poly(out)

    def __neg__(self) -> Poly:
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: Poly) -> Poly:
        return self + (-other)

    def __mul__(self, other) -> Poly:
        if not isinstance(other, Poly):
            other = Fraction(other)
            return Poly({m: c * other for m, c in self.terms.items()})
        out: dict[Monomial, Fraction] = {}
        for (m1, c1), (m2, c2) in itertools.product(self.terms.items(), other.terms.items()):
            m = _mono_mul(m1, m2)
            out[m] = out.get(m, 0) + c1 * c2
        return Poly(out)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def variables(self) -> set[str]:
        return {v for m in self.terms for v, _ in m}

    def constant(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def is_multilinear(self) -> bool:
        return all(e <= 1 for m in self.terms for _, e in m)

    def substitute(self, sigma: Mapping[str, Poly]) -> Poly:
        out = Poly()
        for m, c in self.terms.items():
            prod = Poly.const(c)
            rest = []
            for v, e in m:
                if v in sigma:
                    for _ in range(e):
                        prod = prod * sigma[v]
                else:
                    rest.append((v, e))
            if rest:
                prod = prod * Poly({tuple(rest): Fraction(1)})
            out = out + prod
        return out

    def evaluate(self, env: Mapping[str, Fraction | int]) -> Fraction:
        total = Fraction(0)
        for m, c in self.terms.items():
            val = Fraction(c)
            for v, e in m:
                val *= Fraction(env[v]) ** e
            total += val
        return total

    def split(self, keep) -> dict[Monomial, Poly]:
        """Group by the part of each monomial whose variables satisfy ``keep``.

        Returns a map from that outer monomial to the polynomial formed by the
        remaining variables.
        """
        out: dict[Monomial, dict[Monomial, Fraction]] = {}
        for m, c in self.terms.items():
            outer = tuple((v, e) for v, e in m if keep(v))
            inner = tuple((v, e) for v, e in m if not keep(v))
            bucket = out.setdefault(outer, {})
            bucket[inner] = bucket.get(inner, 0) + c
        return {k: Poly(v) for k, v in out.items()}

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m in sorted(self.terms, key=lambda m: (len(m), m)):
            c = self.terms[m]
            mono = "·".join(v if e == 1 else f"{v}^{e}" for v, e in m)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            else:
                parts.append(f"{c}·{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    __repr__ = __str__


def placeholder(i: int) -> str:
    return f"${i}"


# ---------------------------------------------------------------------------
# interpretations
# ---------------------------------------------------------------------------

SymbolKey = tuple[str, bool]  # (name, annotated)


def symbol_label(key: SymbolKey) -> str:
    name, annotated = key
    return name + ("#" if annotated else "")


@dataclass(frozen=True)
class Interpretation:
    """Polynomials per (symbol, annotated) over placeholders ``$1 .. $n``."""

    polys: tuple[tuple[SymbolKey, Poly], ...]

    @classmethod
    def of(cls, mapping: Mapping[SymbolKey, Poly]) -> Interpretation:
        return cls(tuple(sorted(mapping.items(), key=lambda kv: (kv[0][0], kv[0][1]))))

    def as_dict(self) -> dict[SymbolKey, Poly]:
        return dict(self.polys)

    def __getitem__(self, key: SymbolKey) -> Poly:
        for k, p in self.polys:
            if k == key:
                return p
        raise MissingSymbol(symbol_label(key))

    def __contains__(self, key: SymbolKey) -> bool:
        return any(k == key for k, _ in self.polys)

    def is_natural(self) -> bool:
        return all(
            c >= 0 and c.denominator == 1 and p.is_multilinear()
            for _, p in self.polys
            for c in p.terms.values()
        )

    def render(self) -> list[str]:
        out = []
        for key, p in self.polys:
            name, _ = key
            label = symbol_label(key)
            arity = max((int(v[1:]) for v in p.variables()), default=0)
            text = str(p)
            for i in range(arity, 0, -1):
                text = text.replace(placeholder(i), f"x{i}")
            out.append(f"Pol({label}) = {text}")
        return out


def interpret(t: Term, pol: Mapping[SymbolKey, Poly] | Interpretation, _cache=None) -> Poly:
    """Compose symbol polynomials along ``t``; variables become polynomial variables."""
    if isinstance(pol, Interpretation):
        pol = pol.as_dict()
    if isinstance(t, Var):
        return Poly.var(t.name)
    key = (t.fn, t.annotated)
    if key not in pol:
        raise MissingSymbol(symbol_label(key))
    body = pol[key]
    if not t.args:
        return body
    return body.substitute(
        {placeholder(i): interpret(a, pol) for i, a in enumerate(t.args, 1)}
    )


def annotated_measure(r: Term, pol) -> Poly:
    """Σ Pol(t#) over the annotated subterms t of r."""
    total = Poly()
    for _, t in annotated_subterms(r):
        total = total + interpret(annotate_root(t), pol)
    return total


def expected_value(mu: MultiDistribution, pol, mode: str = "plain") -> Poly:
    total = Poly()
    for p, r in mu:
        if mode == "plain":
            total = total + interpret(flatten(r), pol) * p
        elif mode == "annotated-sum":
            total = total + annotated_measure(r, pol) * p
        else:
            raise ValueError(f"unknown mode {mode!r}")
    return total


def check_geq(p: Poly, q: Poly) -> bool:
    return all(c >= 0 for c in (p - q).terms.values())


def check_gt(p: Poly, q: Poly) -> bool:
    d = p - q
    return all(c >= 0 for c in d.terms.values()) and d.constant() >= 1


# ---------------------------------------------------------------------------
# reduction-pair constraints
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Inequality:
    """``lhs >= rhs`` (or ``>`` when strict), tagged with where it comes from."""

    condition: int  # 1, 2 or 3
    adp: int
    j: int | None
    lhs: Term | None
    rhs: tuple[tuple[Fraction, tuple[Term, ...]], ...]
    strict: bool = False

    def sides(self, pol) -> tuple[Poly, Poly]:
        left = interpret(self.lhs, pol)
        right = Poly()
        for p, ts in self.rhs:
            for t in ts:
                right = right + interpret(t, pol) * p
        return left, right

    def holds(self, pol) -> bool:
        left, right = self.sides(pol)
        return check_gt(left, right) if self.strict else check_geq(left, right)


def weak_inequalities(P) -> list[Inequality]:
    """Conditions (1) and (2) of the reduction-pair processor."""
    out = []
    for i, a in enumerate(P.adps):
        if a.flag:
            out.append(
                Inequality(1, i, None, a.lhs, tuple((p, (flatten(r),)) for p, r in a.rhs))
            )
    for i, a in enumerate(P.adps):
        if a.has_annotation:
            rhs = tuple(
                (p, tuple(annotate_root(t) for _, t in annotated_subterms(r))) for p, r in a.rhs
            )
            out.append(Inequality(2, i, None, annotate_root(a.lhs), rhs))
    return out


def strict_inequalities(P, i: int, j: int) -> list[Inequality]:
    """Condition (3) for support term j of ADP i."""
    a = P.adps[i]
    r = a.rhs.support[j]
    ts = tuple(annotate_root(t) for _, t in annotated_subterms(r))
    out = [Inequality(3, i, j, annotate_root(a.lhs), ((Fraction(1), ts),), strict=True)]
    if a.flag:
        out.append(Inequality(3, i, j, a.lhs, ((Fraction(1), (flatten(r),)),)))
    return out


def strict_candidates(P) -> list[tuple[int, int]]:
    return [
        (i, j)
        for i, a in enumerate(P.adps)
        if a.has_annotation
        for j in range(len(a.rhs))
    ]


def symbols_of_problem(P) -> dict[SymbolKey, int]:
    """Every (symbol, annotated) key an interpretation needs for ``P``, with arity."""
    out: dict[SymbolKey, int] = {}

    def plain(t: Term) -> None:
        if isinstance(t, App):
            out.setdefault((t.fn, False), len(t.args))
            for x in t.args:
                plain(x)

    for a in P.adps:
        plain(a.lhs)
        if a.has_annotation:
            out.setdefault((a.lhs.fn, True), len(a.lhs.args))
        for r in a.rhs.support:
            plain(flatten(r))
            for _, t in annotated_subterms(r):
                out.setdefault((t.fn, True), len(t.args))
    return out


def complete(pol: Mapping[SymbolKey, Poly], P) -> Interpretation:
    """Extend ``pol`` by the zero polynomial on every symbol of ``P`` it misses."""
    full = dict(pol)
    for key in symbols_of_problem(P):
        full.setdefault(key, Poly())
    return Interpretation.of(full)


def strict_set(P, pol) -> list[int]:
    """Indices of annotated ADPs with some support term whose strict inequalities hold."""
    out = []
    for i, a in enumerate(P.adps):
        if not a.has_annotation:
            continue
        if any(
            all(q.holds(pol) for q in strict_inequalities(P, i, j)) for j in range(len(a.rhs))
        ):
            out.append(i)
    return out


# ---------------------------------------------------------------------------
# search
# ---------------------------------------------------------------------------


def _template(key: SymbolKey, arity: int, cross_terms: bool) -> tuple[Poly, list[str]]:
    name, annotated = key
    tag = f"?{name}{'#' if annotated else ''}"
    monos: list[Monomial] = [()]
    monos += [((placeholder(i), 1),) for i in range(1, arity + 1)]
    if cross_terms and arity >= 2:
        max_size = arity if arity <= 3 else 2
        for size in range(2, max_size + 1):
            for combo in itertools.combinations(range(1, arity + 1), size):
                monos.append(tuple((placeholder(i), 1) for i in combo))
    poly = Poly()
    unknowns = []
    for k, m in enumerate(monos):
        u = f"{tag}:{k}"
        unknowns.append(u)
        poly = poly + Poly({m: Fraction(1)}) * Poly.var(u)
    return poly, unknowns


def _is_unknown(v: str) -> bool:
    return v.startswith("?")


class _Constraint:
    """Integer polynomial over unknown indices that must be >= ``lower``."""

    __slots__ = ("pos", "neg", "lower", "unknowns", "pos_of", "neg_only", "pos_with", "neg_with")

    def __init__(self, poly: Poly, lower: int, index: dict[str, int]):
        scale = lcm(*(c.denominator for c in poly.terms.values())) if poly.terms else 1
        monos = [
            (int(c * scale), tuple(index[v] for v, e in m for _ in range(e)))
            for m, c in poly.terms.items()
        ]
        self.pos = [m for m in monos if m[0] > 0]
        self.neg = [m for m in monos if m[0] < 0]
        self.lower = lower * scale
        self.unknowns = sorted({u for _, us in monos for u in us})
        self.pos_of = {u: [k for k, (_, us) in enumerate(self.pos) if u in us] for u in self.unknowns}
        in_neg = {u for _, us in self.neg for u in us}
        self.neg_only = {u for u in self.unknowns if not self.pos_of[u]}
        for u in in_neg - self.neg_only:
            self.pos_of[u] = None  # mixed sign: no cheap bound
        self.pos_with = {u: [m for m in self.pos if u in m[1]] for u in self.unknowns}
        self.neg_with = {u: [m for m in self.neg if u in m[1]] for u in self.unknowns}

    def value(self, at: list[int]) -> int:
        total = 0
        for c, us in self.pos + self.neg:
            for u in us:
                c *= at[u]
                if not c:
                    break
            total += c
        return total

    def narrowing_candidates(self, lo: list[int], hi: list[int]):
        """Best value and the open unknowns whose bounds this constraint may narrow."""
        pos_vals = []
        for c, us in self.pos:
            for w in us:
                c *= hi[w]
                if not c:
                    break
            pos_vals.append(c)
        total = sum(pos_vals)
        for c, us in self.neg:
            for w in us:
                c *= lo[w]
                if not c:
                    break
            total += c
        slack = total - self.lower
        out = []
        if slack < 0:
            return total, out
        for u in self.unknowns:
            if lo[u] == hi[u]:
                continue
            ks = self.pos_of[u]
            if ks is None:
                out.append(u)
            elif u in self.neg_only:
                neg = self.split(lo, hi, u)[1]
                if _horner(neg, hi[u]) - _horner(neg, lo[u]) < -slack:
                    out.append(u)
            elif sum(pos_vals[k] for k in ks) > slack:
                out.append(u)
        return total, out

    def split(self, lo: list[int], hi: list[int], u: int) -> tuple[list[int], list[int]]:
        """Monomials containing ``u`` as univariate polynomials in ``u``.

        The other unknowns are read at their best bound (hi in positive
        monomials, lo in negative ones).  Returns the coefficient lists of
        the positive and the negative part, indexed by the exponent of u.
        """
        parts = []
        for monos, at in ((self.pos_with[u], hi), (self.neg_with[u], lo)):
            coeffs = [0]
            for c, us in monos:
                e = 0
                for w in us:
                    if w == u:
                        e += 1
                    else:
                        c *= at[w]
                        if not c:
                            break
                if c:
                    while len(coeffs) <= e:
                        coeffs.append(0)
                    coeffs[e] += c
            parts.append(coeffs)
        return parts[0], parts[1]


def _horner(coeffs: list[int], v: int) -> int:
    out = 0
    for c in reversed(coeffs):
        out = out * v + c
    return out


def _constraints_from(inequalities: Iterable[Inequality], templates, index) -> list[_Constraint]:
    out = []
    for q in inequalities:
        left, right = q.sides(templates)
        diff = left - right
        for outer, coeff in diff.split(lambda v: not _is_unknown(v)).items():
            lower = 1 if (q.strict and outer == ()) else 0
            if not coeff.terms:
                if lower > 0:
                    out.append(_Constraint(Poly(), lower, index))
                continue
            out.append(_Constraint(coeff, lower, index))
    return out


@dataclass
class SearchStats:
    nodes: int = 0
    work: int = 0  # constraint visits during propagation
    exhausted_budget: bool = False
    deadline: float | None = None


def _dfs(constraints: list[_Constraint], n: int, top: int, budget: int, stats: SearchStats):
    """Depth-first search over coefficient bounds driven by violated constraints.

    Every unknown carries an interval [lo, hi], narrowed by bounds
    propagation after each decision; the tentative assignment reads every
    unknown at its lower bound.  Constraints that share no open unknown are
    solved independently.  Within a group the violated constraint with the
    fewest repair options is picked; branch k raises its k-th candidate above
    its lower bound and pins the earlier candidates to theirs.  The branches
    partition the remaining space, so the search is complete up to the
    budget (counted in constraint visits), and low-weight solutions come
    first.
    """
    if any(not c.unknowns and c.value([]) < c.lower for c in constraints):
        return None
    live = [c for c in constraints if c.unknowns]
    watch: list[list[_Constraint]] = [[] for _ in range(n)]
    # best values read positive monomials at hi and negative ones at lo, so
    # a lower hi only matters where u occurs positively, a higher lo only
    # where it occurs negatively
    watch_hi: list[list[_Constraint]] = [[] for _ in range(n)]
    watch_lo: list[list[_Constraint]] = [[] for _ in range(n)]
    for c in live:
        for u in c.unknowns:
            watch[u].append(c)
            if c.pos_with[u]:
                watch_hi[u].append(c)
            if c.neg_with[u]:
                watch_lo[u].append(c)
    lo = [0] * n
    hi = [top] * n
    trail: list[tuple[int, int, int]] = []

    def undo(mark: int) -> None:
        while len(trail) > mark:
            u, l, h = trail.pop()
            lo[u], hi[u] = l, h

    def narrow(u: int, l: int, h: int) -> bool:
        if (l, h) == (lo[u], hi[u]):
            return False
        trail.append((u, lo[u], hi[u]))
        lo[u], hi[u] = l, h
        return True

    def propagate(queue: list[_Constraint]) -> bool:
        pending = {id(c) for c in queue}
        while queue:
            c = queue.pop()
            pending.discard(id(c))
            stats.work += 1
            total, candidates = c.narrowing_candidates(lo, hi)
            if total < c.lower:
                return False
            for u in candidates:
                if lo[u] == hi[u]:
                    continue
                pos, neg = c.split(lo, hi, u)
                rest = total - _horner(pos, hi[u]) - _horner(neg, lo[u])
                ok = [
                    v
                    for v in range(lo[u], hi[u] + 1)
                    if rest + _horner(pos, v) + _horner(neg, v) >= c.lower
                ]
                if not ok:
                    return False
                was_lo, was_hi = lo[u], hi[u]
                if narrow(u, ok[0], ok[-1]):
                    total = rest + _horner(pos, hi[u]) + _horner(neg, lo[u])
                    affected = (watch_hi[u] if hi[u] < was_hi else []) + (
                        watch_lo[u] if lo[u] > was_lo else []
                    )
                    for d in affected:
                        if id(d) not in pending:
                            pending.add(id(d))
                            queue.append(d)
        return True

    def options(c: _Constraint) -> list[int]:
        out: list[int] = []
        for _, us in c.pos:
            if any(hi[u] == 0 for u in us):
                continue
            for u in us:
                if lo[u] < hi[u] and u not in out:
                    out.append(u)
        return out

    def groups(cs: list[_Constraint]) -> list[list[_Constraint]]:
        parent = list(range(n))

        def find(u: int) -> int:
            while parent[u] != u:
                parent[u] = parent[parent[u]]
                u = parent[u]
            return u

        opened = []
        for c in cs:
            free = [u for u in c.unknowns if lo[u] != hi[u]]
            opened.append(free)
            if len(free) > 1:
                root = find(free[0])
                for u in free[1:]:
                    r = find(u)
                    if r != root:
                        parent[r] = root
        buckets: dict[int, list[_Constraint]] = {}
        for c, free in zip(cs, opened):
            if free:
                buckets.setdefault(find(free[0]), []).append(c)
        return list(buckets.values())

    def solve(cs: list[_Constraint], spare: int) -> bool:
        parts = groups(cs)
        if len(parts) > 1:
            mark = len(trail)
            for part in parts:
                if not solve(part, spare):
                    undo(mark)
                    return False
            return True
        best = None
        for c in cs:
            gap = c.value(lo) - c.lower
            if gap >= 0:
                continue
            opts = options(c)
            if not opts:
                return False
            if best is None or (len(opts), gap) < best[0]:
                best = ((len(opts), gap), opts)
        if best is None:
            return True
        opts = best[1]
        first = True
        for k, u in enumerate(opts):
            for v in range(lo[u] + 1, hi[u] + 1):
                cost = 0 if first else 1
                first = False
                if cost > spare:
                    cut[0] = True
                    return False
                stats.nodes += 1
                if stats.work > budget or (
                    stats.deadline is not None
                    and stats.nodes % 256 == 0
                    and time.monotonic() > stats.deadline
                ):
                    stats.exhausted_budget = True
                    return False
                mark = len(trail)
                for w in opts[:k]:
                    narrow(w, lo[w], lo[w])
                narrow(u, v, v)
                touched = {id(c): c for w in opts[:k] for c in watch_hi[w]}
                touched.update((id(c), c) for c in watch[u])
                if propagate(list(touched.values())) and solve(cs, spare - cost):
                    return True
                undo(mark)
                if stats.exhausted_budget:
                    return False
        return False

    if not propagate(list(live)):
        return None
    cut = [False]
    # a few limited-discrepancy rounds (at most d departures from the
    # first-choice branch on any path), then one unrestricted pass
    for spare in (0, 1, 2, n * (top + 1)):
        cut[0] = False
        if solve(live, spare):
            return list(lo)
        if not cut[0] or stats.exhausted_budget:
            break
    return None


def search_interpretation(
    P,
    max_coeff: int = 2,
    budget: int = 1_000_000,
    stages: list[tuple[int, bool]] | None = None,
    deadline: float | None = None,
) -> Interpretation | None:
    """Find a natural-coefficient interpretation accepted by the reduction pair processor.

    Stages escalate from coefficient bound 1 over ``max_coeff`` (linear
    templates) to ``max_coeff + 1`` with multilinear cross terms.  For every
    stage each candidate strict pair (ADP, support index) is tried in order;
    the first solution found wins, so the result is deterministic.

    ``budget`` bounds the work of the whole call, counted in constraint
    visits during bounds propagation (roughly proportional to running
    time, but deterministic).  Each candidate
    gets an equal share of what is left, so an unsatisfiable candidate
    cannot starve the ones after it.  Once the monotonic clock passes
    ``deadline`` the search gives up and returns None.
    """
    if max_coeff < 1:
        raise ValueError("max_coeff must be at least 1")
    if stages is None:
        stages = [(1, False), (max_coeff, False), (max_coeff + 1, True)]
        stages = list(dict.fromkeys(stages))
    candidates = strict_candidates(P)
    if not candidates:
        return None
    weak = weak_inequalities(P)
    arities = symbols_of_problem(P)
    remaining = budget
    for top, cross in stages:
        templates: dict[SymbolKey, Poly] = {}
        unknowns: list[str] = []
        for key, arity in arities.items():
            poly, us = _template(key, arity, cross)
            templates[key] = poly
            unknowns.extend(us)
        index = {u: k for k, u in enumerate(unknowns)}
        base = _constraints_from(weak, templates, index)
        for pos, (i, j) in enumerate(candidates):
            if deadline is not None and time.monotonic() > deadline:
                return None
            extra = _constraints_from(strict_inequalities(P, i, j), templates, index)
            stats = SearchStats(deadline=deadline)
            share = remaining // (len(candidates) - pos)
            values = _dfs(base + extra, len(unknowns), top, share, stats)
            remaining -= min(stats.work, share)
            if values is None:
                continue
            env = {u: values[index[u]] for u in unknowns}
            found = {
                key: Poly(
                    {
                        m: c
                        for m, c in poly.substitute(
                            {u: Poly.const(env[u]) for u in poly.variables() if _is_unknown(u)}
                        ).terms.items()
                    }
                )
                for key, poly in templates.items()
            }
            pol = complete(found, P)
            if all(q.holds(pol) for q in weak) and strict_set(P, pol):
                return pol
    return None

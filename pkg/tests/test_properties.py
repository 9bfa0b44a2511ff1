"""Property-based checks; every property runs on at least 500 generated cases."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from artifact.adp import ADP, ADPProblem, StepCase, adp_steps, make_adp
from artifact.polysolve import (
    Interpretation,
    Poly,
    check_geq,
    check_gt,
    complete,
    interpret,
    strict_inequalities,
    symbols_of_problem,
    weak_inequalities,
)
from artifact.processors import (
    ConditionViolated,
    EmptyStrictSet,
    dependency_graph,
    proc_dependency_graph,
    proc_reduction_pair,
    proc_usable_rules,
    proc_usable_terms,
)
from artifact.ptrs import (
    ExtraVariableError,
    MultiDistribution,
    PTRS,
    ProbabilitySumError,
    is_anf,
    is_nf,
    make_rule,
)
from artifact.terms import (
    App,
    Symbol,
    Var,
    annotate,
    annotated_positions,
    cap,
    flatten,
    match,
    positions,
    replace_at,
    strip_above,
    substitute,
    subterm_at,
    unify,
    variables,
)
from artifact.transforms import (
    ProcessorError,
    overlap_targets,
    proc_rewriting,
    proc_rule_overlap_instantiation,
    rewrite_targets,
)

import oracles

MANY = settings(
    max_examples=500,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)

CONSTS = ("a", "b")
UNARY = ("s",)
DEFINED = {"f": 1, "g": 1, "k": 0}
UNIVERSE = oracles.ground_terms(CONSTS, UNARY, 2)


# generators ---------------------------------------------------------------------------


@st.composite
def terms(draw, names=("x", "y", "z"), depth=3, defined=("f", "g", "k"), annotated=(), binary=True):
    """Terms over a, b, s, optionally c/2 and the given defined symbols.

    Symbols listed in ``annotated`` may carry an annotation.
    """
    choices = ["const"]
    if names:
        choices.append("var")
    if depth > 0:
        choices += ["unary", "defined"] + (["binary"] if binary else [])
    kind = draw(st.sampled_from(choices))
    if kind == "var":
        return Var(draw(st.sampled_from(names)))
    if kind == "const":
        return App(draw(st.sampled_from(CONSTS)))
    sub = terms(names, depth - 1, defined, annotated, binary)
    if kind == "unary":
        return App("s", [draw(sub)])
    if kind == "binary":
        return App("c", [draw(sub), draw(sub)])
    if not defined:
        return App(draw(st.sampled_from(CONSTS)))
    fn = draw(st.sampled_from(defined))
    anno = fn in annotated and draw(st.booleans())
    return App(fn, [draw(sub) for _ in range(DEFINED[fn])], anno)


def patterns(names=("x",)):
    return terms(names, depth=2, defined=(), binary=False)


@st.composite
def adp_problems(draw, max_rules=3, redex=False):
    """Small ADP problems; ``redex`` prepends k -> {..., F(g(...)), ...} style ADPs."""
    n = draw(st.integers(1, max_rules))
    lhss = [App("k")] if redex else []
    for _ in range(n):
        fn = draw(st.sampled_from(sorted(DEFINED)))
        lhss.append(App(fn, [draw(patterns())]) if DEFINED[fn] else App(fn))
    roots = tuple(sorted({l.fn for l in lhss}))
    adps = []
    if redex:
        unary_roots = [r for r in roots if DEFINED[r]] or ["k"]
        seeded = []
        for p in (Fraction(1, 2), Fraction(1, 2)):
            inner = draw(terms((), depth=2, annotated=roots))
            inner = App(draw(st.sampled_from(unary_roots)), [inner]) if DEFINED.get(unary_roots[0]) else App("k")
            outer = draw(st.sampled_from(unary_roots))
            seeded.append((p, App(outer, [inner], True) if DEFINED.get(outer) else App("k", (), True)))
        adps.append(make_adp(App("k"), seeded, flag=True))
        lhss = lhss[1:]
    for lhs in lhss:
        names = tuple(variables(lhs))
        probs = draw(st.sampled_from([(1,), (Fraction(1, 2), Fraction(1, 2)), (Fraction(1, 3), Fraction(2, 3))]))
        rhs = [
            (p, draw(terms(names, depth=3, defined=("f", "g", "k"), annotated=roots)))
            for p in probs
        ]
        adps.append(make_adp(lhs, rhs, flag=draw(st.booleans()) or draw(st.booleans())))
    return ADPProblem(tuple(adps))


def flat_rules(P: ADPProblem):
    """Rule-for-rule view of a problem that ignores annotations and flags."""
    return [(a.lhs, a.rhs.flatten()) for a in P.adps]


@st.composite
def interpretations(draw, P: ADPProblem, top=2):
    pol = {}
    for key, arity in symbols_of_problem(P).items():
        poly = Poly.const(draw(st.integers(0, top)))
        for i in range(1, arity + 1):
            poly = poly + Poly.var(f"${i}") * draw(st.integers(0, top))
        pol[key] = poly
    return Interpretation.of(pol)


@st.composite
def polys(draw, names=("x", "y")):
    p = Poly.const(draw(st.integers(0, 3)))
    for v in names:
        p = p + Poly.var(v) * draw(st.integers(0, 3))
    if draw(st.booleans()):
        p = p + Poly.var(names[0]) * Poly.var(names[1]) * draw(st.integers(0, 2))
    return p


# terms ------------------------------------------------------------------------------------


@MANY
@given(terms(annotated=("f", "g", "k")))
def test_annotate_flatten_round_trip(t):
    assert annotate(flatten(t), annotated_positions(t)) == t
    assert flatten(flatten(t)) == flatten(t)
    assert annotated_positions(flatten(t)) == set()


@MANY
@given(terms(annotated=("f", "g", "k")), st.data())
def test_strip_above_removes_exactly_proper_prefixes(t, data):
    pos = data.draw(st.sampled_from(list(positions(t))))
    kept = annotated_positions(strip_above(t, pos))
    expected = {q for q in annotated_positions(t) if not (len(q) < len(pos) and pos[: len(q)] == q)}
    assert kept == expected
    assert flatten(strip_above(t, pos)) == flatten(t)


@MANY
@given(terms(annotated=("f", "g")), terms(annotated=("f", "g")))
def test_unify_agrees_with_robinson(s, t):
    ours, ref = unify(s, t), oracles.robinson(s, t)
    assert (ours is None) == (ref is None)
    if ours is not None:
        u = substitute(s, ours)
        assert u == substitute(t, ours)
        v = oracles.subst(s, ref)
        # both are most general: each image is an instance of the other
        assert oracles.instance_of(u, v) and oracles.instance_of(v, u)


@MANY
@given(
    terms(("x", "y"), depth=3, defined=(), binary=False),
    terms(("x", "y"), depth=3, defined=(), binary=False),
)
def test_unify_complete_against_ground_search(s, t):
    ground = oracles.ground_terms(CONSTS, UNARY, 3)
    witness = any(
        oracles.subst(s, g) == oracles.subst(t, g)
        for g in oracles.ground_substitutions(["x", "y"], ground)
    )
    sigma = unify(s, t)
    if witness:
        assert sigma is not None
    if sigma is not None:
        fill = {v: App("a") for v in ("x", "y")}
        assert substitute(substitute(s, sigma), fill) == substitute(substitute(t, sigma), fill)


@MANY
@given(terms(annotated=("f", "g", "k")), st.booleans())
def test_cap_generalises(t, protect):
    defined = {Symbol("f", 1), Symbol("k", 0)}
    c = cap(t, defined, protect_root=protect)
    assert match(c, t) is not None
    for pos in positions(c):
        s = subterm_at(c, pos)
        if isinstance(s, App) and s.symbol in defined:
            assert pos == () and protect


@MANY
@given(terms(), st.data())
def test_replace_then_read_back(t, data):
    pos = data.draw(st.sampled_from(list(positions(t))))
    new = App("b")
    assert subterm_at(replace_at(t, pos, new), pos) == new


# distributions and rules -------------------------------------------------------------------


@MANY
@given(st.lists(st.integers(1, 20), min_size=1, max_size=5), st.integers(0, 3))
def test_distributions_sum_to_one(weights, skew):
    total = sum(weights)
    probs = [Fraction(w, total) for w in weights]
    mu = MultiDistribution(tuple((p, App("a")) for p in probs))
    assert sum(mu.probabilities) == 1
    if skew:
        bad = [probs[0] + Fraction(skew, 100)] + probs[1:]
        with pytest.raises(ProbabilitySumError):
            MultiDistribution(tuple((p, App("a")) for p in bad))


@MANY
@given(patterns(("x", "y")), terms(("x", "y", "z"), depth=2))
def test_rule_variable_condition(lhs, rhs):
    lhs = App("f", [lhs])
    ok = set(variables(rhs)) <= set(variables(lhs))
    if ok:
        assert make_rule(lhs, rhs).lhs == lhs
    else:
        with pytest.raises(ExtraVariableError):
            make_rule(lhs, rhs)


@MANY
@given(adp_problems(), terms())
def test_nf_implies_anf(P, t):
    R = PTRS(tuple(make_rule(a.lhs, a.rhs.flatten()) for a in P.adps))
    if is_nf(t, R):
        assert is_anf(t, R)
    assert is_nf(t, R) == (not oracles.reducible(t, [(a.lhs, []) for a in P.adps]))


# ADP steps ------------------------------------------------------------------------------------


@MANY
@given(adp_problems(), st.data())
def test_adp_steps_replay(P, data):
    roots = tuple(sorted({a.lhs.fn for a in P.adps}))
    s = data.draw(terms((), depth=3, annotated=roots))
    for step in adp_steps(s, P):
        sub = subterm_at(s, step.position)
        assert step.case is StepCase.of(sub.annotated, step.adp.flag)
        assert oracles._matches(step.adp.lhs, flatten(sub)) is not None
        for sigma_image in step.sigma.values():
            assert not annotated_positions(sigma_image)
        assert sum(step.result.probabilities) == 1
        for (p, r), (q, u) in zip(step.adp.rhs, step.result):
            assert p == q
            expected = replace_at(flatten(s), step.position, oracles.subst(flatten(r), step.sigma))
            assert flatten(u) == expected
            if step.case in (StepCase.P, StepCase.IRR):
                assert not any(
                    len(q2) < len(step.position) and step.position[: len(q2)] == q2
                    for q2 in annotated_positions(u)
                )


# processors -----------------------------------------------------------------------------------


@MANY
@given(adp_problems())
def test_dependency_graph_contains_brute_force_edges(P):
    found = dependency_graph(P).edges
    assert oracles.brute_force_edges(P, UNIVERSE, steps=3) <= found


@MANY
@given(adp_problems())
def test_dependency_graph_sources_carry_annotations(P):
    for i, _ in dependency_graph(P).edges:
        assert P.adps[i].has_annotation


@MANY
@given(adp_problems())
def test_processors_preserve_flattened_rules(P):
    for res in (proc_dependency_graph(P), proc_usable_terms(P), proc_usable_rules(P)):
        for child in res.children:
            assert flat_rules(child) == flat_rules(P)


@MANY
@given(adp_problems())
def test_usable_terms_and_rules_idempotent(P):
    (once,) = proc_usable_terms(P).children
    assert proc_usable_terms(once).children == [once]
    (once,) = proc_usable_rules(P).children
    assert proc_usable_rules(once).children == [once]


def _recheck(P: ADPProblem, pol: Interpretation) -> list[int] | None:
    """Independent statement of the three reduction-pair conditions."""
    for i, a in enumerate(P.adps):
        exp = Poly()
        ann = Poly()
        for p, r in a.rhs:
            exp = exp + interpret(flatten(r), pol) * p
            for pos in annotated_positions(r):
                ann = ann + interpret(App(subterm_at(r, pos).fn, flatten(subterm_at(r, pos)).args, True), pol) * p
        if a.flag and not check_geq(interpret(a.lhs, pol), exp):
            return None
        if a.has_annotation and not check_geq(interpret(App(a.lhs.fn, a.lhs.args, True), pol), ann):
            return None
    strict = []
    for i, a in enumerate(P.adps):
        if not a.has_annotation:
            continue
        top = interpret(App(a.lhs.fn, a.lhs.args, True), pol)
        for r in a.rhs.support:
            ann = Poly()
            for pos in annotated_positions(r):
                u = subterm_at(r, pos)
                ann = ann + interpret(App(u.fn, flatten(u).args, True), pol)
            if check_gt(top, ann) and (not a.flag or check_geq(interpret(a.lhs, pol), interpret(flatten(r), pol))):
                strict.append(i)
                break
    return strict or None


@MANY
@given(adp_problems(), st.data())
def test_reduction_pair_matches_recheck(P, data):
    pol = data.draw(interpretations(P))
    expected = _recheck(P, pol)
    try:
        res = proc_reduction_pair(P, pol)
    except (ConditionViolated, EmptyStrictSet):
        assert expected is None
        return
    assert res.justification["strict"] == expected
    (child,) = res.children
    assert flat_rules(child) == flat_rules(P)
    for i, a in enumerate(child.adps):
        assert a.has_annotation == (P.adps[i].has_annotation and i not in expected)


@MANY
@given(adp_problems(), st.data())
def test_generated_inequalities_hold_iff_accepted(P, data):
    pol = data.draw(interpretations(P))
    weak_ok = all(q.holds(pol) for q in weak_inequalities(P))
    strict_ok = any(
        all(q.holds(pol) for q in strict_inequalities(P, i, j))
        for i, a in enumerate(P.adps)
        if a.has_annotation
        for j in range(len(a.rhs))
    )
    try:
        proc_reduction_pair(P, pol)
        accepted = True
    except (ConditionViolated, EmptyStrictSet):
        accepted = False
    assert accepted == (weak_ok and strict_ok)


# polynomials --------------------------------------------------------------------------------------


@MANY
@given(polys(), polys(), st.integers(0, 2**31))
def test_check_geq_sound_on_samples(p, q, seed):
    rng = random.Random(seed)
    samples = [{"x": rng.randint(0, 50), "y": rng.randint(0, 50)} for _ in range(200)]
    if check_geq(p, q):
        assert all(p.evaluate(e) >= q.evaluate(e) for e in samples)
    if check_gt(p, q):
        assert all(p.evaluate(e) > q.evaluate(e) for e in samples)


@MANY
@given(adp_problems(), st.data())
def test_interpret_monotone(P, data):
    pol = data.draw(interpretations(P))
    t = flatten(P.adps[0].rhs.support[0])
    names = sorted(set(variables(t)) | {"x"})
    env = {v: data.draw(st.integers(0, 5)) for v in names}
    value = interpret(t, pol)
    bumped = dict(env)
    bumped[data.draw(st.sampled_from(names))] += data.draw(st.integers(1, 5))
    assert value.evaluate(bumped) >= value.evaluate(env)
    assert all(c >= 0 for c in value.terms.values())


# transforms -------------------------------------------------------------------------------------------


@MANY
@given(adp_problems(redex=True))
def test_rewriting_preserves_mass(P):
    for i, a in enumerate(P.adps):
        if not a.has_annotation:
            continue
        for j, tau in rewrite_targets(P, i)[:2]:
            try:
                res = proc_rewriting(P, i, j, tau)
            except ProcessorError:
                continue
            (child,) = res.children
            for b in child.adps:
                assert sum(b.rhs.probabilities) == 1
            assert a.flatten() in child.adps


@MANY
@given(adp_problems())
def test_rule_overlap_children_are_instances(P):
    for i, a in enumerate(P.adps):
        for j, pos in overlap_targets(P, i)[:2]:
            res = proc_rule_overlap_instantiation(P, i, j, pos)
            (child,) = res.children
            others = [b for k, b in enumerate(P.adps) if k != i]
            for b in child.adps:
                if b in others:
                    continue
                sigma = match(a.lhs, b.lhs)
                assert sigma is not None
                assert b.flag == a.flag
                for r_old, r_new in zip(a.rhs.support, b.rhs.support):
                    assert substitute(flatten(r_old), sigma) == flatten(r_new)

"""Text and machine (JSON) renderings of verdicts and proof trees.

Fresh variables introduced during proof search are renamed per ADP before
printing, so identical inputs give byte-identical proofs.
"""

from __future__ import annotations

import json
from typing import Any

from .adp import ADP, ADPProblem
from .engine import SOLVED, ProofNode, Verdict
from .polysolve import Interpretation
from .terms import Term, Var, format_position, substitute, variables


def _display_renaming(terms: list[Term]) -> dict[str, Term]:
    names: list[str] = []
    for t in terms:
        for v in variables(t):
            if v not in names:
                names.append(v)
    taken = {v for v in names if not v.startswith("_")}
    out: dict[str, Term] = {}
    k = 1
    for v in names:
        if not v.startswith("_"):
            continue
        while f"v{k}" in taken:
            k += 1
        out[v] = Var(f"v{k}")
        taken.add(f"v{k}")
    return out


def adp_text(a: ADP) -> str:
    return str(a.substitute(_display_renaming([a.lhs, *a.rhs.support])))


def term_text(t: Term) -> str:
    return str(substitute(t, _display_renaming([t])))


def substitution_text(sigma: dict[str, Term], lhs: Term | None = None) -> str:
    keys = variables(lhs) if lhs is not None else sorted(sigma)
    shown = [(v, sigma[v]) for v in keys if v in sigma and sigma[v] != Var(v)]
    ren = _display_renaming([t for _, t in shown])
    return "{" + ", ".join(f"{v}/{substitute(t, ren)}" for v, t in shown) + "}"


def _json_justification(node: ProofNode) -> dict[str, Any]:
    """Justification payload with 1-based ADP indices and printed terms."""
    j = node.justification
    p = node.processor
    if p == "dependency graph":
        return {
            "edges": [[a + 1, b + 1] for a, b in j["edges"]],
            "sccs": [[i + 1 for i in c] for c in j["sccs"]],
        }
    if p == "usable terms":
        return {
            "removed": [
                {"adp": i + 1, "term": k + 1, "position": format_position(pos)}
                for i, k, pos in j["removed"]
            ]
        }
    if p == "usable rules":
        return {
            "usable": [i + 1 for i in j["usable"]],
            "deflagged": [i + 1 for i in j["deflagged"]],
        }
    if p == "reduction pair":
        pol: Interpretation = j["interpretation"]
        return {
            "interpretation": {
                line.split(" = ")[0][4:-1]: line.split(" = ")[1] for line in pol.render()
            },
            "strict": [i + 1 for i in j["strict"]],
        }
    if p == "probability removal":
        return {
            "dependency_pairs": [[term_text(l), term_text(r)] for l, r in j["dependency_pairs"]],
            "rules": [f"{term_text(r.lhs)} -> {r.rhs}" for r in j["rules"]],
        }
    out: dict[str, Any] = {"adp": j["adp"] + 1}
    if "j" in j:
        out["term"] = j["j"] + 1
        out["position"] = format_position(j["position"])
    if "rule" in j:
        out["rule"] = j["rule"] + 1
        out["condition"] = j["condition"]
    if "instances" in j:
        out["instances"] = [term_text(t) for t in j["instances"]]
    if "substitutions" in j:
        out["substitutions"] = [substitution_text(s) for s in j["substitutions"]]
    return out


def _justification_lines(node: ProofNode) -> list[str]:
    j = node.justification
    p = node.processor
    n = lambda i: i + 1  # noqa: E731 - 1-based ADP numbers in output
    if p == "dependency graph":
        sccs = ", ".join("{" + ", ".join(str(n(i)) for i in c) + "}" for c in j["sccs"])
        edges = ", ".join(f"{n(a)}->{n(b)}" for a, b in j["edges"])
        return [f"edges: {edges or 'none'}", f"SCCs: {sccs or 'none'}"]
    if p == "usable terms":
        return [
            f"removed annotation of ADP {n(i)}, term {n(k)}, position {format_position(pos)}"
            for i, k, pos in j["removed"]
        ]
    if p == "usable rules":
        return [f"flag set to false: {', '.join(str(n(i)) for i in j['deflagged'])}"]
    if p == "reduction pair":
        return j["interpretation"].render() + [
            f"strictly decreasing: {', '.join(str(n(i)) for i in j['strict'])}"
        ]
    if p == "probability removal":
        return ["classical mode; dependency pairs:"] + [
            f"  {term_text(l)} -> {term_text(r)}" for l, r in j["dependency_pairs"]
        ]
    if p == "rewriting":
        return [
            f"ADP {n(j['adp'])}, term {n(j['j'])}, position {format_position(j['position'])}, "
            f"rule {n(j['rule'])}, side condition {j['condition']}"
        ]
    if p in ("instantiation", "forward instantiation"):
        inst = ", ".join(term_text(t) for t in j["instances"]) or "none"
        return [f"ADP {n(j['adp'])}; instances: {inst}"]
    if p == "rule overlap instantiation":
        subs = ", ".join(substitution_text(s) for s in j["substitutions"]) or "none"
        return [
            f"ADP {n(j['adp'])}, term {n(j['j'])}, position {format_position(j['position'])}; "
            f"narrowing substitutions: {subs}"
        ]
    return []


def problem_lines(P: ADPProblem, indent: str) -> list[str]:
    return [f"{indent}[{k}] {adp_text(a)}" for k, a in enumerate(P.adps, 1)]


def render_text(v: Verdict) -> str:
    if v.yes:
        head = "YES (almost-surely innermost terminating)"
    else:
        head = "MAYBE"
    lines = [head]
    if v.proof is not None and v.yes:
        root = v.proof
        if root.processor == SOLVED:
            lines.append("trivially iAST: no annotations")
            return "\n".join(lines) + "\n"
        lines.append("Canonical ADPs:")
        lines.extend(problem_lines(root.problem, "  "))
        counter = [0]

        def emit(node: ProofNode, indent: str) -> None:
            if node.processor == SOLVED:
                return
            counter[0] += 1
            lines.append(f"{indent}{counter[0]}. {node.processor}")
            lines.extend(f"{indent}   {x}" for x in _justification_lines(node))
            for child in node.children:
                if child.processor == SOLVED:
                    lines.append(f"{indent}   result: no annotations left")
                else:
                    lines.append(f"{indent}   result:")
                    lines.extend(problem_lines(child.problem, indent + "     "))
            deeper = indent + ("  " if len(node.children) > 1 else "")
            for child in node.children:
                emit(child, deeper)

        emit(root, "")
    else:
        lines.append("failure trace:")
        lines.extend(f"  {t}" for t in v.trace)
    return "\n".join(lines) + "\n"


def _node_json(node: ProofNode) -> dict:
    return {
        "processor": node.processor,
        "problem": [adp_text(a) for a in node.problem.adps],
        "classical": node.problem.classical,
        "justification": {} if node.processor == SOLVED else _json_justification(node),
        "children": [_node_json(c) for c in node.children],
    }


def render_machine(v: Verdict) -> str:
    doc = {
        "verdict": v.answer,
        "timed_out": v.timed_out,
        "trace": v.trace,
        "proof": _node_json(v.proof) if v.proof is not None and v.yes else None,
    }
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def render_proof(v: Verdict, fmt: str = "text") -> str:
    if fmt == "text":
        return render_text(v)
    if fmt == "machine":
        return render_machine(v)
    raise ValueError(f"unknown proof format {fmt!r}")

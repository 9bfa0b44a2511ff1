"""First-order terms whose defined-symbol occurrences carry an annotation bit.

Terms are immutable.  ``Var`` and ``App`` cache their hash and size so that
they can be used as dictionary keys and compared cheaply.  Positions are
tuples of 1-based argument indices; the empty tuple is the root.
"""

from __future__ import annotations

import itertools
import threading
from typing import Iterable, Iterator, Mapping, NamedTuple, Union

Position = tuple[int, ...]
Substitution = dict[str, "Term"]

ROOT: Position = ()


class Symbol(NamedTuple):
    name: str
    arity: int

    def __str__(self) -> str:
        return f"{self.name}/{self.arity}"


class InvalidPosition(ValueError):
    pass


class PositionNotDefined(ValueError):
    """Raised when an annotation is requested on a non-defined symbol."""


# ---------------------------------------------------------------------------
# term classes
# ---------------------------------------------------------------------------


class Var:
    __slots__ = ("name", "_hash")

    size = 1
    has_annotation = False
    is_var = True

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("V", name))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        return isinstance(other, Var) and other.name == self.name

    def __repr__(self) -> str:
        return f"Var({self.name!r})"

    def __str__(self) -> str:
        return self.name

    def __reduce__(self):
        return (Var, (self.name,))


class App:
    __slots__ = ("fn", "args", "annotated", "size", "has_annotation", "_hash")

    is_var = False

    def __init__(self, fn: str, args: Iterable[Term] = (), annotated: bool = False):
        args = tuple(args)
        self.fn = fn
        self.args = args
        self.annotated = annotated
        self.size = 1 + sum(a.size for a in args)
        self.has_annotation = annotated or any(a.has_annotation for a in args)
        self._hash = hash((fn, annotated, args))

    @property
    def symbol(self) -> Symbol:
        return Symbol(self.fn, len(self.args))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, App) or other._hash != self._hash:
            return False
        return (
            other.fn == self.fn
            and other.annotated == self.annotated
            and other.args == self.args
        )

    def __repr__(self) -> str:
        return f"App({self.fn!r}, {self.args!r}, annotated={self.annotated})"

    def __str__(self) -> str:
        head = self.fn + ("#" if self.annotated else "")
        if not self.args:
            return head
        return head + "(" + ",".join(str(a) for a in self.args) + ")"

    def __reduce__(self):
        return (App, (self.fn, self.args, self.annotated))


Term = Union[Var, App]


def const(name: str) -> App:
    return App(name, ())


def root_symbol(t: Term) -> Symbol | None:
    return None if isinstance(t, Var) else t.symbol


# ---------------------------------------------------------------------------
# positions
# ---------------------------------------------------------------------------


def positions(t: Term) -> Iterator[Position]:
    """All positions of ``t`` in pre-order (parents before children, left to right)."""
    stack: list[tuple[Position, Term]] = [((), t)]
    while stack:
        pos, s = stack.pop()
        yield pos
        if isinstance(s, App):
            for i in range(len(s.args), 0, -1):
                stack.append((pos + (i,), s.args[i - 1]))


def subterm_at(t: Term, pos: Position) -> Term:
    for i in pos:
        if isinstance(t, Var) or not 1 <= i <= len(t.args):
            raise InvalidPosition(f"position {format_position(pos)} not in term")
        t = t.args[i - 1]
    return t


def replace_at(t: Term, pos: Position, s: Term) -> Term:
    if not pos:
        return s
    i = pos[0]
    if isinstance(t, Var) or not 1 <= i <= len(t.args):
        raise InvalidPosition(f"position {format_position(pos)} not in term")
    args = list(t.args)
    args[i - 1] = replace_at(args[i - 1], pos[1:], s)
    return App(t.fn, args, t.annotated)


def format_position(pos: Position) -> str:
    return ".".join(str(i) for i in pos) if pos else "ε"


def is_prefix(p: Position, q: Position) -> bool:
    return len(p) <= len(q) and q[: len(p)] == p


# ---------------------------------------------------------------------------
# variables
# ---------------------------------------------------------------------------


def variables(t: Term) -> list[str]:
    """Variable names of ``t`` in order of first occurrence."""
    seen: dict[str, None] = {}
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, Var):
            seen.setdefault(s.name)
        else:
            stack.extend(reversed(s.args))
    return list(seen)


def variable_occurrences(t: Term) -> list[str]:
    out = []
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, Var):
            out.append(s.name)
        else:
            stack.extend(reversed(s.args))
    return out


def is_ground(t: Term) -> bool:
    return not variables(t)


# ---------------------------------------------------------------------------
# annotations
# ---------------------------------------------------------------------------


def flatten(t: Term) -> Term:
    """Remove every annotation."""
    if not t.has_annotation:
        return t
    return App(t.fn, [flatten(a) for a in t.args], False)


def annotated_positions(t: Term) -> set[Position]:
    out: set[Position] = set()

    def walk(s: Term, pos: Position) -> None:
        if not s.has_annotation:
            return
        if s.annotated:
            out.add(pos)
        for i, a in enumerate(s.args, 1):
            walk(a, pos + (i,))

    walk(t, ())
    return out


def annotate(
    t: Term, phi: Iterable[Position], defined: Iterable[Symbol] | None = None
) -> Term:
    """Annotate exactly the positions in ``phi``; all other annotations are removed.

    With ``defined`` given, every position in ``phi`` must root one of those symbols.
    """
    phi = set(phi)
    defined = None if defined is None else set(defined)

    def go(s: Term, pos: Position) -> Term:
        if isinstance(s, Var):
            if pos in phi:
                raise PositionNotDefined(f"position {format_position(pos)} is a variable")
            return s
        mark = pos in phi
        if mark and defined is not None and s.symbol not in defined:
            raise PositionNotDefined(
                f"position {format_position(pos)} roots non-defined symbol {s.fn}"
            )
        args = [go(a, pos + (i,)) for i, a in enumerate(s.args, 1)]
        return App(s.fn, args, mark)

    for p in phi:
        subterm_at(t, p)
    return go(t, ())


def annotate_defined(t: Term, defined: Iterable[Symbol]) -> Term:
    """Annotate every occurrence of a defined symbol."""
    defined = set(defined)

    def go(s: Term) -> Term:
        if isinstance(s, Var):
            return s
        return App(s.fn, [go(a) for a in s.args], s.symbol in defined)

    return go(t)


def annotate_root(t: Term) -> Term:
    """Annotate only the root (the term must be rooted by a function symbol)."""
    if isinstance(t, Var):
        raise PositionNotDefined("cannot annotate a variable")
    return App(t.fn, [flatten(a) for a in t.args], True)


def strip_above(t: Term, pos: Position) -> Term:
    """Remove annotations at positions that are proper prefixes of ``pos``."""
    subterm_at(t, pos)

    def go(s: Term, depth: int) -> Term:
        if depth == len(pos) or isinstance(s, Var):
            return s
        i = pos[depth]
        args = list(s.args)
        args[i - 1] = go(args[i - 1], depth + 1)
        return App(s.fn, args, False)

    return go(t, 0)


def annotated_subterms(t: Term) -> list[tuple[Position, Term]]:
    """Annotated positions in pre-order with the flattened subterm found there."""
    out = []

    def walk(s: Term, pos: Position) -> None:
        if not s.has_annotation:
            return
        if s.annotated:
            out.append((pos, flatten(s)))
        for i, a in enumerate(s.args, 1):
            walk(a, pos + (i,))

    walk(t, ())
    return out


# ---------------------------------------------------------------------------
# substitutions
# ---------------------------------------------------------------------------


def substitute(t: Term, sigma: Mapping[str, Term]) -> Term:
    if not sigma:
        return t
    if isinstance(t, Var):
        return sigma.get(t.name, t)
    if not t.args:
        return t
    args = [substitute(a, sigma) for a in t.args]
    if all(x is y for x, y in zip(args, t.args)):
        return t
    return App(t.fn, args, t.annotated)


def compose(sigma: Mapping[str, Term], theta: Mapping[str, Term]) -> Substitution:
    """Substitution equal to applying ``sigma`` first, then ``theta``."""
    out = {v: substitute(t, theta) for v, t in sigma.items()}
    for v, t in theta.items():
        out.setdefault(v, t)
    return {v: t for v, t in out.items() if not (isinstance(t, Var) and t.name == v)}


def is_renaming(sigma: Mapping[str, Term], names: Iterable[str]) -> bool:
    """True iff ``sigma`` maps the given variables injectively to variables."""
    images = []
    for v in names:
        t = sigma.get(v, Var(v))
        if not isinstance(t, Var):
            return False
        images.append(t.name)
    return len(set(images)) == len(images)


def match(pattern: Term, subject: Term, sigma: Substitution | None = None) -> Substitution | None:
    """Return σ with pattern·σ = subject, or None.  Annotation bits must agree."""
    sigma = dict(sigma) if sigma else {}
    stack = [(pattern, subject)]
    while stack:
        p, s = stack.pop()
        if isinstance(p, Var):
            bound = sigma.get(p.name)
            if bound is None:
                sigma[p.name] = s
            elif bound != s:
                return None
            continue
        if (
            isinstance(s, Var)
            or p.fn != s.fn
            or p.annotated != s.annotated
            or len(p.args) != len(s.args)
        ):
            return None
        stack.extend(zip(p.args, s.args))
    return sigma


def unify(s: Term, t: Term) -> Substitution | None:
    """Most general unifier with occurs check; the result is idempotent."""
    sigma: Substitution = {}

    def walk(u: Term) -> Term:
        while isinstance(u, Var) and u.name in sigma:
            u = sigma[u.name]
        return u

    def occurs(name: str, u: Term) -> bool:
        stack = [u]
        while stack:
            w = walk(stack.pop())
            if isinstance(w, Var):
                if w.name == name:
                    return True
            else:
                stack.extend(w.args)
        return False

    stack = [(s, t)]
    while stack:
        a, b = stack.pop()
        a, b = walk(a), walk(b)
        if a is b or a == b:
            continue
        if isinstance(a, Var):
            if occurs(a.name, b):
                return None
            sigma[a.name] = b
        elif isinstance(b, Var):
            if occurs(b.name, a):
                return None
            sigma[b.name] = a
        elif a.fn != b.fn or a.annotated != b.annotated or len(a.args) != len(b.args):
            return None
        else:
            stack.extend(zip(a.args, b.args))

    def resolve(u: Term) -> Term:
        u = walk(u)
        if isinstance(u, Var) or not u.args:
            return u
        return App(u.fn, [resolve(x) for x in u.args], u.annotated)

    return {v: resolve(Var(v)) for v in sigma}


# ---------------------------------------------------------------------------
# fresh variables, renaming, Cap
# ---------------------------------------------------------------------------

_fresh_counter = itertools.count()
_fresh_lock = threading.Lock()


def fresh_var() -> Var:
    with _fresh_lock:
        n = next(_fresh_counter)
    return Var(f"_v{n}")


def fresh_renaming(names: Iterable[str]) -> Substitution:
    return {v: fresh_var() for v in names}


def rename_fresh(obj):
    """Variable-renamed copy of a term, or of any object with ``variables()`` and ``substitute()``."""
    if isinstance(obj, (Var, App)):
        return substitute(obj, fresh_renaming(variables(obj)))
    return obj.substitute(fresh_renaming(obj.variables()))


def cap(t: Term, defined: Iterable[Symbol], protect_root: bool = False) -> Term:
    """Replace every maximal subterm rooted by a defined symbol with a distinct fresh variable.

    With ``protect_root`` the root symbol itself is kept and only its
    arguments are abstracted.
    """
    defined = set(defined)

    def go(s: Term) -> Term:
        if isinstance(s, Var):
            return s
        if s.symbol in defined:
            return fresh_var()
        if not s.args:
            return s
        return App(s.fn, [go(a) for a in s.args], s.annotated)

    if protect_root and isinstance(t, App):
        return App(t.fn, [go(a) for a in t.args], t.annotated)
    return go(t)


def cap_all(t: Term, protect_root: bool = True) -> Term:
    """Replace every proper subterm (variables included) with a fresh variable."""
    if isinstance(t, Var) or not protect_root:
        return fresh_var()
    return App(t.fn, [fresh_var() for _ in t.args], t.annotated)


def linearize(t: Term) -> Term:
    """Replace every variable occurrence with a distinct fresh variable."""
    if isinstance(t, Var):
        return fresh_var()
    if not t.args:
        return t
    return App(t.fn, [linearize(a) for a in t.args], t.annotated)


def canonical_renaming(terms: Iterable[Term], prefix: str = "_c") -> Substitution:
    """Rename variables to ``prefix0, prefix1, ...`` in order of first occurrence."""
    names: dict[str, None] = {}
    for t in terms:
        for v in variables(t):
            names.setdefault(v)
    return {v: Var(f"{prefix}{i}") for i, v in enumerate(names)}

"""Message terms with ACI sets, interned as a shared DAG.

Every term is built through the constructor functions below (``atom``,
``var``, ``pair``, ``senc``, ``aenc``, ``sig``, ``priv``, ``aci``).  They
intern nodes so that two structurally equal terms are the same Python
object; equality and hashing are therefore identity based and cheap.

Per-node caches hold the ground flag, the variable set, the sort key used
by the canonical order and the normal form.
"""

from __future__ import annotations

import itertools
import threading
import weakref
from enum import IntEnum
from typing import Iterable, Mapping


class TermError(ValueError):
    """Base class for malformed terms."""


class KeyPositionError(TermError):
    """A key argument of aenc/sig/priv is not of the allowed shape."""


class SubstitutionError(TermError):
    """A substitution cannot be applied to a term."""


class Kind(IntEnum):
    # The numeric value is the rank used by the canonical order.
    ATOM = 0
    VAR = 1
    PRIV = 2
    PAIR = 3
    SENC = 4
    AENC = 5
    SIG = 6
    ACI = 7


ACI_SYMBOL = "·"
_SYMBOLS = {
    Kind.PRIV: "priv",
    Kind.PAIR: "pair",
    Kind.SENC: "senc",
    Kind.AENC: "aenc",
    Kind.SIG: "sig",
    Kind.ACI: ACI_SYMBOL,
}


class Term:
    """An interned term node.  Do not instantiate directly."""

    __slots__ = (
        "kind",
        "name",
        "args",
        "uid",
        "ground",
        "var_names",
        "_key",
        "_norm",
        "_elems",
        "__weakref__",
    )

    kind: Kind
    name: str | None
    args: tuple[Term, ...]

    def __repr__(self) -> str:
        return f"<Term {render(self)}>"

    def __str__(self) -> str:
        return render(self)

    def __reduce__(self):
        # Re-intern on unpickling so identity equality survives copies.
        return (_rebuild, (self.kind, self.name, self.args))

    def __copy__(self) -> Term:
        return self

    def __deepcopy__(self, memo) -> Term:
        return self

    @property
    def is_var(self) -> bool:
        return self.kind is Kind.VAR

    @property
    def is_atom(self) -> bool:
        return self.kind is Kind.ATOM

    @property
    def is_aci(self) -> bool:
        return self.kind is Kind.ACI


class TermStore:
    """Interning table: one live node per structural shape."""

    def __init__(self) -> None:
        self._table: weakref.WeakValueDictionary = weakref.WeakValueDictionary()
        self._lock = threading.Lock()
        self._ids = itertools.count()

    def __len__(self) -> int:
        return len(self._table)

    def intern(self, kind: Kind, name: str | None, args: tuple[Term, ...]) -> Term:
        shape = (kind, name, args)
        node = self._table.get(shape)
        if node is not None:
            return node
        with self._lock:
            node = self._table.get(shape)
            if node is not None:
                return node
            node = object.__new__(Term)
            node.kind = kind
            node.name = name
            node.args = args
            node.uid = next(self._ids)
            if kind is Kind.VAR:
                node.ground = False
                node.var_names = frozenset((name,))
            elif kind is Kind.ATOM:
                node.ground = True
                node.var_names = frozenset()
            else:
                node.ground = all(a.ground for a in args)
                if node.ground:
                    node.var_names = frozenset()
                elif len(args) == 1:
                    node.var_names = args[0].var_names
                else:
                    node.var_names = frozenset().union(*(a.var_names for a in args))
            node._key = None
            node._norm = None
            node._elems = None
            self._table[shape] = node
            return node


STORE = TermStore()


def _rebuild(kind: Kind, name: str | None, args: tuple[Term, ...]) -> Term:
    return STORE.intern(kind, name, args)


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def _check_name(name: str) -> str:
    if not isinstance(name, str) or not name:
        raise TermError(f"invalid identifier {name!r}")
    return name


def atom(name: str) -> Term:
    return STORE.intern(Kind.ATOM, _check_name(name), ())


def var(name: str) -> Term:
    return STORE.intern(Kind.VAR, _check_name(name), ())


def _require_term(t: object) -> Term:
    if not isinstance(t, Term):
        raise TermError(f"expected a term, got {t!r}")
    return t


def pair(left: Term, right: Term) -> Term:
    return STORE.intern(Kind.PAIR, None, (_require_term(left), _require_term(right)))


def senc(msg: Term, key: Term) -> Term:
    return STORE.intern(Kind.SENC, None, (_require_term(msg), _require_term(key)))


def _simple_key(key: Term, where: str) -> Term:
    _require_term(key)
    if key.kind not in (Kind.ATOM, Kind.VAR):
        raise KeyPositionError(f"{where} key must be an atom or a variable, got {render(key)}")
    return key


def aenc(msg: Term, key: Term) -> Term:
    return STORE.intern(Kind.AENC, None, (_require_term(msg), _simple_key(key, "aenc")))


def priv(key: Term) -> Term:
    return STORE.intern(Kind.PRIV, None, (_simple_key(key, "priv"),))


def sig(msg: Term, key: Term) -> Term:
    _require_term(key)
    if key.kind is not Kind.PRIV:
        raise KeyPositionError(f"sig key must be priv(k), got {render(key)}")
    return STORE.intern(Kind.SIG, None, (_require_term(msg), key))


def aci(items: Iterable[Term]) -> Term:
    """ACI set with the given items, kept in the given order.

    A one-item set is allowed as an intermediate value; ``normalize``
    collapses it.
    """
    items = tuple(_require_term(i) for i in items)
    if not items:
        raise TermError("an ACI set needs at least one item")
    return STORE.intern(Kind.ACI, None, items)


_BUILDERS = {
    Kind.PAIR: pair,
    Kind.SENC: senc,
    Kind.AENC: aenc,
    Kind.SIG: sig,
    Kind.PRIV: priv,
}


def rebuild(t: Term, args: Iterable[Term]) -> Term:
    """Same constructor as ``t`` applied to new arguments."""
    if t.kind is Kind.ACI:
        return aci(args)
    return _BUILDERS[t.kind](*args)


# ---------------------------------------------------------------------------
# structure
# ---------------------------------------------------------------------------


def root(t: Term):
    """Root symbol: the atom/variable itself, or the constructor name."""
    if t.kind in (Kind.ATOM, Kind.VAR):
        return t
    return _SYMBOLS[t.kind]


def elems(t: Term) -> frozenset[Term]:
    """Elements of a (possibly nested) ACI set; ``{t}`` for any other term."""
    if t.kind is not Kind.ACI:
        return frozenset((t,))
    cached = t._elems
    if cached is None:
        out: set[Term] = set()
        for item in t.args:
            if item.kind is Kind.ACI:
                out |= elems(item)
            else:
                out.add(item)
        cached = t._elems = frozenset(out)
    return cached


def _collect(terms: Iterable[Term], children) -> set[Term]:
    seen: set[Term] = set()
    stack = list(terms)
    while stack:
        u = stack.pop()
        if u in seen:
            continue
        seen.add(u)
        stack.extend(children(u))
    return seen


def _quasi_children(u: Term):
    return elems(u) if u.kind is Kind.ACI else u.args


def quasi_subterms(t: Term | Iterable[Term]) -> set[Term]:
    """Quasi-subterms: looks through nested ACI sets via their elements."""
    return _collect(_as_terms(t), _quasi_children)


def subterms(t: Term | Iterable[Term]) -> set[Term]:
    """All syntactic subterms, intermediate ACI nodes included."""
    return _collect(_as_terms(t), lambda u: u.args)


def _as_terms(t) -> list[Term]:
    if isinstance(t, Term):
        return [t]
    terms = getattr(t, "terms", None)
    if callable(terms):
        return list(terms())
    return list(t)


def variables(t: Term | Iterable[Term]) -> frozenset[str]:
    """Names of the variables occurring in ``t``."""
    if isinstance(t, Term):
        return t.var_names
    return frozenset().union(*(u.var_names for u in _as_terms(t)))


def atoms(t: Term | Iterable[Term]) -> set[Term]:
    return {u for u in subterms(t) if u.kind is Kind.ATOM}


def dag_size(t) -> int:
    """Number of distinct subterms of a term, a term collection or a system."""
    return len(subterms(t))


def edge_count(t) -> int:
    """Parent-to-child edges of the shared DAG; repeated children count per position."""
    return sum(len(u.args) for u in subterms(t))


def is_ground(t: Term) -> bool:
    return t.ground


# ---------------------------------------------------------------------------
# canonical order
# ---------------------------------------------------------------------------


def sort_key(t: Term) -> tuple:
    """Key realising the strict total order on terms.

    Rank of the root symbol first, then atom/variable name, then the child
    sequence compared lexicographically.
    """
    key = t._key
    if key is None:
        if t.args:
            key = (int(t.kind), "", tuple(sort_key(a) for a in t.args))
        else:
            key = (int(t.kind), t.name, ())
        t._key = key
    return key


def compare(a: Term, b: Term) -> int:
    if a is b:
        return 0
    ka, kb = sort_key(a), sort_key(b)
    return -1 if ka < kb else 1


def sort_terms(terms: Iterable[Term]) -> list[Term]:
    return sorted(terms, key=sort_key)


# ---------------------------------------------------------------------------
# normalization
# ---------------------------------------------------------------------------


def normalize(t: Term) -> Term:
    """Canonical representative modulo ACI.

    Nested sets are flattened, duplicates removed, items sorted and
    singletons collapsed to their item; other constructors are mapped
    homomorphically.  Memoised per node.
    """
    cached = t._norm
    if cached is not None:
        return cached
    # Iterative post-order so that deep terms do not hit the recursion limit.
    stack = [t]
    while stack:
        u = stack[-1]
        if u._norm is not None:
            stack.pop()
            continue
        pending = [a for a in u.args if a._norm is None]
        if pending:
            stack.extend(pending)
            continue
        stack.pop()
        u._norm = _normalize_node(u)
        u._norm._norm = u._norm
    return t._norm


def _normalize_node(u: Term) -> Term:
    if not u.args:
        return u
    if u.kind is not Kind.ACI:
        args = tuple(a._norm for a in u.args)
        if all(a is b for a, b in zip(args, u.args)):
            return u
        return rebuild(u, args)
    items: set[Term] = set()
    for a in u.args:
        n = a._norm
        if n.kind is Kind.ACI:
            items.update(n.args)
        else:
            items.add(n)
    if len(items) == 1:
        return next(iter(items))
    ordered = tuple(sorted(items, key=sort_key))
    if ordered == u.args:
        return u
    return aci(ordered)


def is_normalized(t: Term) -> bool:
    return normalize(t) is t


def pairing(terms: Iterable[Term]) -> Term:
    """Normal form of the ACI set of ``terms`` (the term itself for a singleton)."""
    items = list(terms)
    if not items:
        raise TermError("pairing of an empty set")
    return normalize(aci(items))


# ---------------------------------------------------------------------------
# substitutions
# ---------------------------------------------------------------------------

Substitution = Mapping[str, Term]


def apply(sigma: Substitution, t: Term) -> Term:
    """Replace variables by their images; the result is not normalized.

    Raises SubstitutionError when a key position would receive a term that
    is not an atom or a variable.
    """
    if t.ground or not sigma:
        return t
    memo: dict[Term, Term] = {}

    def go(u: Term) -> Term:
        if u.ground:
            return u
        done = memo.get(u)
        if done is not None:
            return done
        if u.kind is Kind.VAR:
            out = sigma.get(u.name, u)
        else:
            args = tuple(go(a) for a in u.args)
            try:
                out = rebuild(u, args)
            except KeyPositionError as exc:
                raise SubstitutionError(f"cannot apply substitution to {render(u)}: {exc}") from None
        memo[u] = out
        return out

    return go(t)


def apply_norm(sigma: Substitution, t: Term) -> Term:
    return normalize(apply(sigma, t))


def normalize_substitution(sigma: Substitution) -> dict[str, Term]:
    return {x: normalize(v) for x, v in sigma.items()}


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def render(t: Term) -> str:
    """Concrete syntax accepted by the parser."""
    k = t.kind
    if k is Kind.ATOM or k is Kind.VAR:
        return t.name
    if k is Kind.ACI:
        return "{" + " . ".join(render(a) for a in t.args) + "}"
    return _SYMBOLS[k] + "(" + ", ".join(render(a) for a in t.args) + ")"

"""Ground derivability for the Dolev-Yao theory with and without ACI sets.

``derivable`` is the polynomial saturation procedure over quasi-subterms:
the candidate set S starts as every quasi-subterm of the input not already
known, the derived set D starts as the knowledge, and the loop moves terms
from S to D by (1) a non-ACI Dolev-Yao rule, (2) composing an ACI set whose
elements are all derived, or (3) splitting a derived ACI set into its
elements.

``closure_oracle`` is an independent, naive fixpoint over explicit rule
instances used to cross-check it on small inputs.
"""

from __future__ import annotations

import itertools
import warnings
from enum import Enum
from typing import Iterable

from .constraints import Constraint, ConstraintSystem
from .terms import (
    Kind,
    SubstitutionError,
    Term,
    TermError,
    aci,
    aenc,
    apply,
    dag_size,
    elems,
    is_normalized,
    normalize,
    pair,
    priv,
    quasi_subterms,
    render,
    senc,
    sig,
    sort_terms,
    subterms,
)


class Theory(Enum):
    DYACI = "dyaci"
    DY = "dy"


class DeductionError(TermError):
    """Input outside the domain of the ground decision procedure."""


class NotGroundError(DeductionError):
    pass


class NotNormalizedError(DeductionError):
    pass


class TheoryError(DeductionError):
    """An ACI set was given to the plain Dolev-Yao theory."""


class NormalizationWarning(UserWarning):
    pass


def _prepare(terms: list[Term], theory: Theory, strict: bool) -> list[Term]:
    for u in terms:
        if not u.ground:
            raise NotGroundError(f"term is not ground: {render(u)}")
    if theory is Theory.DY:
        for u in subterms(terms):
            if u.kind is Kind.ACI:
                raise TheoryError(f"ACI set {render(u)} is not allowed in the Dolev-Yao theory")
        # ACI-free terms are already in normal form.
        return terms
    if all(is_normalized(u) for u in terms):
        return terms
    if strict:
        bad = next(u for u in terms if not is_normalized(u))
        raise NotNormalizedError(f"term is not normalized: {render(bad)}")
    warnings.warn("derivability input was not normalized; normalizing it", NormalizationWarning, stacklevel=3)
    return [normalize(u) for u in terms]


class Saturation:
    """Working sets of the derivability loop for knowledge E and goal t.

    ``derived`` (D) and ``pending`` (S) partition the quasi-subterms of
    E and t; ``ops`` counts elementary set operations.
    """

    def __init__(self, knowledge: Iterable[Term], goal: Term, theory: Theory = Theory.DYACI, *, strict: bool = False):
        terms = _prepare(list(knowledge) + [goal], theory, strict)
        self.theory = theory
        self.knowledge = frozenset(terms[:-1])
        self.goal = terms[-1]
        self.universe = quasi_subterms(terms)
        self.derived: set[Term] = set(self.knowledge)
        self.pending: set[Term] = self.universe - self.derived
        self.ops = len(self.universe)
        self.steps = 0
        self.trace: list[tuple[str, Term]] = []
        self._order = sort_terms(self.universe)
        # Non-ACI parent links, used to find decomposition steps producing a term.
        self._parents: dict[Term, list[Term]] = {}
        for u in self._order:
            if u.kind in (Kind.PAIR, Kind.SENC, Kind.AENC):
                for child in {u.args[0], u.args[1]} if u.kind is Kind.PAIR else {u.args[0]}:
                    self._parents.setdefault(child, []).append(u)

    # -- rule tests -------------------------------------------------------

    def _known(self, u: Term) -> bool:
        self.ops += 1
        return u in self.derived

    def _composable(self, r: Term) -> bool:
        k = r.kind
        if k in (Kind.PAIR, Kind.SENC, Kind.AENC, Kind.SIG):
            # sig(m, priv(k)) is composed from m and the private key term itself.
            return self._known(r.args[0]) and self._known(r.args[1])
        return False

    def _decomposable(self, r: Term) -> bool:
        for p in self._parents.get(r, ()):
            if not self._known(p):
                continue
            if p.kind is Kind.PAIR:
                return True
            if p.kind is Kind.SENC and self._known(p.args[1]):
                return True
            if p.kind is Kind.AENC and self._known(priv(p.args[1])):
                return True
        return False

    def _move(self, u: Term, why: str) -> None:
        self.pending.discard(u)
        self.derived.add(u)
        self.ops += 2
        self.trace.append((why, u))

    def step(self) -> bool:
        """Apply one branch of the loop; False when saturated."""
        self.steps += 1
        for r in self._order:
            self.ops += 1
            if r in self.pending and (self._composable(r) or self._decomposable(r)):
                self._move(r, "rule")
                return True
        if self.theory is Theory.DY:
            return False
        for s in self._order:
            self.ops += 1
            if s in self.pending and s.kind is Kind.ACI and all(self._known(e) for e in elems(s)):
                self._move(s, "compose-set")
                return True
        for s in self._order:
            self.ops += 1
            if s in self.derived and s.kind is Kind.ACI:
                missing = [e for e in sort_terms(elems(s)) if not self._known(e)]
                if missing:
                    for e in missing:
                        self._move(e, "split-set")
                    return True
        return False

    def run(self) -> Saturation:
        while self.step():
            pass
        return self

    def check_invariants(self) -> None:
        assert self.derived | self.pending == self.universe
        assert not (self.derived & self.pending)

    @property
    def result(self) -> bool:
        return self.goal in self.derived


def derivable(
    knowledge: Iterable[Term],
    target: Term,
    theory: Theory = Theory.DYACI,
    *,
    strict: bool = False,
) -> bool:
    """True iff ``target`` can be derived from ``knowledge`` (ground terms)."""
    sat = Saturation(knowledge, target, theory, strict=strict)
    if sat.goal in sat.derived:
        return True
    return sat.run().result


def derived_subterms(knowledge: Iterable[Term], theory: Theory = Theory.DYACI) -> frozenset[Term]:
    """Quasi-subterms of ``knowledge`` that are derivable from it."""
    knowledge = list(knowledge)
    if not knowledge:
        return frozenset()
    return frozenset(Saturation(knowledge, knowledge[0], theory).run().derived)


def operation_count(knowledge: Iterable[Term], target: Term, theory: Theory = Theory.DYACI) -> int:
    return Saturation(knowledge, target, theory).run().ops


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------


def closure_oracle(
    knowledge: Iterable[Term],
    bound: int | None = None,
    theory: Theory = Theory.DYACI,
    *,
    targets: Iterable[Term] = (),
) -> frozenset[Term]:
    """Least fixpoint of the deduction rules, compositions capped by DAG size.

    Without ``targets`` every composition whose result has DAG size at most
    ``bound`` is tried; this is exponential and only usable for very small
    bounds.  With ``targets`` the compositions are restricted to a finite
    universe: the subterms of knowledge and targets, every one-step
    composition over them, and every ACI set over their non-set members.
    """
    known = set(_prepare(list(knowledge), theory, strict=False))
    targets = _prepare(list(targets), theory, strict=False)
    if bound is None:
        bound = dag_size(list(known) + targets)
    use_sets = theory is Theory.DYACI
    universe = _oracle_universe(known, targets, bound, use_sets) if targets else None
    while True:
        new = _decompose(known, use_sets)
        if universe is None:
            new |= _compose_all(known, bound, use_sets)
        else:
            new |= {u for u in universe if u not in known and _composable_from(u, known)}
        new -= known
        if not new:
            return frozenset(known)
        known |= new


def _decompose(known: set[Term], use_sets: bool) -> set[Term]:
    out: set[Term] = set()
    for u in known:
        k = u.kind
        if k is Kind.PAIR:
            out.update(u.args)
        elif k is Kind.SENC and u.args[1] in known:
            out.add(u.args[0])
        elif k is Kind.AENC and priv(u.args[1]) in known:
            out.add(u.args[0])
        elif k is Kind.ACI and use_sets:
            out.update(normalize(i) for i in u.args)
    return out


def _binary_compositions(x: Term, y: Term) -> list[Term]:
    out = [pair(x, y), senc(x, y)]
    if y.kind is Kind.ATOM:
        out.append(aenc(x, y))
    if y.kind is Kind.PRIV:
        out.append(sig(x, y))
    return out


def _compose_all(known: set[Term], bound: int, use_sets: bool) -> set[Term]:
    out: set[Term] = set()
    for x in known:
        for y in known:
            for u in _binary_compositions(x, y):
                if dag_size(u) <= bound:
                    out.add(u)
    if use_sets:
        members = sort_terms(u for u in known if u.kind is not Kind.ACI)
        for r in range(2, bound):
            for combo in itertools.combinations(members, r):
                u = normalize(aci(combo))
                if dag_size(u) <= bound:
                    out.add(u)
    return out


def _oracle_universe(known: set[Term], targets: list[Term], bound: int, use_sets: bool) -> set[Term]:
    base = subterms(list(known) + targets)
    universe = set(base)
    for x in base:
        for y in base:
            for u in _binary_compositions(x, y):
                if dag_size(u) <= bound:
                    universe.add(u)
    if use_sets:
        members = sort_terms(u for u in base if u.kind is not Kind.ACI)
        for r in range(2, min(len(members), bound) + 1):
            for combo in itertools.combinations(members, r):
                u = normalize(aci(combo))
                if dag_size(u) <= bound:
                    universe.add(u)
    return universe


def _composable_from(u: Term, known: set[Term]) -> bool:
    k = u.kind
    if k in (Kind.PAIR, Kind.SENC, Kind.AENC, Kind.SIG):
        return u.args[0] in known and u.args[1] in known
    if k is Kind.ACI:
        # Some known terms whose elements are all elements of u must cover u.
        wanted = elems(u)
        covered: set[Term] = set()
        for w in known:
            ew = elems(w)
            if ew <= wanted:
                covered |= ew
        return covered == wanted
    return False


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------


def _system(S) -> ConstraintSystem:
    if isinstance(S, ConstraintSystem):
        return S
    if isinstance(S, Constraint):
        return ConstraintSystem([S])
    return ConstraintSystem(S)


def instantiate(c: Constraint, sigma) -> tuple[list[Term], Term]:
    """Apply a ground substitution to a constraint and normalize both sides."""
    missing = c.vars - set(sigma)
    if missing:
        raise SubstitutionError(f"substitution does not bind {', '.join(sorted(missing))}")
    knowledge = [normalize(apply(sigma, e)) for e in c.knowledge]
    target = normalize(apply(sigma, c.target))
    for u in knowledge + [target]:
        if not u.ground:
            raise SubstitutionError(f"substitution is not ground on {render(u)}")
    return knowledge, target


def check_model(S, sigma, theory: Theory = Theory.DYACI) -> bool:
    """True iff every constraint holds once ``sigma`` is applied."""
    for c in _system(S):
        knowledge, target = instantiate(c, sigma)
        if not derivable(knowledge, target, theory):
            return False
    return True


def first_failure(S, sigma, theory: Theory = Theory.DYACI) -> int | None:
    """Index of the first violated constraint, or None for a model."""
    for i, c in enumerate(_system(S)):
        knowledge, target = instantiate(c, sigma)
        if not derivable(knowledge, target, theory):
            return i
    return None

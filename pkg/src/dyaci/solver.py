"""Satisfiability of general deducibility constraint systems.

The search space is the set of conservative substitutions: every variable
is mapped to the ACI pairing of instances of pool terms, where the pool
holds the non-variable, non-set quasi-subterms of the normalized system and
``priv(a)`` for each of its atoms.  Values are kept within twice the DAG
size of the normalized system.

The search assigns one variable at a time.  A pool term may be used for a
variable only once all of its own variables are assigned, which realises
the well-founded instantiation order of conservative models; the branching
over which variable goes next (with a memo of visited partial assignments)
covers every such order.  Partial assignments are pruned with necessary
conditions only, and complete ones are verified with the ground decider.
"""

from __future__ import annotations

import functools
import itertools
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator

from .constraints import Constraint, ConstraintSystem
from .deduction import Theory, check_model, derivable, derived_subterms, instantiate
from .terms import (
    Kind,
    SubstitutionError,
    Term,
    aci,
    aenc,
    apply,
    atom,
    dag_size,
    elems,
    normalize,
    pair,
    pairing,
    priv,
    quasi_subterms,
    senc,
    sig,
    sort_key,
    sort_terms,
    subterms,
)

log = logging.getLogger(__name__)

SENTINEL = atom("@a0")


class Status(Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    INDETERMINATE = "INDETERMINATE"


@dataclass(frozen=True)
class Budget:
    max_nodes: int | None = 2_000_000
    max_seconds: float | None = None


class BudgetExceeded(Exception):
    pass


@dataclass
class SearchStats:
    nodes: int = 0
    pruned: int = 0
    verified: int = 0
    seconds: float = 0.0
    bound: int = 0
    pool_size: int = 0
    dag_size: int = 0


@dataclass
class SolveResult:
    status: Status
    model: dict[str, Term] | None
    stats: SearchStats = field(default_factory=SearchStats)

    @property
    def sat(self) -> bool:
        return self.status is Status.SAT


def _as_system(S) -> ConstraintSystem:
    if isinstance(S, ConstraintSystem):
        return S
    return ConstraintSystem(S)


def prepared(S) -> ConstraintSystem:
    """Normalized system, with ``{@a0} |> @a0`` added when it has no atom."""
    ns = _as_system(S).normalized()
    if ns.constraints and not ns.atoms:
        ns = ns.extended(Constraint([SENTINEL], SENTINEL))
    return ns


def size_bound(S) -> int:
    """Upper bound on the DAG size of each value of some model, if one exists."""
    return 2 * prepared(S).dag_size


def candidate_pool(S) -> list[Term]:
    """Pool of building blocks for conservative values, in canonical order."""
    ns = prepared(S)
    sub = quasi_subterms(ns.terms())
    pool = {u for u in sub if u.kind not in (Kind.VAR, Kind.ACI)}
    pool |= {priv(a) for a in ns.atoms}
    return sort_terms(pool)


# ---------------------------------------------------------------------------
# necessary conditions on partial assignments
# ---------------------------------------------------------------------------
#
# A filter restricts the elements a variable's value may contain.  It is a
# list of clauses that must all accept; a clause accepts an element if any
# of its options does.  Options are ("set", S): the element is in S, or
# ("der", E): the element is derivable from the ground knowledge E.


def _conj(parts: Iterable[dict | None]) -> dict | None:
    out: dict[str, list] = {}
    for p in parts:
        if p is None:
            return None
        for x, clauses in p.items():
            out.setdefault(x, []).extend(clauses)
    return out


def _disj(parts: Iterable[dict | None]) -> dict | None:
    alive = [p for p in parts if p is not None]
    if not alive:
        return None
    out = dict(alive[0])
    for p in alive[1:]:
        merged = {}
        for x, clauses in out.items():
            if x in p and clauses and p[x]:
                merged[x] = [clauses[0] + p[x][0]]
        out = merged
    return out


def _match(p: Term, g: Term) -> dict | None:
    """Constraints on the variables of ``p`` for some instance to equal ``g``."""
    if p.ground:
        return {} if p is g else None
    if p.kind is Kind.VAR:
        return {p.name: [(("set", elems(g)),)]}
    if p.kind is Kind.ACI:
        G = elems(g)
        parts = []
        for item in p.args:
            if item.kind is Kind.VAR:
                parts.append({item.name: [(("set", G),)]})
            elif item.ground:
                parts.append({} if item in G else None)
            else:
                parts.append(_disj(_match(item, h) for h in G if h.kind is item.kind))
        return _conj(parts)
    if g.kind is not p.kind:
        return None
    return _conj(_match(a, b) for a, b in zip(p.args, g.args))


class _GroundContext:
    """Ground knowledge with cached derivability queries."""

    def __init__(self, knowledge: frozenset[Term]) -> None:
        self.knowledge = knowledge
        self.derived = derived_subterms(knowledge)
        self._cache: dict[Term, bool] = {}

    def derivable(self, t: Term) -> bool:
        r = self._cache.get(t)
        if r is None:
            r = t in self.derived or derivable(self.knowledge, t)
            self._cache[t] = r
        return r

    def requirements(self, t: Term) -> dict | None:
        """Filters that any instance of ``t`` derivable here must respect."""
        if t.ground:
            return {} if self.derivable(t) else None
        if t.kind is Kind.VAR:
            return {t.name: [(("der", self),)]}
        if t.kind is Kind.ACI:
            return _conj(self.requirements(i) for i in t.args)
        alternatives = []
        if t.kind is not Kind.PRIV:
            alternatives.append(_conj(self.requirements(a) for a in t.args))
        for u in self.derived:
            if u.kind is t.kind:
                alternatives.append(_match(t, u))
        return _disj(alternatives)


def could_match(a: Term, b: Term) -> bool:
    """Whether instances of two partial terms could coincide."""
    if a.kind is Kind.VAR or b.kind is Kind.VAR:
        return True
    if (a.kind is Kind.ACI and not a.ground) or (b.kind is Kind.ACI and not b.ground):
        return True
    if a.ground and b.ground:
        return a is b
    if a.kind is not b.kind or len(a.args) != len(b.args):
        return False
    if not a.args:
        return a is b
    return all(could_match(x, y) for x, y in zip(a.args, b.args))


def maybe_derivable(knowledge: Iterable[Term], target: Term) -> bool:
    """Over-approximation of derivability for partially instantiated terms.

    False means no instance of the unassigned variables can make the target
    derivable; True is inconclusive.
    """
    known = set(knowledge)

    def synth(t: Term) -> bool:
        if t.kind is Kind.VAR or t in known:
            return True
        for u in known:
            if (not u.ground or not t.ground) and could_match(t, u):
                return True
        if t.kind in (Kind.PAIR, Kind.SENC, Kind.AENC, Kind.SIG):
            return synth(t.args[0]) and synth(t.args[1])
        if t.kind is Kind.ACI:
            return all(synth(i) for i in t.args)
        return False

    changed = True
    while changed:
        changed = False
        for u in list(known):
            k = u.kind
            if k is Kind.VAR:
                return True
            if k in (Kind.PAIR, Kind.ACI):
                parts = u.args
            elif k is Kind.SENC and synth(u.args[1]):
                parts = u.args[:1]
            elif k is Kind.AENC and synth(priv(u.args[1])):
                parts = u.args[:1]
            else:
                continue
            for p in parts:
                if p not in known:
                    known.add(p)
                    changed = True
    return synth(target)


def _accepts(clauses: list, e: Term) -> bool:
    for clause in clauses:
        ok = False
        for kind, data in clause:
            if (kind == "set" and e in data) or (kind == "der" and data.derivable(e)):
                ok = True
                break
        if not ok:
            return False
    return True


def _may_accept(clauses: list, p: Term) -> bool:
    """Whether some instance of the partial term ``p`` could pass the filter."""
    for clause in clauses:
        ok = False
        for kind, data in clause:
            if kind == "set" and any(could_match(p, g) for g in data):
                ok = True
            elif kind == "der" and maybe_derivable(data.knowledge, p):
                ok = True
            if ok:
                break
        if not ok:
            return False
    return True


# ---------------------------------------------------------------------------
# search
# ---------------------------------------------------------------------------


class _Search:
    def __init__(self, S, budget: Budget | None) -> None:
        self.system = prepared(S)
        self.budget = budget or Budget()
        self.bound = 2 * self.system.dag_size
        self.pool = candidate_pool(self.system)
        self.pool_vars = [p.var_names for p in self.pool]
        self.variables = sorted(self.system.vars)
        self.constraints = [(c, sorted(c.vars)) for c in self.system]
        self.stats = SearchStats(bound=self.bound, pool_size=len(self.pool), dag_size=self.system.dag_size)
        self.visited: set[frozenset] = set()
        self._analysis: dict = {}
        self._contexts: dict[frozenset, _GroundContext] = {}
        self._deadline = None

    def context(self, knowledge: frozenset[Term]) -> _GroundContext:
        ctx = self._contexts.get(knowledge)
        if ctx is None:
            ctx = self._contexts[knowledge] = _GroundContext(knowledge)
        return ctx

    def run(self) -> SolveResult:
        start = time.monotonic()
        if self.budget.max_seconds is not None:
            self._deadline = start + self.budget.max_seconds
        try:
            model = self.node({})
            status = Status.SAT if model is not None else Status.UNSAT
        except BudgetExceeded:
            model, status = None, Status.INDETERMINATE
        self.stats.seconds = time.monotonic() - start
        if model is not None:
            model = {x: model[x] for x in self.variables}
        log.debug("solve: %s after %d nodes", status.value, self.stats.nodes)
        return SolveResult(status, model, self.stats)

    def tick(self) -> None:
        self.stats.nodes += 1
        b = self.budget
        if b.max_nodes is not None and self.stats.nodes > b.max_nodes:
            raise BudgetExceeded
        if self._deadline is not None and time.monotonic() > self._deadline:
            raise BudgetExceeded

    def analyse_constraint(self, i: int, sigma: dict) -> dict | None:
        c, cvars = self.constraints[i]
        key = (i, tuple(sigma.get(x) for x in cvars))
        if key in self._analysis:
            return self._analysis[key]
        try:
            knowledge = frozenset(normalize(apply(sigma, e)) for e in c.knowledge)
            target = normalize(apply(sigma, c.target))
        except SubstitutionError:
            result = None
        else:
            if all(e.ground for e in knowledge):
                ctx = self.context(knowledge)
                result = ctx.requirements(target)
            else:
                result = {} if maybe_derivable(knowledge, target) else None
        self._analysis[key] = result
        return result

    def node(self, sigma: dict) -> dict | None:
        self.tick()
        filters = _conj(self.analyse_constraint(i, sigma) for i in range(len(self.constraints)))
        if filters is None:
            self.stats.pruned += 1
            return None
        if len(sigma) == len(self.variables):
            self.stats.verified += 1
            return dict(sigma) if check_model(self.system, sigma) else None

        assigned = set(sigma)
        options = []
        for x in self.variables:
            if x in sigma:
                continue
            clauses = filters.get(x, [])
            eligible, deferred = self.candidates(x, sigma, assigned, clauses)
            if not eligible and not deferred:
                self.stats.pruned += 1
                return None
            options.append((deferred, len(eligible), x, eligible))
        options.sort(key=lambda o: (o[0], o[1], o[2]))
        if not options[0][0]:
            # Some variable can take its value right now whatever the order.
            options = options[:1]
        for _, _, x, eligible in options:
            for value in self.values(eligible):
                nxt = dict(sigma)
                nxt[x] = value
                key = frozenset(nxt.items())
                if key in self.visited:
                    continue
                self.visited.add(key)
                found = self.node(nxt)
                if found is not None:
                    return found
        return None

    def candidates(self, x: str, sigma: dict, assigned: set, clauses: list) -> tuple[list[Term], bool]:
        eligible: set[Term] = set()
        deferred = False
        for p, pv in zip(self.pool, self.pool_vars):
            if x in pv:
                continue
            try:
                inst = normalize(apply(sigma, p)) if pv else p
            except SubstitutionError:
                continue
            if pv <= assigned:
                if _accepts(clauses, inst):
                    eligible.add(inst)
            elif not deferred and _may_accept(clauses, inst):
                deferred = True
        return sort_terms(eligible), deferred

    def values(self, items: list[Term]) -> Iterator[Term]:
        for r in range(1, len(items) + 1):
            fits = False
            for combo in itertools.combinations(items, r):
                v = pairing(combo)
                if dag_size(v) <= self.bound:
                    fits = True
                    yield v
            if not fits:
                return


def solve(S, budget: Budget | None = None) -> SolveResult:
    """Decide satisfiability in the Dolev-Yao theory with ACI sets.

    On SAT the model binds every variable of ``S`` to a normalized ground
    term over the atoms of the normalized system.
    """
    S = _as_system(S)
    if not S.constraints:
        return SolveResult(Status.SAT, {})
    return _Search(S, budget).run()


def verify_certificate(S, sigma, *, check_bound: bool = False) -> bool:
    """Polynomial check of a claimed model.

    With ``check_bound`` the value sizes must also respect the bound
    guaranteed for models returned by ``solve``.
    """
    S = _as_system(S)
    missing = S.vars - set(sigma)
    if missing:
        raise SubstitutionError(f"substitution does not bind {', '.join(sorted(missing))}")
    for x in S.vars:
        if not sigma[x].ground:
            raise SubstitutionError(f"value of {x} is not ground")
    if check_bound:
        bound = size_bound(S)
        if any(dag_size(sigma[x]) > bound for x in S.vars):
            return False
    return check_model(S.normalized(), sigma)


# ---------------------------------------------------------------------------
# literal enumeration (test oracle)
# ---------------------------------------------------------------------------


def ground_terms(atom_set: Iterable[Term], size_cap: int) -> list[Term]:
    """All normalized ground terms over the atoms with DAG size at most ``size_cap``.

    Ordered by DAG size, then canonically.
    """
    return list(_ground_terms(tuple(sort_terms(set(atom_set))), size_cap))


@functools.lru_cache(maxsize=32)
def _ground_terms(atom_list: tuple[Term, ...], size_cap: int) -> tuple[Term, ...]:
    sub: dict[Term, frozenset] = {}

    def S(t: Term) -> frozenset:
        s = sub.get(t)
        if s is None:
            s = sub[t] = frozenset(subterms(t))
        return s

    known: set[Term] = set(atom_list)
    if size_cap >= 2:
        known |= {priv(a) for a in atom_list}
    known = {t for t in known if len(S(t)) <= size_cap}
    while True:
        new: set[Term] = set()
        current = sort_terms(known)
        for x in current:
            for y in current:
                if len(S(x) | S(y)) + 1 > size_cap:
                    continue
                new.add(pair(x, y))
                new.add(senc(x, y))
                if y.kind is Kind.ATOM:
                    new.add(aenc(x, y))
                if y.kind is Kind.PRIV:
                    new.add(sig(x, y))
        members = [u for u in current if u.kind is not Kind.ACI]

        def grow(start: int, chosen: list[Term], union: frozenset) -> None:
            if len(chosen) >= 2:
                new.add(aci(chosen))
            for i in range(start, len(members)):
                u = union | S(members[i])
                if len(u) + 1 <= size_cap:
                    grow(i + 1, chosen + [members[i]], u)

        grow(0, [], frozenset())
        new -= known
        if not new:
            break
        known |= new
    return tuple(sorted(known, key=lambda t: (len(S(t)), sort_key(t))))


def brute_solve(
    S, size_cap: int = 3, budget: Budget | None = None, theory: Theory = Theory.DYACI
) -> SolveResult:
    """Try every assignment of ground terms up to ``size_cap`` to the variables.

    Under the plain theory only set-free values are tried and constraints are
    checked with the plain decider.
    """
    S = _as_system(S)
    if not S.constraints:
        return SolveResult(Status.SAT, {})
    system = prepared(S)
    budget = budget or Budget(max_nodes=50_000_000)
    variables = sorted(system.vars)
    universe = ground_terms(system.atoms, size_cap) if variables else []
    if theory is Theory.DY:
        universe = [t for t in universe if not any(u.kind is Kind.ACI for u in subterms(t))]
    stats = SearchStats(bound=size_cap, pool_size=len(universe), dag_size=system.dag_size)
    # Check each constraint as soon as its variables are all assigned.
    ready: list[list[Constraint]] = [[] for _ in range(len(variables) + 1)]
    for c in system:
        depth = max((variables.index(x) + 1 for x in c.vars), default=0)
        ready[depth].append(c)
    cache: dict = {}

    def holds(c: Constraint, sigma: dict) -> bool:
        try:
            knowledge, target = instantiate(c, sigma)
        except SubstitutionError:
            return False
        key = (frozenset(knowledge), target)
        r = cache.get(key)
        if r is None:
            r = cache[key] = derivable(knowledge, target, theory)
        return r

    start = time.monotonic()

    def go(i: int, sigma: dict) -> dict | None:
        stats.nodes += 1
        if budget.max_nodes is not None and stats.nodes > budget.max_nodes:
            raise BudgetExceeded
        if budget.max_seconds is not None and time.monotonic() - start > budget.max_seconds:
            raise BudgetExceeded
        if not all(holds(c, sigma) for c in ready[i]):
            return None
        if i == len(variables):
            return dict(sigma)
        for value in universe:
            sigma[variables[i]] = value
            found = go(i + 1, sigma)
            if found is not None:
                return found
        del sigma[variables[i]]
        return None

    try:
        model = go(0, {})
        status = Status.SAT if model is not None else Status.UNSAT
    except BudgetExceeded:
        model, status = None, Status.INDETERMINATE
    stats.seconds = time.monotonic() - start
    return SolveResult(status, model, stats)

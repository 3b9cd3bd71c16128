"""Seeded property checks that can run without pytest.

Each check returns the list of counterexamples it found; an empty list is
a pass.  The same checks back the test suite and ``dyaci selftest``.
"""

from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass
from typing import Callable

from .deduction import Theory, closure_oracle, derivable
from .generators import ATOMS, VARS, random_system, random_term
from .solver import Status, brute_solve, solve, verify_certificate
from .terms import (
    SubstitutionError,
    Term,
    aci,
    apply,
    dag_size,
    edge_count,
    elems,
    normalize,
    pairing,
    quasi_subterms,
    subterms,
    variables,
)

log = logging.getLogger(__name__)


def _terms(rng: random.Random, n: int, with_vars: bool = False) -> list[Term]:
    return [random_term(rng, ATOMS, VARS if with_vars else (), depth=rng.randint(1, 4)) for _ in range(n)]


def check_idempotence(ts: list[Term]) -> list:
    return [t for t in ts if normalize(normalize(t)) is not normalize(t)]


def check_aci_axioms(ts: list[Term]) -> list:
    bad = []
    for x, y, z in zip(ts, ts[1:], ts[2:]):
        assoc = normalize(aci([x, aci([y, z])])) is normalize(aci([aci([x, y]), z]))
        comm = normalize(aci([x, y])) is normalize(aci([y, x]))
        idem = normalize(aci([x, x])) is normalize(x)
        if not (assoc and comm and idem):
            bad.append((x, y, z))
    return bad


def check_elems_commute(ts: list[Term]) -> list:
    return [t for t in ts if elems(normalize(t)) != {normalize(e) for e in elems(t)}]


def check_subterm_chain(ts: list[Term]) -> list:
    return [t for t in ts if not (elems(t) <= quasi_subterms(t) <= subterms(t))]


def check_normal_size(ts: list[Term]) -> list:
    return [t for t in ts if dag_size(normalize(t)) > dag_size(t)]


def check_sub_equals_subii(ts: list[Term]) -> list:
    return [t for t in ts if quasi_subterms(normalize(t)) != subterms(normalize(t))]


def check_edge_bound(ts: list[Term]) -> list:
    return [t for t in ts if edge_count(normalize(t)) >= dag_size(normalize(t)) ** 2]


def check_pairing_duality(ts: list[Term]) -> list:
    bad = []
    for i in range(0, len(ts) - 2, 3):
        group = ts[i : i + 3]
        normal = [normalize(t) for t in group]
        p = pairing(group)
        if not derivable(normal, p) or not all(derivable([p], u) for u in normal):
            bad.append(tuple(group))
    return bad


def check_substitution_subterms(ts: list[Term], rng: random.Random) -> list:
    bad = []
    for t in ts:
        sigma = {x: random_term(rng, ATOMS, (), depth=2) for x in variables(t)}
        try:
            instance = apply(sigma, t)
        except SubstitutionError:
            # a variable in key position only accepts atoms
            sigma = {x: rng.choice(ATOMS) for x in sigma}
            instance = apply(sigma, t)
        lhs = subterms(instance)
        rhs = {apply(sigma, u) for u in subterms(t)} | subterms([sigma[x] for x in variables(t)])
        if lhs != rhs:
            bad.append(t)
    return bad


def check_derivability_oracle(rng: random.Random, n: int, max_dag: int = 8) -> list:
    """Saturation against the naive closure on random ground instances, both theories."""
    bad = []
    done = 0
    while done < n:
        theory = Theory.DYACI if done % 2 == 0 else Theory.DY
        sets = theory is Theory.DYACI
        knowledge = [normalize(random_term(rng, ATOMS, (), depth=2, allow_sets=sets)) for _ in range(rng.randint(1, 3))]
        target = normalize(random_term(rng, ATOMS, (), depth=2, allow_sets=sets))
        if dag_size(knowledge + [target]) > max_dag:
            continue
        done += 1
        fast = derivable(knowledge, target, theory)
        slow = target in closure_oracle(knowledge, theory=theory, targets=[target])
        if fast != slow:
            bad.append((knowledge, target, theory, fast))
    return bad


def check_solver_oracle(rng: random.Random, n: int) -> list:
    """Solver status against literal enumeration on small random systems."""
    bad = []
    for _ in range(n):
        S = random_system(rng, max_constraints=2, max_dag=6)
        cap = 4 if len(S.vars) <= 1 else 3
        fast = solve(S)
        slow = brute_solve(S, size_cap=cap)
        if fast.status is Status.SAT and not verify_certificate(S, fast.model, check_bound=True):
            bad.append((S, "bad certificate"))
        elif fast.status is not slow.status:
            bad.append((S, fast.status, slow.status))
    return bad


@dataclass
class CheckResult:
    name: str
    cases: int
    failures: list
    seconds: float

    @property
    def ok(self) -> bool:
        return not self.failures


def run_selftest(seed: int = 0, size: int = 1000, solver_cases: int = 20) -> list[CheckResult]:
    rng = random.Random(seed)
    ground = _terms(rng, size)
    open_terms = _terms(rng, size, with_vars=True)
    checks: list[tuple[str, int, Callable[[], list]]] = [
        ("normalize is idempotent", size, lambda: check_idempotence(ground + open_terms)),
        ("ACI axioms hold after normalization", size, lambda: check_aci_axioms(ground)),
        ("elems commutes with normalize", size, lambda: check_elems_commute(ground)),
        ("elems within quasi-subterms within subterms", size, lambda: check_subterm_chain(open_terms)),
        ("normalization never grows the DAG", size, lambda: check_normal_size(ground)),
        ("quasi-subterms equal subterms on normal forms", size, lambda: check_sub_equals_subii(ground)),
        ("edges below squared DAG size", size, lambda: check_edge_bound(ground)),
        ("pairing composes and decomposes", size // 3, lambda: check_pairing_duality(ground)),
        ("subterms of an instance", size, lambda: check_substitution_subterms(open_terms, rng)),
        ("derivability matches closure oracle", size // 2, lambda: check_derivability_oracle(rng, size // 2)),
        ("solver matches enumeration", solver_cases, lambda: check_solver_oracle(rng, solver_cases)),
    ]
    results = []
    for name, cases, fn in checks:
        start = time.monotonic()
        failures = fn()
        results.append(CheckResult(name, cases, failures, time.monotonic() - start))
        log.info("%s: %d failures", name, len(failures))
    return results

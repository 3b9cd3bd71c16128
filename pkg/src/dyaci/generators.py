"""Seeded random terms and constraint systems for property checks."""

from __future__ import annotations

import random
from typing import Sequence

from .constraints import Constraint, ConstraintSystem
from .terms import Term, aci, aenc, atom, dag_size, pair, priv, senc, sig, var

ATOMS = tuple(atom(n) for n in ("a", "b", "c"))
VARS = tuple(var(n) for n in ("X", "Y"))


def random_term(
    rng: random.Random,
    atoms: Sequence[Term] = ATOMS,
    variables: Sequence[Term] = (),
    depth: int = 3,
    *,
    allow_sets: bool = True,
) -> Term:
    leaves = list(atoms) + list(variables)
    keys = leaves
    if depth <= 0 or rng.random() < 0.3:
        return rng.choice(leaves)
    kinds = ["pair", "senc", "aenc", "sig", "priv"] + (["aci", "aci"] if allow_sets else [])
    kind = rng.choice(kinds)

    def sub() -> Term:
        return random_term(rng, atoms, variables, depth - 1, allow_sets=allow_sets)

    if kind == "pair":
        return pair(sub(), sub())
    if kind == "senc":
        return senc(sub(), sub())
    if kind == "aenc":
        return aenc(sub(), rng.choice(keys))
    if kind == "sig":
        return sig(sub(), priv(rng.choice(keys)))
    if kind == "priv":
        return priv(rng.choice(keys))
    return aci([sub() for _ in range(rng.randint(1, 4))])


def random_bounded_term(rng: random.Random, max_size: int, **kw) -> Term:
    while True:
        t = random_term(rng, **kw)
        if dag_size(t) <= max_size:
            return t


def random_system(
    rng: random.Random,
    atoms: Sequence[Term] = ATOMS,
    variables: Sequence[Term] = VARS,
    max_constraints: int = 2,
    max_dag: int = 6,
    *,
    allow_sets: bool = True,
    depth: int = 2,
) -> ConstraintSystem:
    """A random system of DAG size at most ``max_dag``."""
    while True:
        constraints = []
        for _ in range(rng.randint(1, max_constraints)):
            knowledge = [
                random_term(rng, atoms, variables, depth, allow_sets=allow_sets) for _ in range(rng.randint(1, 2))
            ]
            target = random_term(rng, atoms, variables, depth, allow_sets=allow_sets)
            constraints.append(Constraint(knowledge, target))
        S = ConstraintSystem(constraints)
        if S.dag_size <= max_dag:
            return S

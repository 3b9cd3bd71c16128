"""Deducibility constraints ``E |> t`` and constraint systems."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .syntax import ParseError, parse_constraint_line
from .terms import Kind, Term, atoms, dag_size, edge_count, normalize, render, sort_terms, subterms


@dataclass(frozen=True)
class Constraint:
    """The intruder must derive ``target`` from ``knowledge``."""

    knowledge: frozenset[Term]
    target: Term

    def __init__(self, knowledge: Iterable[Term], target: Term) -> None:
        object.__setattr__(self, "knowledge", frozenset(knowledge))
        object.__setattr__(self, "target", target)

    def terms(self) -> Iterator[Term]:
        yield from self.knowledge
        yield self.target

    @property
    def vars(self) -> frozenset[str]:
        out = self.target.var_names
        for e in self.knowledge:
            out = out | e.var_names
        return out

    def normalized(self) -> Constraint:
        return Constraint((normalize(e) for e in self.knowledge), normalize(self.target))

    def render(self) -> str:
        left = ", ".join(render(e) for e in sort_terms(self.knowledge))
        return f"{left} |> {render(self.target)}" if left else f"|> {render(self.target)}"

    def __str__(self) -> str:
        return self.render()


@dataclass(frozen=True)
class ConstraintSystem:
    """Ordered list of constraints."""

    constraints: tuple[Constraint, ...] = ()
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __init__(self, constraints: Iterable[Constraint] = ()) -> None:
        object.__setattr__(self, "constraints", tuple(constraints))
        object.__setattr__(self, "_cache", {})

    def __iter__(self) -> Iterator[Constraint]:
        return iter(self.constraints)

    def __len__(self) -> int:
        return len(self.constraints)

    def __getitem__(self, i: int) -> Constraint:
        return self.constraints[i]

    def terms(self) -> Iterator[Term]:
        for c in self.constraints:
            yield from c.terms()

    def _cached(self, name: str, compute):
        if name not in self._cache:
            self._cache[name] = compute()
        return self._cache[name]

    @property
    def vars(self) -> frozenset[str]:
        return self._cached("vars", lambda: frozenset().union(*(c.vars for c in self.constraints)))

    @property
    def atoms(self) -> frozenset[Term]:
        return self._cached("atoms", lambda: frozenset(atoms(self.terms())))

    @property
    def dag_size(self) -> int:
        return self._cached("dag_size", lambda: dag_size(self.terms()))

    @property
    def edge_count(self) -> int:
        return self._cached("edge_count", lambda: edge_count(self.terms()))

    @property
    def measure(self) -> int:
        """Input size of the DAG encoding: variables times nodes plus edges."""
        return len(self.vars) * self.dag_size + self.edge_count

    def has_aci(self) -> bool:
        return any(u.kind is Kind.ACI for u in subterms(self.terms()))

    def normalized(self) -> ConstraintSystem:
        return self._cached("normalized", lambda: ConstraintSystem(c.normalized() for c in self.constraints))

    def is_ground(self) -> bool:
        return not self.vars

    def extended(self, *more: Constraint) -> ConstraintSystem:
        return ConstraintSystem(self.constraints + tuple(more))

    def render(self) -> str:
        return "\n".join(c.render() for c in self.constraints)

    def __str__(self) -> str:
        return self.render()


def parse_system(text: str) -> ConstraintSystem:
    """One ``t1, ..., tn |> t`` constraint per line; '#' starts a comment."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            knowledge, target = parse_constraint_line(line)
        except ParseError as exc:
            raise ParseError(f"line {lineno}: {exc}", line, exc.pos) from None
        out.append(Constraint(knowledge, target))
    return ConstraintSystem(out)

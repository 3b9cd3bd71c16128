"""Classical Dolev-Yao constraints solved through the ACI theory.

A standard system contains no ACI set.  It is satisfiable in the plain
theory exactly when it is satisfiable with ACI sets, and a model of the
latter becomes a model of the former once every set in its values is
rewritten into right-nested pairs by ``delta``.
"""

from __future__ import annotations

from .deduction import Theory, check_model
from .solver import Budget, SolveResult, Status, _as_system, solve
from .terms import Kind, Term, TermError, pair, rebuild, subterms


class NotStandardError(TermError):
    pass


class ProjectionError(RuntimeError):
    """The projected model failed the Dolev-Yao check (an internal fault)."""


def is_standard(S) -> bool:
    """True iff no ACI set occurs anywhere in the system."""
    return not any(u.kind is Kind.ACI for u in subterms(_as_system(S).terms()))


def delta(t: Term) -> Term:
    """Replace each ACI set by right-nested pairs of its items."""
    memo: dict[Term, Term] = {}

    def go(u: Term) -> Term:
        if not u.args:
            return u
        done = memo.get(u)
        if done is not None:
            return done
        if u.kind is Kind.ACI:
            items = [go(i) for i in u.args]
            out = items[-1]
            for item in reversed(items[:-1]):
                out = pair(item, out)
        else:
            out = rebuild(u, [go(a) for a in u.args])
        memo[u] = out
        return out

    return go(t)


def solve_dy(S, budget: Budget | None = None) -> SolveResult:
    """Decide a standard system in the plain Dolev-Yao theory."""
    S = _as_system(S)
    if not is_standard(S):
        raise NotStandardError("the plain Dolev-Yao pipeline needs a system without ACI sets")
    result = solve(S, budget)
    if result.status is not Status.SAT:
        return result
    projected = {x: delta(v) for x, v in result.model.items()}
    if not check_model(S, projected, Theory.DY):
        raise ProjectionError("projected model rejected by the Dolev-Yao checker")
    return SolveResult(Status.SAT, projected, result.stats)


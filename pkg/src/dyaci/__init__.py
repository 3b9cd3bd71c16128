"""Dolev-Yao intruder deduction with ACI sets: ground derivability, general
constraint solving, the projection to the plain theory, and attack search
against protocol sessions with several local intruders."""

from .constraints import Constraint, ConstraintSystem, parse_system
from .deduction import Theory, check_model, closure_oracle, derivable
from .dy import delta, is_standard, solve_dy
from .protocol import AttackProblem, Receive, Role, Send, encode_equality, find_attack, parse_protocol
from .solver import Budget, SolveResult, Status, brute_solve, solve, verify_certificate
from .syntax import parse_term, parse_terms
from .terms import (
    Term,
    aci,
    aenc,
    apply,
    atom,
    dag_size,
    edge_count,
    elems,
    normalize,
    pair,
    pairing,
    priv,
    quasi_subterms,
    render,
    senc,
    sig,
    subterms,
    var,
)

__version__ = "0.1.0"

__all__ = [
    "AttackProblem",
    "Budget",
    "Constraint",
    "ConstraintSystem",
    "Receive",
    "Role",
    "Send",
    "SolveResult",
    "Status",
    "Term",
    "Theory",
    "aci",
    "aenc",
    "apply",
    "atom",
    "brute_solve",
    "check_model",
    "closure_oracle",
    "dag_size",
    "delta",
    "derivable",
    "edge_count",
    "elems",
    "encode_equality",
    "find_attack",
    "is_standard",
    "normalize",
    "pair",
    "pairing",
    "parse_protocol",
    "parse_system",
    "parse_term",
    "parse_terms",
    "priv",
    "quasi_subterms",
    "render",
    "senc",
    "sig",
    "solve",
    "solve_dy",
    "subterms",
    "var",
    "verify_certificate",
]

import copy
import pickle
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyaci.syntax import parse_term
from dyaci.terms import (
    KeyPositionError,
    Kind,
    SubstitutionError,
    TermError,
    aci,
    aenc,
    apply,
    apply_norm,
    atom,
    compare,
    dag_size,
    edge_count,
    elems,
    is_normalized,
    normalize,
    normalize_substitution,
    pair,
    pairing,
    priv,
    quasi_subterms,
    render,
    root,
    senc,
    sig,
    sort_key,
    sort_terms,
    subterms,
    var,
    variables,
)
from strategies import ATOMS, VARS, ground_terms, open_terms

a, b, c = ATOMS
X, Y = VARS

# the nested example term: {a . {b . a . pair(a, b)} . pair({b . b}, a)}
T = aci([a, aci([b, a, pair(a, b)]), pair(aci([b, b]), a)])


def test_interning_gives_identity():
    assert pair(a, b) is pair(atom("a"), atom("b"))
    assert pair(a, b) is not pair(b, a)
    assert atom("a") is not var("a")


def test_pickle_and_copy_reintern():
    t = senc(pair(a, X), b)
    assert pickle.loads(pickle.dumps(t)) is t
    assert copy.deepcopy(t) is t


def test_concurrent_interning_agrees():
    out = []

    def work():
        out.append(pair(senc(atom("zz1"), atom("zz2")), atom("zz3")))

    threads = [threading.Thread(target=work) for _ in range(8)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    assert all(t is out[0] for t in out)


def test_key_positions():
    with pytest.raises(KeyPositionError):
        aenc(a, pair(b, c))
    with pytest.raises(KeyPositionError):
        priv(pair(a, b))
    with pytest.raises(KeyPositionError):
        sig(a, b)
    assert sig(a, priv(X)).args == (a, priv(X))


def test_empty_set_rejected():
    with pytest.raises(TermError):
        aci([])


def test_root():
    assert root(pair(a, b)) == "pair"
    assert root(aci([a, b])) == "·"
    assert root(a) is a


def test_elems_examples():
    assert elems(T) == {a, b, pair(a, b), pair(aci([b, b]), a)}
    assert elems(a) == {a}
    assert elems(aci([aci([a, b]), a])) == {a, b}


def test_quasi_subterms_example():
    expected = {T, a, b, pair(a, b), pair(aci([b, b]), a), aci([b, b])}
    assert quasi_subterms(T) == expected
    assert quasi_subterms(a) == {a}
    assert quasi_subterms(priv(a)) == {priv(a), a}


def test_subterms_example():
    assert subterms(T) == quasi_subterms(T) | {aci([b, a, pair(a, b)])}
    assert len(subterms(T)) == 7
    assert subterms(pair(a, a)) == {pair(a, a), a}


def test_variables():
    assert variables(pair(X, a)) == {"X"}
    assert variables(T) == frozenset()
    assert variables(senc(X, pair(Y, X))) == {"X", "Y"}


def test_sizes():
    assert dag_size(a) == 1
    assert dag_size(T) == 7
    assert dag_size(pair(a, a)) == 2
    assert edge_count(a) == 0
    assert edge_count(pair(a, a)) == 2


def test_order_examples():
    assert compare(T, T) == 0
    assert compare(a, b) == -1 and compare(b, c) == -1 and compare(c, a) == 1
    # rank order: atoms, variables, priv, pair, senc, aenc, sig, sets
    ladder = [a, X, priv(a), pair(a, a), senc(a, a), aenc(a, a), sig(a, priv(a)), aci([a, b])]
    assert sort_terms(reversed(ladder)) == ladder


def test_normalize_examples():
    n = normalize(T)
    assert n is aci([a, b, pair(a, b), pair(b, a)])
    assert render(n) == "{a . b . pair(a, b) . pair(b, a)}"
    assert normalize(aci([a, a])) is a
    assert normalize(aci([aci([a, b]), c])) is normalize(aci([a, aci([b, c])]))


def test_pairing_examples():
    assert pairing([a, b, c]) is aci([a, b, c])
    assert pairing([T]) is normalize(T)
    with pytest.raises(TermError):
        pairing([])


def test_apply_examples():
    sigma = {"X": senc(pair(a, b), c)}
    assert apply(sigma, aci([X, c])) is aci([senc(pair(a, b), c), c])
    assert apply({}, T) is T
    with pytest.raises(SubstitutionError):
        apply({"X": pair(a, b)}, aenc(a, X))


def test_apply_norm_and_substitution_normalization():
    sigma = {"X": aci([b, a, b])}
    assert apply_norm(sigma, pair(X, X)) is pair(aci([a, b]), aci([a, b]))
    assert normalize_substitution(sigma) == {"X": aci([a, b])}


def test_parse_example_term():
    assert parse_term("{a . {b . a . pair(a,b)} . pair({b.b}, a)}") is T


# -- properties -------------------------------------------------------------


@given(open_terms)
def test_normalize_idempotent(t):
    n = normalize(t)
    assert normalize(n) is n
    assert is_normalized(n)


@given(ground_terms, ground_terms, ground_terms)
def test_aci_axioms(x, y, z):
    assert normalize(aci([x, aci([y, z])])) is normalize(aci([aci([x, y]), z]))
    assert normalize(aci([x, y])) is normalize(aci([y, x]))
    assert normalize(aci([x, x])) is normalize(x)


@given(open_terms)
def test_normal_form_shape(t):
    for u in subterms(normalize(t)):
        if u.kind is Kind.ACI:
            assert len(u.args) >= 2
            assert all(i.kind is not Kind.ACI for i in u.args)
            assert all(compare(p, q) < 0 for p, q in zip(u.args, u.args[1:]))


@given(open_terms)
def test_elems_commute_with_normalize(t):
    assert elems(normalize(t)) == {normalize(e) for e in elems(t)}


@given(open_terms)
def test_subterm_chain(t):
    assert elems(t) <= quasi_subterms(t) <= subterms(t)


@given(open_terms)
def test_normalization_shrinks_dag(t):
    assert dag_size(normalize(t)) <= dag_size(t)


@given(open_terms)
def test_quasi_equals_subterms_on_normal_forms(t):
    n = normalize(t)
    assert quasi_subterms(n) == subterms(n)
    assert all(is_normalized(s) for s in quasi_subterms(n))


@given(open_terms)
def test_edges_below_square(t):
    n = normalize(t)
    assert edge_count(n) < dag_size(n) ** 2


@given(open_terms, st.sampled_from(ATOMS), ground_terms)
def test_substitution_commutes_with_normalization(t, k, v):
    sigma = {"X": v, "Y": k}
    try:
        lhs = normalize(apply(sigma, t))
    except SubstitutionError:
        return
    assert lhs is normalize(apply(normalize_substitution(sigma), normalize(t)))


@given(open_terms, st.sampled_from(ATOMS), st.sampled_from(ATOMS))
def test_subterms_of_instance(t, u, v):
    sigma = {"X": pair(u, v), "Y": u}
    try:
        inst = apply(sigma, t)
    except SubstitutionError:
        return
    xs = variables(t)
    assert subterms(inst) == {apply(sigma, s) for s in subterms(t)} | subterms([sigma[x] for x in xs])


@given(open_terms, open_terms, open_terms)
def test_order_is_strict_total(x, y, z):
    assert (compare(x, y) == 0) == (x is y)
    assert compare(x, y) == -compare(y, x)
    if compare(x, y) < 0 and compare(y, z) < 0:
        assert compare(x, z) < 0


@given(st.lists(open_terms, max_size=6))
def test_sorting_is_idempotent_permutation(ts):
    s = sort_terms(ts)
    assert sorted(s, key=sort_key) == s
    assert set(s) == set(ts)


@given(st.lists(ground_terms, min_size=1, max_size=3), st.lists(ground_terms, min_size=1, max_size=3))
def test_pairing_of_union(t1, t2):
    assert pairing(t1 + t2) is pairing([pairing(t1), pairing(t2)])


@settings(max_examples=200)
@given(open_terms)
def test_render_parse_roundtrip(t):
    assert parse_term(render(t)) is t

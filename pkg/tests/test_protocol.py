from importlib.resources import files

import pytest
from hypothesis import given

from dyaci.constraints import Constraint
from dyaci.deduction import check_model, derivable
from dyaci.protocol import (
    EQ_KEY,
    AttackProblem,
    ProtocolError,
    Receive,
    Role,
    Send,
    Verdict,
    encode_equality,
    find_attack,
    initial_configuration,
    interleavings,
    parse_protocol,
    step,
    symbolic_executions,
    violates_monotonicity,
)
from dyaci.solver import Status, solve
from dyaci.terms import aci, apply_norm, atom, normalize, pair, senc, var
from strategies import ground_terms

a, b, c = atom("a"), atom("b"), atom("c")


def scenario(name: str) -> AttackProblem:
    return parse_protocol(files("dyaci").joinpath(f"scenarios/{name}.proto").read_text())


def problem(roles, layout, knowledge=None, secrets=(), bound=None, agents=("A", "B", "C", "D")):
    return AttackProblem(agents, tuple(roles), layout, knowledge or {}, tuple(secrets), bound).validate()


# -- transitions ------------------------------------------------------------


def test_intruder_receive_adds_constraint():
    p = problem([Role("B", (Receive("A", var("X")),))], {("A", "B"): "i"}, {"i": frozenset({a})})
    [(t, nxt)] = step(p, initial_configuration(p))
    assert t.rule == 1
    assert nxt.constraints == (Constraint([a], var("X")),)
    assert nxt.knowledge == initial_configuration(p).knowledge


def test_intruder_send_grows_knowledge():
    p = problem([Role("A", (Send("B", a),))], {("A", "B"): "i"})
    [(t, nxt)] = step(p, initial_configuration(p))
    assert t.rule == 2
    assert nxt.knowledge_of("i") == {a}
    assert nxt.constraints == ()


def test_free_channel_queue_and_equality():
    p = problem([Role("A", (Send("B", pair(a, b)),)), Role("B", (Receive("A", pair(var("X"), b)),))], {})
    start = initial_configuration(p)
    succ = step(p, start)
    # B cannot receive from an empty queue
    assert [t.rule for t, _ in succ] == [3]
    queued = succ[0][1]
    assert queued.queue(("A", "B")) == (pair(a, b),)
    [(t, done)] = step(p, queued)
    assert t.rule == 4
    assert done.queue(("A", "B")) == ()
    assert done.constraints == (encode_equality(pair(a, b), pair(var("X"), b)),)


def test_free_channel_mismatch_blocks():
    p = problem([Role("A", (Send("B", a),)), Role("B", (Receive("A", b),))], {})
    queued = step(p, initial_configuration(p))[0][1]
    assert step(p, queued) == []


def test_transition_changes_one_thing():
    p = scenario("eshop")
    for config in symbolic_executions(p):
        for t, nxt in step(p, config):
            moved = [i for i, (x, y) in enumerate(zip(config.progress, nxt.progress)) if x != y]
            assert len(moved) == 1 and nxt.progress[moved[0]] == config.progress[moved[0]] + 1
            changes = [
                nxt.knowledge != config.knowledge,
                nxt.queues != config.queues,
                nxt.constraints != config.constraints,
            ]
            assert sum(changes) == (2 if t.rule == 4 else 1)
            assert len(nxt.constraints) - len(config.constraints) == (1 if t.rule in (1, 4) else 0)


# -- executions -------------------------------------------------------------


def test_single_send():
    p = problem([Role("A", (Send("B", a),))], {("A", "B"): "i"})
    configs = list(symbolic_executions(p))
    assert len(configs) == 2
    assert configs[-1].knowledge_of("i") == {a}


def test_shuffle_count():
    roles = [Role("A", (Send("B", a), Send("B", b))), Role("C", (Send("D", a), Send("D", c)))]
    p = problem(roles, {("A", "B"): "i", ("C", "D"): "j"})
    assert len(list(interleavings(p))) == 6


def test_bound_zero():
    p = problem([Role("A", (Send("B", a),))], {("A", "B"): "i"}, bound=0)
    assert [c.progress for c in symbolic_executions(p)] == [(0,)]


def test_executions_are_unique_and_bounded():
    p = scenario("eshop")
    keys = [c.state_key() for c in symbolic_executions(p)]
    assert len(keys) == len(set(keys))
    assert all(sum(k[0]) <= p.length_bound for k in keys)


# -- attacks ----------------------------------------------------------------


def test_eshop_attack():
    result = find_attack(scenario("eshop"))
    assert result.verdict is Verdict.ATTACK
    m = result.report.model
    assert m["DItemID"] is atom("gilded") and m["DAddr"] is atom("addr")
    assert m["IAddr"] is atom("addr")
    assert m["IComm"] is normalize(aci([atom("gilded"), atom("cmnts")]))
    assert m["DComm"] is normalize(aci([atom("simple"), atom("cmnts")]))


def test_report_is_verified():
    for name in ("eshop", "routers", "leaky"):
        report = find_attack(scenario(name)).report
        assert check_model(report.system, report.model)
        pooled = [apply_norm(report.model, t) for t in report.configuration.pooled_knowledge()]
        assert derivable(pooled, report.secret)
        assert "confirmed" in report.render()


def test_no_intruder_channels_is_safe():
    assert find_attack(scenario("safe")).verdict is Verdict.SAFE


def test_secret_already_known():
    result = find_attack(scenario("leaky"))
    assert result.verdict is Verdict.ATTACK
    assert result.report.trace == ()


def test_pooling_needed():
    p = scenario("routers")
    result = find_attack(p)
    assert result.verdict is Verdict.ATTACK
    final = result.report.configuration
    for intruder in p.intruders:
        assert not derivable(final.knowledge_of(intruder), atom("secret"))


def test_two_intruders_break_monotonicity():
    report = find_attack(scenario("routers")).report
    assert violates_monotonicity(report.system)
    assert solve(report.system).status is Status.SAT


# -- equality encoding ------------------------------------------------------


def test_encode_equality_examples():
    I = aci([atom("simple"), var("IAddr"), var("IComm")])
    D = aci([var("DItemID"), var("DAddr"), var("DComm")])
    assert encode_equality(I, D) == Constraint([senc(I, EQ_KEY)], senc(D, EQ_KEY))
    assert solve([encode_equality(pair(var("X"), a), pair(var("X"), a))]).sat
    assert solve([encode_equality(a, b)]).status is Status.UNSAT


@given(ground_terms, ground_terms)
def test_encode_equality_exact(t1, t2):
    c = encode_equality(t1, t2)
    holds = derivable([normalize(e) for e in c.knowledge], normalize(c.target))
    assert holds == (normalize(t1) is normalize(t2))


# -- validation and parsing -------------------------------------------------


def test_unbound_send_variable():
    with pytest.raises(ProtocolError, match="not received"):
        problem([Role("A", (Send("B", var("X")),))], {})


def test_shared_variables():
    roles = [Role("A", (Receive("B", var("X")),)), Role("B", (Receive("A", var("X")),))]
    with pytest.raises(ProtocolError, match="shared"):
        problem(roles, {})


def test_bound_too_large():
    with pytest.raises(ProtocolError):
        problem([Role("A", (Send("B", a),))], {}, bound=2)


def test_nonground_secret():
    with pytest.raises(ProtocolError):
        problem([], {}, secrets=[var("X")])


def test_reserved_atom():
    with pytest.raises(ProtocolError, match="reserved"):
        problem([Role("A", (Send("B", atom("@eqkey")),))], {})


def test_parse_errors():
    with pytest.raises(ProtocolError, match="line 2"):
        parse_protocol("AGENTS\n A -> B\n")
    with pytest.raises(ProtocolError, match="twice"):
        parse_protocol("AGENTS\nA, B\nCHANNELS\nA -> B controlled_by i\nA -> B\n")
    with pytest.raises(ProtocolError, match="outside"):
        parse_protocol("A, B\n")


def test_parse_scenario():
    p = scenario("eshop")
    assert p.agents == ("Client", "Interface", "Delivery", "Courier")
    assert p.controller("Client", "Interface") == "alice"
    assert p.controller("Interface", "Delivery") is None
    assert p.secrets == (atom("parcel"),)
    assert len(p.initial_knowledge["alice"]) == 6

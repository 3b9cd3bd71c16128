"""Protocol sessions attacked by several non-communicating local intruders.

Each directed channel between two agents is either free or controlled by
exactly one intruder.  Executions are explored symbolically: receiving on
a controlled channel adds a deducibility constraint over the controlling
intruder's current knowledge, sending on a controlled channel extends that
knowledge, and free channels carry messages through FIFO queues, a
dequeue adding an equality constraint between the message and the
receiver's pattern.  The intruders pool their knowledge only after the
session, when a secret is checked against the union.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping, Union

from .constraints import Constraint, ConstraintSystem
from .deduction import check_model, derivable
from .solver import Budget, SolveResult, Status, could_match, solve
from .syntax import ParseError, parse_term, parse_terms
from .terms import Term, TermError, apply_norm, atom, normalize, render, senc, subterms, variables

log = logging.getLogger(__name__)

EQ_KEY = atom("@eqkey")


class ProtocolError(ValueError):
    pass


@dataclass(frozen=True)
class Receive:
    sender: str
    pattern: Term

    def render(self) -> str:
        return f"recv from {self.sender}: {render(self.pattern)}"


@dataclass(frozen=True)
class Send:
    recipient: str
    template: Term

    def render(self) -> str:
        return f"send to {self.recipient}: {render(self.template)}"


Action = Union[Receive, Send]


@dataclass(frozen=True)
class Role:
    agent: str
    actions: tuple[Action, ...]

    @property
    def vars(self) -> frozenset[str]:
        return variables([a.pattern if isinstance(a, Receive) else a.template for a in self.actions])


@dataclass(frozen=True)
class AttackProblem:
    agents: tuple[str, ...]
    roles: tuple[Role, ...]
    layout: Mapping[tuple[str, str], str]
    initial_knowledge: Mapping[str, frozenset[Term]]
    secrets: tuple[Term, ...]
    bound: int | None = None

    @property
    def intruders(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.initial_knowledge) | set(self.layout.values())))

    @property
    def total_actions(self) -> int:
        return sum(len(r.actions) for r in self.roles)

    @property
    def length_bound(self) -> int:
        return self.total_actions if self.bound is None else self.bound

    def controller(self, sender: str, recipient: str) -> str | None:
        return self.layout.get((sender, recipient))

    def validate(self) -> AttackProblem:
        agents = set(self.agents)
        seen_vars: dict[str, str] = {}
        for role in self.roles:
            if role.agent not in agents:
                raise ProtocolError(f"role for undeclared agent {role.agent}")
            bound_vars: set[str] = set()
            for a in role.actions:
                peer = a.sender if isinstance(a, Receive) else a.recipient
                if peer not in agents:
                    raise ProtocolError(f"{role.agent}: unknown agent {peer}")
                if isinstance(a, Receive):
                    bound_vars |= a.pattern.var_names
                else:
                    free = a.template.var_names - bound_vars
                    if free:
                        raise ProtocolError(
                            f"{role.agent}: sent variables {', '.join(sorted(free))} were not received before"
                        )
            for x in role.vars:
                if x in seen_vars:
                    raise ProtocolError(f"variable {x} shared by roles {seen_vars[x]} and {role.agent}")
                seen_vars[x] = role.agent
        if len({r.agent for r in self.roles}) != len(self.roles):
            raise ProtocolError("at most one role per agent")
        for (a, b) in self.layout:
            if a not in agents or b not in agents:
                raise ProtocolError(f"channel {a} -> {b} uses an undeclared agent")
        for s in self.secrets:
            if not s.ground:
                raise ProtocolError(f"secret {render(s)} is not ground")
        if self.bound is not None and not 0 <= self.bound <= self.total_actions:
            raise ProtocolError("the execution length bound must lie between 0 and the number of actions")
        for t in self._all_terms():
            for u in subterms(t):
                if u.is_atom and u.name.startswith("@"):
                    raise ProtocolError(f"atom {u.name} is reserved")
        return self

    def _all_terms(self) -> Iterator[Term]:
        for role in self.roles:
            for a in role.actions:
                yield a.pattern if isinstance(a, Receive) else a.template
        for k in self.initial_knowledge.values():
            yield from k
        yield from self.secrets


# ---------------------------------------------------------------------------
# configurations and transitions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Transition:
    rule: int
    agent: str
    action: Action
    intruder: str | None = None

    def render(self) -> str:
        how = {
            1: f"intruder {self.intruder} supplies the message",
            2: f"intruder {self.intruder} intercepts the message",
            3: "message queued on a free channel",
            4: "message taken from a free channel",
        }[self.rule]
        return f"{self.agent}: {self.action.render()}    [{how}]"


@dataclass(frozen=True)
class Configuration:
    progress: tuple[int, ...]
    knowledge: tuple[tuple[str, frozenset[Term]], ...]
    queues: tuple[tuple[tuple[str, str], tuple[Term, ...]], ...]
    constraints: tuple[Constraint, ...]
    trace: tuple[Transition, ...] = field(default=(), compare=False)

    @property
    def system(self) -> ConstraintSystem:
        return ConstraintSystem(self.constraints)

    def knowledge_of(self, intruder: str) -> frozenset[Term]:
        return dict(self.knowledge).get(intruder, frozenset())

    def pooled_knowledge(self) -> frozenset[Term]:
        out: frozenset[Term] = frozenset()
        for _, k in self.knowledge:
            out |= k
        return out

    def queue(self, channel: tuple[str, str]) -> tuple[Term, ...]:
        return dict(self.queues).get(channel, ())

    def state_key(self):
        return (self.progress, self.knowledge, self.queues, frozenset(self.constraints))


def initial_configuration(p: AttackProblem) -> Configuration:
    knowledge = tuple((i, frozenset(normalize(t) for t in p.initial_knowledge.get(i, ()))) for i in p.intruders)
    return Configuration(tuple(0 for _ in p.roles), knowledge, (), ())


def encode_equality(t1: Term, t2: Term, key: Term = EQ_KEY) -> Constraint:
    """Constraint satisfied exactly by the substitutions equating t1 and t2 modulo ACI."""
    return Constraint([senc(t1, key)], senc(t2, key))


def _with_queue(queues, channel, content):
    d = dict(queues)
    if content:
        d[channel] = content
    else:
        d.pop(channel, None)
    return tuple(sorted(d.items()))


def step(p: AttackProblem, c: Configuration) -> list[tuple[Transition, Configuration]]:
    """All successors of a configuration, one per enabled role action."""
    out = []
    for i, role in enumerate(p.roles):
        pos = c.progress[i]
        if pos >= len(role.actions):
            continue
        action = role.actions[pos]
        progress = c.progress[:i] + (pos + 1,) + c.progress[i + 1 :]
        if isinstance(action, Receive):
            channel = (action.sender, role.agent)
            intruder = p.controller(*channel)
            if intruder is not None:
                t = Transition(1, role.agent, action, intruder)
                constraint = Constraint(c.knowledge_of(intruder), action.pattern)
                nxt = Configuration(progress, c.knowledge, c.queues, c.constraints + (constraint,), c.trace + (t,))
            else:
                queue = c.queue(channel)
                if not queue or not could_match(normalize(queue[0]), normalize(action.pattern)):
                    continue
                t = Transition(4, role.agent, action)
                constraint = encode_equality(queue[0], action.pattern)
                queues = _with_queue(c.queues, channel, queue[1:])
                nxt = Configuration(progress, c.knowledge, queues, c.constraints + (constraint,), c.trace + (t,))
        else:
            channel = (role.agent, action.recipient)
            intruder = p.controller(*channel)
            if intruder is not None:
                t = Transition(2, role.agent, action, intruder)
                knowledge = tuple(
                    (j, k | {normalize(action.template)}) if j == intruder else (j, k) for j, k in c.knowledge
                )
                nxt = Configuration(progress, knowledge, c.queues, c.constraints, c.trace + (t,))
            else:
                t = Transition(3, role.agent, action)
                queues = _with_queue(c.queues, channel, c.queue(channel) + (action.template,))
                nxt = Configuration(progress, c.knowledge, queues, c.constraints, c.trace + (t,))
        out.append((t, nxt))
    return out


def symbolic_executions(p: AttackProblem) -> Iterator[Configuration]:
    """Every configuration reachable within the length bound, each once, depth first."""
    limit = p.length_bound
    seen = set()

    def go(c: Configuration) -> Iterator[Configuration]:
        key = c.state_key()
        if key in seen:
            return
        seen.add(key)
        yield c
        if len(c.trace) >= limit:
            return
        for _, nxt in step(p, c):
            yield from go(nxt)

    yield from go(initial_configuration(p))


def interleavings(p: AttackProblem) -> Iterator[tuple[Transition, ...]]:
    """Maximal transition sequences within the length bound, without merging."""
    limit = p.length_bound

    def go(c: Configuration) -> Iterator[tuple[Transition, ...]]:
        succ = step(p, c) if len(c.trace) < limit else []
        if not succ:
            yield c.trace
            return
        for _, nxt in succ:
            yield from go(nxt)

    yield from go(initial_configuration(p))


# ---------------------------------------------------------------------------
# attack search
# ---------------------------------------------------------------------------


class Verdict(Enum):
    ATTACK = "ATTACK"
    SAFE = "SAFE"
    INDETERMINATE = "INDETERMINATE"


@dataclass
class AttackReport:
    secret: Term
    configuration: Configuration
    system: ConstraintSystem
    model: dict[str, Term]
    solve: SolveResult

    @property
    def trace(self) -> tuple[Transition, ...]:
        return self.configuration.trace

    def concrete_trace(self) -> list[str]:
        lines = []
        for t in self.trace:
            term = t.action.pattern if isinstance(t.action, Receive) else t.action.template
            lines.append(f"{t.agent}: {type(t.action).__name__.lower()} {render(apply_norm(self.model, term))}")
        return lines

    def render(self) -> str:
        out = [f"attack on secret {render(self.secret)}", "trace:"]
        out += [f"  {i + 1}. {t.render()}" for i, t in enumerate(self.trace)]
        out.append("substitution:")
        out += [f"  {x} = {render(v)}" for x, v in sorted(self.model.items())]
        out.append("concrete messages:")
        out += [f"  {line}" for line in self.concrete_trace()]
        out.append(f"pooled intruder knowledge derives {render(self.secret)}: confirmed")
        return "\n".join(out)


@dataclass
class AttackResult:
    verdict: Verdict
    report: AttackReport | None = None
    checked: int = 0


def find_attack(p: AttackProblem, budget: Budget | None = None) -> AttackResult:
    """Search for an execution after which the pooled knowledge derives a secret."""
    p.validate()
    indeterminate = False
    cache: dict = {}
    checked = 0
    for secret in p.secrets:
        for config in symbolic_executions(p):
            goal = Constraint(config.pooled_knowledge(), secret)
            system = config.system.extended(goal)
            key = frozenset(system.constraints)
            result = cache.get(key)
            if result is None:
                checked += 1
                result = cache[key] = solve(system, budget)
            if result.status is Status.INDETERMINATE:
                indeterminate = True
                continue
            if result.status is Status.SAT:
                model = result.model
                if not check_model(system, model):
                    raise AssertionError("solver returned a model that fails verification")
                pooled = [apply_norm(model, t) for t in config.pooled_knowledge()]
                if not derivable(pooled, normalize(secret)):
                    raise AssertionError("secret not derivable from the instantiated pooled knowledge")
                report = AttackReport(secret, config, system, model, result)
                return AttackResult(Verdict.ATTACK, report, checked)
    return AttackResult(Verdict.INDETERMINATE if indeterminate else Verdict.SAFE, None, checked)


def violates_monotonicity(S: ConstraintSystem | Iterable[Constraint]) -> bool:
    """True if some earlier knowledge set is not included in a later one."""
    cs = list(S)
    return any(not cs[i].knowledge <= cs[j].knowledge for i in range(len(cs)) for j in range(i + 1, len(cs)))


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

_SECTIONS = ("AGENTS", "INTRUDERS", "CHANNELS", "ROLES", "SECRETS", "BOUND")
_NAME = r"[A-Za-z_][A-Za-z0-9_]*"
_CHANNEL = re.compile(rf"^({_NAME})\s*->\s*({_NAME})(?:\s+controlled_by\s+({_NAME}))?$")
_ACTION = re.compile(rf"^(recv\s+from|send\s+to)\s+({_NAME})\s*:\s*(.+)$")
_ROLE = re.compile(rf"^({_NAME})\s*:$")
_INTRUDER = re.compile(rf"^({_NAME})\s*:(.*)$")


def parse_protocol(text: str) -> AttackProblem:
    """Read a protocol description (see the bundled scenarios for examples)."""
    section = None
    agents: list[str] = []
    knowledge: dict[str, frozenset[Term]] = {}
    layout: dict[tuple[str, str], str] = {}
    roles: list[tuple[str, list[Action]]] = []
    secrets: list[Term] = []
    bound = None
    secret_text: list[str] = []

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line in _SECTIONS:
            section = line
            continue
        try:
            if section == "AGENTS":
                names = [a for a in re.split(r"[\s,]+", line) if a]
                bad = [a for a in names if not re.fullmatch(_NAME, a)]
                if bad:
                    raise ProtocolError(f"invalid agent name {bad[0]!r}")
                agents += names
            elif section == "INTRUDERS":
                m = _INTRUDER.match(line)
                if not m:
                    raise ProtocolError("expected 'name: term, ...'")
                name = m.group(1)
                knowledge[name] = knowledge.get(name, frozenset()) | frozenset(parse_terms(m.group(2)))
            elif section == "CHANNELS":
                m = _CHANNEL.match(line)
                if not m:
                    raise ProtocolError("expected 'A -> B [controlled_by I]'")
                a, b, intruder = m.groups()
                if (a, b) in layout:
                    raise ProtocolError(f"channel {a} -> {b} declared twice")
                if intruder is not None:
                    layout[(a, b)] = intruder
            elif section == "ROLES":
                m = _ROLE.match(line)
                if m:
                    roles.append((m.group(1), []))
                    continue
                m = _ACTION.match(line)
                if not m or not roles:
                    raise ProtocolError("expected 'Agent:' or 'recv from A: term' / 'send to B: term'")
                kind, peer, term_text = m.groups()
                t = parse_term(term_text)
                roles[-1][1].append(Receive(peer, t) if kind.startswith("recv") else Send(peer, t))
            elif section == "SECRETS":
                secret_text.append(line)
            elif section == "BOUND":
                bound = int(line)
            else:
                raise ProtocolError("content outside of a section")
        except (ProtocolError, ParseError, TermError, ValueError) as exc:
            raise ProtocolError(f"line {lineno}: {exc}") from None
    try:
        secrets = parse_terms(", ".join(secret_text)) if secret_text else []
    except ParseError as exc:
        raise ProtocolError(f"SECRETS: {exc}") from None
    problem = AttackProblem(
        agents=tuple(agents),
        roles=tuple(Role(a, tuple(acts)) for a, acts in roles),
        layout=layout,
        initial_knowledge=knowledge,
        secrets=tuple(secrets),
        bound=bound,
    )
    return problem.validate()

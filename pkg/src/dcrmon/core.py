"""Timed DCR graphs with data and roles: enabledness, execution and time.

All operations are pure: they read a :class:`Marking` and return a new one.
Ticks are non-negative integers; ``INFINITE`` stands for "no deadline".
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Optional, Union

from .errors import (
    CyclicNesting,
    DeadlineViolation,
    MissingInput,
    NotEnabled,
    UnexpectedInput,
    UnknownEvent,
    UnknownGroup,
    UnknownRole,
)
from .expr import TRUE, Expr, Value, eval_expr, eval_guard

INFINITE = math.inf
ANY = None  # role wildcard: skips the role check

Deadline = Union[int, float]


class RelationKind(str, Enum):
    CONDITION = "condition"
    RESPONSE = "response"
    CANCEL = "cancel"
    MILESTONE = "milestone"
    INCLUDE = "include"
    EXCLUDE = "exclude"


@dataclass(frozen=True)
class Label:
    roles: frozenset
    action: str


@dataclass(frozen=True)
class Input:
    pass


@dataclass(frozen=True)
class Computation:
    expr: Expr


EventKind = Union[Input, Computation]


@dataclass(frozen=True)
class Event:
    id: str
    label: Label
    kind: EventKind = Input()


@dataclass(frozen=True)
class Relation:
    kind: RelationKind
    source: str
    target: str
    guard: Expr = TRUE
    delay: int = 0
    deadline: Deadline = INFINITE  # placement is checked by validate_model


@dataclass(frozen=True)
class Marking:
    executed: dict = field(default_factory=dict)   # event -> ticks since last execution
    pending: dict = field(default_factory=dict)    # event -> remaining ticks or INFINITE
    included: frozenset = frozenset()
    values: dict = field(default_factory=dict)     # event -> Value

    def __post_init__(self):
        object.__setattr__(self, "included", frozenset(self.included))

    def is_pending(self, event):
        return event in self.pending


@dataclass(frozen=True)
class NotIncluded:
    def __str__(self):
        return "not included"


@dataclass(frozen=True)
class ConditionUnmet:
    source: str
    required_delay: int
    elapsed: Optional[int]

    def __str__(self):
        if self.elapsed is None:
            return f"condition {self.source} never executed"
        return f"condition {self.source} executed {self.elapsed} ticks ago, needs {self.required_delay}"


@dataclass(frozen=True)
class MilestoneBlocked:
    source: str

    def __str__(self):
        return f"milestone {self.source} is pending"


@dataclass(frozen=True)
class RoleDenied:
    role: str

    def __str__(self):
        return f"role {self.role} may not execute it"


BlockReason = Union[NotIncluded, ConditionUnmet, MilestoneBlocked, RoleDenied]


@dataclass(frozen=True)
class EnabledVerdict:
    enabled: bool
    blockers: tuple = ()


@dataclass(frozen=True)
class OverdueAlert:
    event: str
    deadline: int   # remaining ticks before this advance
    overdue_by: int


class TimeMode(str, Enum):
    STRICT = "strict"
    PERMISSIVE = "permissive"


@dataclass(frozen=True)
class _Index:
    conditions: dict   # target -> [Relation]
    milestones: dict   # target -> [Relation]
    effects: dict      # source -> [Relation] of response/cancel/include/exclude


@dataclass(frozen=True, eq=False)
class DcrGraph:
    """Events, relations and (possibly nested) groups.

    Relation endpoints may name groups; the engine always works on the
    flattened relation list, so callers need not flatten first.
    """
    events: dict = field(default_factory=dict)        # id -> Event
    relations: tuple = ()
    groups: dict = field(default_factory=dict)        # group id -> frozenset of member ids
    roles: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "relations", tuple(self.relations))
        object.__setattr__(self, "roles", frozenset(self.roles))
        object.__setattr__(self, "groups", {g: frozenset(m) for g, m in self.groups.items()})

    def __eq__(self, other):
        if not isinstance(other, DcrGraph):
            return NotImplemented
        return (self.events == other.events and self.relations == other.relations
                and self.groups == other.groups and self.roles == other.roles)

    __hash__ = None

    @cached_property
    def _index(self):
        conditions, milestones, effects = {}, {}, {}
        for r in _flat_relations(self):
            if r.kind is RelationKind.CONDITION:
                conditions.setdefault(r.target, []).append(r)
            elif r.kind is RelationKind.MILESTONE:
                milestones.setdefault(r.target, []).append(r)
            else:
                effects.setdefault(r.source, []).append(r)
        return _Index(conditions, milestones, effects)


def members(graph: DcrGraph, node: str, _trail=()) -> list[str]:
    """Leaf events under ``node`` (itself, if it is an event), in sorted order."""
    if node in graph.events:
        return [node]
    if node not in graph.groups:
        raise UnknownGroup(node)
    if node in _trail:
        raise CyclicNesting(list(_trail[_trail.index(node):]) + [node])
    out = []
    for child in sorted(graph.groups[node]):
        for e in members(graph, child, _trail + (node,)):
            if e not in out:
                out.append(e)
    return out


def _flat_relations(graph):
    if not graph.groups:
        return graph.relations
    out = []
    for r in graph.relations:
        for s in members(graph, r.source):
            for t in members(graph, r.target):
                out.append(replace(r, source=s, target=t))
    return tuple(out)


def flatten(graph: DcrGraph) -> DcrGraph:
    """Replace every relation with a group endpoint by one relation per member event.

    The group map is kept for reference, but no relation names a group any more.
    """
    for g in graph.groups:
        members(graph, g)
    for r in graph.relations:
        members(graph, r.source)
        members(graph, r.target)
    return DcrGraph(events=graph.events, relations=_flat_relations(graph),
                    groups=graph.groups, roles=graph.roles)


def _check_event(graph, event):
    if event not in graph.events:
        raise UnknownEvent(event)


def _check_role(graph, role):
    if role is not ANY and role not in graph.roles:
        raise UnknownRole(role)


def is_enabled(graph: DcrGraph, marking: Marking, event: str, role=ANY) -> EnabledVerdict:
    _check_event(graph, event)
    _check_role(graph, role)
    blockers = []
    if role is not ANY and role not in graph.events[event].label.roles:
        blockers.append(RoleDenied(role))
    if event not in marking.included:
        blockers.append(NotIncluded())
    index = graph._index
    for r in index.conditions.get(event, ()):
        if r.source in marking.included and eval_guard(r.guard, marking):
            elapsed = marking.executed.get(r.source)
            if elapsed is None or elapsed < r.delay:
                blockers.append(ConditionUnmet(r.source, r.delay, elapsed))
    for r in index.milestones.get(event, ()):
        if r.source in marking.included and eval_guard(r.guard, marking):
            if r.source in marking.pending:
                blockers.append(MilestoneBlocked(r.source))
    return EnabledVerdict(not blockers, tuple(blockers))


def enabled_events(graph: DcrGraph, marking: Marking, role=ANY) -> set[str]:
    _check_role(graph, role)
    return {e for e in graph.events if is_enabled(graph, marking, e, role).enabled}


def execute(graph: DcrGraph, marking: Marking, event: str, role=ANY,
            value: Optional[Value] = None) -> Marking:
    """Execute ``event`` and return the successor marking.

    Guards and the computed value are evaluated on the marking *before*
    execution. Inclusion wins over exclusion, and cancellation wins over a
    response aimed at the same target.
    """
    verdict = is_enabled(graph, marking, event, role)
    if not verdict.enabled:
        raise NotEnabled(event, verdict)
    kind = graph.events[event].kind
    if isinstance(kind, Input):
        if value is None:
            raise MissingInput(f"{event} is an input event and needs a value")
        new_value = value
    else:
        if value is not None:
            raise UnexpectedInput(f"{event} is a computation event and takes no input")
        new_value = eval_expr(kind.expr, marking)

    responses, cancelled, excluded, included = {}, set(), set(), set()
    for r in graph._index.effects.get(event, ()):
        if not eval_guard(r.guard, marking):
            continue
        if r.kind is RelationKind.RESPONSE:
            responses[r.target] = min(responses.get(r.target, INFINITE), r.deadline)
        elif r.kind is RelationKind.CANCEL:
            cancelled.add(r.target)
        elif r.kind is RelationKind.INCLUDE:
            included.add(r.target)
        else:
            excluded.add(r.target)

    executed = dict(marking.executed)
    executed[event] = 0
    pending = dict(marking.pending)
    pending.pop(event, None)
    for target, deadline in responses.items():
        pending[target] = min(pending.get(target, INFINITE), deadline)
    for target in cancelled:
        pending.pop(target, None)
    values = dict(marking.values)
    values[event] = new_value
    return Marking(executed=executed, pending=pending,
                   included=(marking.included - excluded) | included, values=values)


def advance_time(graph: DcrGraph, marking: Marking, n: int,
                 mode: TimeMode = TimeMode.STRICT) -> tuple[Marking, list[OverdueAlert]]:
    """Let ``n`` ticks pass.

    Strict mode refuses to pass the deadline of an included pending event;
    permissive mode lets it lapse, pins the deadline at 0 and reports it.
    """
    if n < 0:
        raise ValueError(f"cannot advance by a negative amount ({n})")
    mode = TimeMode(mode)
    crossed = sorted(e for e, d in marking.pending.items()
                     if e in marking.included and d != INFINITE and d < n)
    if crossed and mode is TimeMode.STRICT:
        raise DeadlineViolation(crossed)
    alerts = [OverdueAlert(e, marking.pending[e], n - marking.pending[e]) for e in crossed]
    if n == 0:
        return marking, alerts
    executed = {e: t + n for e, t in marking.executed.items()}
    pending = {e: d if d == INFINITE else max(0, d - n) for e, d in marking.pending.items()}
    return replace(marking, executed=executed, pending=pending), alerts


def is_accepting(graph: DcrGraph, marking: Marking) -> bool:
    return not any(e in marking.included for e in marking.pending)


def pending_included(marking: Marking) -> list[str]:
    return sorted(e for e in marking.pending if e in marking.included)

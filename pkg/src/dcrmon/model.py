"""JSON model documents: a DCR graph plus its explicit initial marking.

See ``docs/model-format.md`` for the schema; ``fixtures/escrow/model.json``
is the normative example.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

from .core import (
    INFINITE,
    Computation,
    DcrGraph,
    Event,
    Input,
    Label,
    Marking,
    Relation,
    RelationKind,
)
from .errors import CyclicNesting, DcrError, DcrSyntaxError, SchemaError, UnknownGroup
from .expr import TRUE, parse_expr, parse_duration, pretty, referenced_events, value_kind
from . import core

SCHEMA_VERSION = "dcrmon/model@1"


@dataclass(frozen=True)
class Diagnostic:
    path: str
    message: str

    def __str__(self):
        return f"{self.path}: {self.message}"


@dataclass(frozen=True)
class ModelDocument:
    graph: DcrGraph
    initial: Marking
    name: str = ""
    description: str = ""
    tick_unit: str = "second"


def _expect(obj, kind, path):
    if not isinstance(obj, kind):
        names = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        raise SchemaError(path, f"expected {names}, got {type(obj).__name__}")
    return obj


def _ident(obj, path):
    if not isinstance(obj, str) or not obj:
        raise SchemaError(path, "expected a non-empty identifier")
    return obj


def _duration(obj, path):
    try:
        return parse_duration(obj)
    except DcrSyntaxError as exc:
        raise SchemaError(path, str(exc)) from None


def _deadline(obj, path):
    if obj is None or obj == "infinite":
        return INFINITE
    return _duration(obj, path)


def _expression(obj, path):
    _expect(obj, str, path)
    try:
        return parse_expr(obj)
    except DcrSyntaxError as exc:
        raise SchemaError(path, f"bad expression: {exc}") from None


def _value(obj, path):
    if isinstance(obj, (bool, int, str)):
        return obj
    raise SchemaError(path, f"values must be integers, booleans or strings, got {obj!r}")


_EVENT_KEYS = {"id", "action", "roles", "kind", "expression"}
_RELATION_KEYS = {"kind", "source", "target", "guard", "delay", "deadline"}


def _unknown_keys(obj, allowed, path):
    extra = set(obj) - allowed
    if extra:
        raise SchemaError(path, f"unknown keys {sorted(extra)}")


def document_from_dict(data: Any, *, validate: bool = True) -> ModelDocument:
    _expect(data, dict, "$")
    version = data.get("schema", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaError("$.schema", f"unsupported schema {version!r} (want {SCHEMA_VERSION!r})")

    events = {}
    for i, ev in enumerate(_expect(data.get("events", []), list, "$.events")):
        path = f"$.events[{i}]"
        _expect(ev, dict, path)
        _unknown_keys(ev, _EVENT_KEYS, path)
        eid = _ident(ev.get("id"), path + ".id")
        if eid in events:
            raise SchemaError(path + ".id", f"duplicate event {eid!r}")
        roles = _expect(ev.get("roles", []), list, path + ".roles")
        for j, r in enumerate(roles):
            _ident(r, f"{path}.roles[{j}]")
        kind = ev.get("kind", "input")
        if kind == "input":
            if "expression" in ev:
                raise SchemaError(path + ".expression", "input events take no expression")
            event_kind = Input()
        elif kind == "computation":
            if "expression" not in ev:
                raise SchemaError(path, "computation events need an expression")
            event_kind = Computation(_expression(ev["expression"], path + ".expression"))
        else:
            raise SchemaError(path + ".kind", f"expected 'input' or 'computation', got {kind!r}")
        action = _ident(ev.get("action", eid), path + ".action")
        events[eid] = Event(eid, Label(frozenset(roles), action), event_kind)

    relations = []
    for i, rel in enumerate(_expect(data.get("relations", []), list, "$.relations")):
        path = f"$.relations[{i}]"
        _expect(rel, dict, path)
        _unknown_keys(rel, _RELATION_KEYS, path)
        try:
            kind = RelationKind(rel.get("kind"))
        except ValueError:
            raise SchemaError(path + ".kind", f"unknown relation kind {rel.get('kind')!r}") from None
        guard = _expression(rel["guard"], path + ".guard") if "guard" in rel else TRUE
        relations.append(Relation(
            kind=kind,
            source=_ident(rel.get("source"), path + ".source"),
            target=_ident(rel.get("target"), path + ".target"),
            guard=guard,
            delay=_duration(rel["delay"], path + ".delay") if "delay" in rel else 0,
            deadline=_deadline(rel["deadline"], path + ".deadline") if "deadline" in rel else INFINITE,
        ))

    groups = {}
    for gid, mem in _expect(data.get("groups", {}), dict, "$.groups").items():
        path = f"$.groups.{gid}"
        _expect(mem, list, path)
        groups[gid] = frozenset(_ident(m, f"{path}[{j}]") for j, m in enumerate(mem))

    roles = _expect(data.get("roles", []), list, "$.roles")
    for j, r in enumerate(roles):
        _ident(r, f"$.roles[{j}]")

    if "initial" not in data:
        raise SchemaError("$", "missing 'initial' marking")
    init = _expect(data["initial"], dict, "$.initial")
    _unknown_keys(init, {"included", "pending", "executed", "values"}, "$.initial")
    included = frozenset(_ident(e, f"$.initial.included[{j}]")
                         for j, e in enumerate(_expect(init.get("included", []), list, "$.initial.included")))
    pending = {e: _deadline(d, f"$.initial.pending.{e}")
               for e, d in _expect(init.get("pending", {}), dict, "$.initial.pending").items()}
    executed = {e: _duration(t, f"$.initial.executed.{e}")
                for e, t in _expect(init.get("executed", {}), dict, "$.initial.executed").items()}
    values = {e: _value(v, f"$.initial.values.{e}")
              for e, v in _expect(init.get("values", {}), dict, "$.initial.values").items()}

    doc = ModelDocument(
        graph=DcrGraph(events=events, relations=relations, groups=groups, roles=frozenset(roles)),
        initial=Marking(executed=executed, pending=pending, included=included, values=values),
        name=_expect(data.get("name", ""), str, "$.name"),
        description=_expect(data.get("description", ""), str, "$.description"),
        tick_unit=_expect(data.get("tick_unit", "second"), str, "$.tick_unit"),
    )
    if validate:
        diagnostics = validate_model(doc)
        if diagnostics:
            first = diagnostics[0]
            err = SchemaError(first.path, first.message)
            err.diagnostics = diagnostics
            raise err
    return doc


def parse_model(text: str, *, validate: bool = True) -> ModelDocument:
    """Parse a JSON model; with ``validate`` any diagnostic raises :class:`SchemaError`."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DcrSyntaxError(f"invalid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})",
                             exc.pos) from None
    return document_from_dict(data, validate=validate)


def load_model(path, *, validate: bool = True) -> ModelDocument:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read(), validate=validate)


def validate_model(doc: ModelDocument) -> list[Diagnostic]:
    g = doc.graph
    out = []

    def diag(path, msg):
        out.append(Diagnostic(path, msg))

    for eid, ev in g.events.items():
        if eid != ev.id:
            diag(f"events.{eid}", f"keyed as {eid!r} but named {ev.id!r}")
        for r in sorted(ev.label.roles - g.roles):
            diag(f"events.{eid}.roles", f"undeclared role {r!r}")
        if isinstance(ev.kind, Computation):
            for ref in sorted(referenced_events(ev.kind.expr) - set(g.events)):
                diag(f"events.{eid}.expression", f"references undeclared event @{ref}")

    parents = {}
    for gid, mem in g.groups.items():
        if gid in g.events:
            diag(f"groups.{gid}", "group id clashes with an event id")
        for m in sorted(mem):
            if m not in g.events and m not in g.groups:
                diag(f"groups.{gid}", f"unknown member {m!r}")
            elif m in parents:
                diag(f"groups.{gid}", f"{m!r} is already a member of group {parents[m]!r}")
            else:
                parents[m] = gid
    for gid in g.groups:
        try:
            core.members(g, gid)
        except CyclicNesting as exc:
            diag(f"groups.{gid}", str(exc))
        except UnknownGroup:
            pass  # reported above

    nodes = set(g.events) | set(g.groups)
    for i, r in enumerate(g.relations):
        path = f"relations[{i}]"
        for end in (r.source, r.target):
            if end not in nodes:
                diag(path, f"{r.kind.value} endpoint {end!r} is not a declared event or group")
        if r.delay and r.kind is not RelationKind.CONDITION:
            diag(path + ".delay", f"delay is only allowed on conditions, not {r.kind.value}")
        if r.deadline != INFINITE and r.kind is not RelationKind.RESPONSE:
            diag(path + ".deadline", f"deadline is only allowed on responses, not {r.kind.value}")
        if r.delay < 0 or r.deadline < 0:
            diag(path, "delays and deadlines must be non-negative")
        for ref in sorted(referenced_events(r.guard) - set(g.events)):
            diag(path + ".guard", f"references undeclared event @{ref}")

    m = doc.initial
    for part in ("included", "pending", "executed", "values"):
        for e in sorted(set(getattr(m, part)) - set(g.events)):
            diag(f"initial.{part}", f"{e!r} is not a declared event")
    for e, t in m.executed.items():
        if t < 0:
            diag(f"initial.executed.{e}", "elapsed time must be non-negative")
    for e, d in m.pending.items():
        if d < 0:
            diag(f"initial.pending.{e}", "deadline must be non-negative")
    for e, v in m.values.items():
        try:
            value_kind(v)
        except DcrError:
            diag(f"initial.values.{e}", f"not a value: {v!r}")
    return out


def _ticks(t):
    return "infinite" if t == INFINITE else int(t)


def document_to_dict(doc: ModelDocument) -> dict:
    g = doc.graph
    events = []
    for ev in g.events.values():
        item = {"id": ev.id}
        if ev.label.action != ev.id:
            item["action"] = ev.label.action
        item["roles"] = sorted(ev.label.roles)
        if isinstance(ev.kind, Computation):
            item["kind"] = "computation"
            item["expression"] = pretty(ev.kind.expr)
        else:
            item["kind"] = "input"
        events.append(item)
    relations = []
    for r in g.relations:
        item = {"kind": r.kind.value, "source": r.source, "target": r.target}
        if r.guard != TRUE:
            item["guard"] = pretty(r.guard)
        if r.delay:
            item["delay"] = r.delay
        if r.deadline != INFINITE:
            item["deadline"] = _ticks(r.deadline)
        relations.append(item)
    m = doc.initial
    out = {
        "schema": SCHEMA_VERSION,
        "name": doc.name,
        "description": doc.description,
        "tick_unit": doc.tick_unit,
        "roles": sorted(g.roles),
        "events": events,
        "relations": relations,
    }
    if g.groups:
        out["groups"] = {gid: sorted(mem) for gid, mem in g.groups.items()}
    out["initial"] = {
        "included": sorted(m.included),
        "pending": {e: _ticks(d) for e, d in sorted(m.pending.items())},
        "executed": {e: int(t) for e, t in sorted(m.executed.items())},
        "values": dict(sorted(m.values.items())),
    }
    return out


def serialize_model(doc: ModelDocument) -> str:
    return json.dumps(document_to_dict(doc), indent=2) + "\n"


def marking_to_dict(marking: Marking) -> dict:
    """JSON view of a marking, shared by the service, the REPL and alert dumps."""
    return {
        "included": sorted(marking.included),
        "pending": {e: _ticks(d) for e, d in sorted(marking.pending.items())},
        "executed": {e: int(t) for e, t in sorted(marking.executed.items())},
        "values": dict(sorted(marking.values.items())),
    }

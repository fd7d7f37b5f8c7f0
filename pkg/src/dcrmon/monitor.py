"""Conformance monitor: replay contract transactions as DCR activity executions.

Each successful transaction to the monitored contract is decoded, mapped to
an event and role, and offered to the engine. A refusal is a violation of the
model. After a violation the monitor keeps the marking it had and carries on
checking later transactions against it.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Optional, Union

from . import core
from .abi import FunctionSig, decode_calldata, selector
from .core import ConditionUnmet, DcrGraph, Input, Marking, MilestoneBlocked, NotIncluded, RoleDenied
from .errors import AbiError, ConfigError, ExpressionError
from .expr import Value
from .model import ModelDocument
from .trace import Status, Transaction


class TimePolicy(str, Enum):
    ADVANCE_BY_TIMESTAMPS = "timestamps"
    IGNORE_TIME = "ignore"


@dataclass(frozen=True)
class FunctionMapping:
    sig: FunctionSig
    event: str
    bind: Optional[str] = None   # None | "arg:<i>" | "msg.value" | "msg.sender"


@dataclass(frozen=True)
class MappingConfig:
    contract: str
    functions: dict                        # selector bytes -> FunctionMapping
    roles: dict                            # lowercase address -> role
    default_role: Optional[str] = None     # None rejects unknown senders
    time_policy: TimePolicy = TimePolicy.ADVANCE_BY_TIMESTAMPS
    strict_unmapped: bool = False

    @classmethod
    def from_dict(cls, d: dict) -> MappingConfig:
        if not isinstance(d, dict):
            raise ConfigError("mapping config must be a JSON object")
        try:
            functions = {}
            for i, f in enumerate(d.get("functions", [])):
                sig = FunctionSig.parse(f["signature"])
                bind = f.get("bind")
                if bind is not None and not _valid_bind(bind, sig):
                    raise ConfigError(f"functions[{i}]: bad binding {bind!r} for {sig}")
                sel = selector(sig)
                if sel in functions:
                    raise ConfigError(f"functions[{i}]: selector 0x{sel.hex()} mapped twice")
                functions[sel] = FunctionMapping(sig, f["event"], bind)
            unknown = d.get("unknown_sender", "reject")
            if unknown == "reject":
                default_role = None
            elif isinstance(unknown, dict) and set(unknown) == {"default_role"}:
                default_role = unknown["default_role"]
            else:
                raise ConfigError(f"unknown_sender must be 'reject' or {{'default_role': ...}}, got {unknown!r}")
            return cls(
                contract=d["contract"].lower(),
                functions=functions,
                roles={a.lower(): r for a, r in d.get("roles", {}).items()},
                default_role=default_role,
                time_policy=TimePolicy(d.get("time", TimePolicy.ADVANCE_BY_TIMESTAMPS.value)),
                strict_unmapped=bool(d.get("strict_unmapped", False)),
            )
        except KeyError as exc:
            raise ConfigError(f"mapping config is missing {exc}") from None
        except (ValueError, AbiError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        return {
            "contract": self.contract,
            "functions": [{"signature": m.sig.canonical, "event": m.event, "bind": m.bind}
                          for m in self.functions.values()],
            "roles": dict(self.roles),
            "unknown_sender": "reject" if self.default_role is None else {"default_role": self.default_role},
            "time": self.time_policy.value,
            "strict_unmapped": self.strict_unmapped,
        }


def _valid_bind(bind, sig):
    if bind in ("msg.value", "msg.sender"):
        return True
    if isinstance(bind, str) and bind.startswith("arg:") and bind[4:].isdigit():
        return int(bind[4:]) < len(sig.params)
    return False


def load_config(path) -> MappingConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return MappingConfig.from_dict(data)


def check_config(config: MappingConfig, model: ModelDocument) -> list[str]:
    """Problems that make ``config`` unusable with ``model``; empty when they fit."""
    g = model.graph
    problems = []
    for m in config.functions.values():
        ev = g.events.get(m.event)
        if ev is None:
            problems.append(f"{m.sig}: event {m.event!r} is not in the model")
            continue
        is_input = isinstance(ev.kind, Input)
        if is_input and m.bind is None:
            problems.append(f"{m.sig}: {m.event} is an input event but no value is bound")
        if not is_input and m.bind is not None:
            problems.append(f"{m.sig}: {m.event} is a computation event and cannot take {m.bind}")
    roles = set(config.roles.values())
    if config.default_role is not None:
        roles.add(config.default_role)
    for r in sorted(roles - g.roles):
        problems.append(f"role {r!r} is not declared in the model")
    return problems


@dataclass(frozen=True)
class Provenance:
    block_number: int
    tx_index: int
    hash: str
    timestamp: int

    @classmethod
    def of(cls, tx: Transaction) -> Provenance:
        return cls(tx.block_number, tx.tx_index, tx.hash, tx.timestamp)


@dataclass(frozen=True)
class ActivityStep:
    event: str
    role: str
    input: Optional[Value]
    provenance: Provenance


@dataclass(frozen=True)
class Skip:
    reason: str   # "reverted" | "unmapped"
    provenance: Provenance


class AlertKind(str, Enum):
    STEP_VIOLATION = "StepViolation"
    ROLE_VIOLATION = "RoleViolation"
    UNMAPPED_FUNCTION = "UnmappedFunction"
    DEADLINE_OVERDUE = "DeadlineOverdue"
    DECODE_ERROR = "DecodeError"
    EXECUTION_ERROR = "ExecutionError"


@dataclass(frozen=True)
class Alert:
    kind: AlertKind
    provenance: Provenance
    message: str
    event: Optional[str] = None
    role: Optional[str] = None
    blockers: tuple = ()
    sender: Optional[str] = None
    selector: Optional[str] = None
    detail: Optional[str] = None

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, **self.provenance.__dict__}
        for key in ("event", "role", "sender", "selector", "detail"):
            v = getattr(self, key)
            if v is not None:
                out[key] = v
        if self.kind is AlertKind.STEP_VIOLATION:
            out["blockers"] = [blocker_to_dict(b) for b in self.blockers]
        out["message"] = self.message
        return out


def blocker_to_dict(b) -> dict:
    if isinstance(b, NotIncluded):
        return {"kind": "NotIncluded"}
    if isinstance(b, ConditionUnmet):
        return {"kind": "ConditionUnmet", "source": b.source,
                "required_delay": b.required_delay, "elapsed": b.elapsed}
    if isinstance(b, MilestoneBlocked):
        return {"kind": "MilestoneBlocked", "source": b.source}
    if isinstance(b, RoleDenied):
        return {"kind": "RoleDenied", "role": b.role}
    raise TypeError(b)


def _bound_value(bind, tx, args):
    if bind is None:
        return None
    if bind == "msg.value":
        return tx.value
    if bind == "msg.sender":
        return tx.sender
    return args[int(bind[4:])]


def translate(tx: Transaction, config: MappingConfig, model: ModelDocument) -> Union[ActivityStep, Skip, Alert]:
    prov = Provenance.of(tx)
    if tx.status is Status.REVERTED:
        return Skip("reverted", prov)
    sel = tx.input[:4]
    mapping = config.functions.get(sel) if len(sel) == 4 else None
    if mapping is None:
        sel_hex = "0x" + sel.hex()
        if config.strict_unmapped:
            return Alert(AlertKind.UNMAPPED_FUNCTION, prov,
                         f"selector {sel_hex} is not mapped to any event", selector=sel_hex)
        return Skip("unmapped", prov)
    try:
        call = decode_calldata(tx.input, mapping.sig)
    except AbiError as exc:
        return Alert(AlertKind.DECODE_ERROR, prov, f"cannot decode {mapping.sig}: {exc}",
                     event=mapping.event, detail=str(exc))
    role = config.roles.get(tx.sender, config.default_role)
    if role is None:
        return Alert(AlertKind.ROLE_VIOLATION, prov,
                     f"{tx.sender} called {mapping.sig} but holds no role", event=mapping.event,
                     sender=tx.sender)
    return ActivityStep(mapping.event, role, _bound_value(mapping.bind, tx, call.arguments), prov)


def process_step(graph: DcrGraph, marking: Marking, step: ActivityStep) -> tuple[Marking, Optional[Alert]]:
    verdict = core.is_enabled(graph, marking, step.event, step.role)
    if not verdict.enabled:
        reasons = "; ".join(str(b) for b in verdict.blockers)
        return marking, Alert(AlertKind.STEP_VIOLATION, step.provenance,
                              f"{step.event} by {step.role} refused by the model: {reasons}",
                              event=step.event, role=step.role, blockers=verdict.blockers)
    try:
        return core.execute(graph, marking, step.event, step.role, step.input), None
    except ExpressionError as exc:
        return marking, Alert(AlertKind.EXECUTION_ERROR, step.provenance,
                              f"{step.event} could not be computed: {exc}", event=step.event,
                              role=step.role, detail=str(exc))


@dataclass
class MonitorSummary:
    transactions: int = 0
    executed: int = 0
    skipped: Counter = field(default_factory=Counter)
    alerts: Counter = field(default_factory=Counter)
    accepting: bool = True
    diverged: bool = False
    marking: Optional[Marking] = None

    @property
    def alert_count(self) -> int:
        return sum(self.alerts.values())

    def to_dict(self) -> dict:
        from .model import marking_to_dict
        return {
            "transactions": self.transactions,
            "executed": self.executed,
            "skipped": dict(sorted(self.skipped.items())),
            "alerts": dict(sorted(self.alerts.items())),
            "alert_count": self.alert_count,
            "diverged": self.diverged,
            "accepting": self.accepting,
            "marking": None if self.marking is None else marking_to_dict(self.marking),
        }


def run_monitor(source: Iterable[Transaction], config: MappingConfig, model: ModelDocument,
                sink: Callable[[Alert], None] = lambda alert: None,
                time_policy: Optional[TimePolicy] = None) -> MonitorSummary:
    """Check every transaction of ``source`` in order and report alerts to ``sink``.

    ``source`` must already be restricted to the monitored contract.
    """
    problems = check_config(config, model)
    if problems:
        raise ConfigError("mapping does not fit the model: " + "; ".join(problems))
    policy = TimePolicy(time_policy or config.time_policy)
    graph = model.graph
    marking = model.initial
    summary = MonitorSummary()
    last_time = None

    for tx in source:
        summary.transactions += 1
        if policy is TimePolicy.ADVANCE_BY_TIMESTAMPS:
            if last_time is not None and tx.timestamp > last_time:
                marking, overdue = core.advance_time(graph, marking, tx.timestamp - last_time,
                                                     core.TimeMode.PERMISSIVE)
                for o in overdue:
                    alert = Alert(AlertKind.DEADLINE_OVERDUE, Provenance.of(tx),
                                  f"{o.event} missed its deadline by {o.overdue_by} ticks", event=o.event)
                    summary.alerts[alert.kind.value] += 1
                    sink(alert)
            last_time = tx.timestamp
        outcome = translate(tx, config, model)
        if isinstance(outcome, Skip):
            summary.skipped[outcome.reason] += 1
            continue
        if isinstance(outcome, ActivityStep):
            marking, outcome = process_step(graph, marking, outcome)
            if outcome is None:
                summary.executed += 1
                continue
            if outcome.kind is AlertKind.STEP_VIOLATION:
                summary.diverged = True
        summary.alerts[outcome.kind.value] += 1
        sink(outcome)

    summary.accepting = core.is_accepting(graph, marking)
    summary.marking = marking
    return summary

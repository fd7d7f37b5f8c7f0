"""Scenario manifests: scripted checks against a fresh model instance.

A manifest is a JSON object with a ``model`` path (relative to the manifest)
and a list of ``steps``. Each step is an object with exactly one key:

``assert_enabled``   ``{"role": r?, "events": [...]}``, the exact enabled set
``exec``             ``{"event", "role"?, "value"?, "refused"?: [blocker, ...]}``
``advance``          ``{"by": ticks | duration, "mode"?, "overdue"?: [...], "violation"?: [...]}``
``assert_accepting`` ``true`` / ``false``
``assert_pending``   the exact set of included pending events
``check_trace``      ``{"mapping", "trace", "ignore_time"?, "strict_unmapped"?, "summary"?: {...}}``
``expect_alert``     partial alert dict, matched against the next alert of the last trace check
``expect_no_more_alerts`` ``true``
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from . import core
from .errors import DcrError, DeadlineViolation, NotEnabled
from .expr import UndefinedGuardWarning, parse_duration
from .model import load_model, marking_to_dict
from .monitor import TimePolicy, blocker_to_dict, load_config, run_monitor
from .trace import filter_to_contract, read_trace


class ScenarioFailure(AssertionError):
    pass


@dataclass
class ScenarioReport:
    name: str
    passed: bool
    steps_run: int
    failure: Optional[str] = None
    failed_step: Optional[int] = None
    marking: Optional[dict] = None
    alerts: list = field(default_factory=list)

    def __str__(self):
        if self.passed:
            return f"PASS {self.name} ({self.steps_run} steps)"
        dump = json.dumps(self.marking, indent=2, sort_keys=True)
        return f"FAIL {self.name} at step {self.failed_step}: {self.failure}\nmarking:\n{dump}"


def _partial_match(expected, actual):
    if isinstance(expected, dict):
        return isinstance(actual, dict) and all(
            k in actual and _partial_match(v, actual[k]) for k, v in expected.items())
    if isinstance(expected, list):
        return (isinstance(actual, list) and len(expected) == len(actual)
                and all(_partial_match(e, a) for e, a in zip(expected, actual)))
    return expected == actual


class _Run:
    def __init__(self, manifest, base):
        self.base = base
        self.doc = load_model(base / manifest["model"])
        self.graph = self.doc.graph
        self.marking = self.doc.initial
        self.alerts = []

    def fail(self, msg):
        raise ScenarioFailure(msg)

    def step(self, op, arg):
        handler = getattr(self, "do_" + op, None)
        if handler is None:
            self.fail(f"unknown step {op!r}")
        handler(arg)

    def do_assert_enabled(self, arg):
        role = arg.get("role")
        got = core.enabled_events(self.graph, self.marking, role)
        want = set(arg["events"])
        if got != want:
            self.fail(f"enabled for {role or 'any role'}: expected {sorted(want)}, got {sorted(got)}")

    def do_exec(self, arg):
        event, role, value = arg["event"], arg.get("role"), arg.get("value")
        refused = arg.get("refused")
        try:
            new = core.execute(self.graph, self.marking, event, role, value)
        except NotEnabled as exc:
            if refused is None:
                self.fail(f"exec {event}: refused ({exc})")
            got = [blocker_to_dict(b) for b in exc.verdict.blockers]
            if not _partial_match(refused, got):
                self.fail(f"exec {event}: expected blockers {refused}, got {got}")
            return
        if refused is not None:
            self.fail(f"exec {event}: expected a refusal, but it executed")
        self.marking = new

    def do_advance(self, arg):
        ticks = parse_duration(arg["by"])
        try:
            self.marking, overdue = core.advance_time(self.graph, self.marking, ticks,
                                                      arg.get("mode", "strict"))
        except DeadlineViolation as exc:
            if "violation" not in arg:
                self.fail(f"advance {arg['by']}: {exc}")
            if sorted(arg["violation"]) != exc.events:
                self.fail(f"advance: expected violation on {arg['violation']}, got {exc.events}")
            return
        if "violation" in arg:
            self.fail(f"advance {arg['by']}: expected a deadline violation")
        if "overdue" in arg and sorted(arg["overdue"]) != [o.event for o in overdue]:
            self.fail(f"advance: expected overdue {arg['overdue']}, got {[o.event for o in overdue]}")

    def do_assert_accepting(self, arg):
        got = core.is_accepting(self.graph, self.marking)
        if got != arg:
            self.fail(f"accepting: expected {arg}, got {got}")

    def do_assert_pending(self, arg):
        got = core.pending_included(self.marking)
        if got != sorted(arg):
            self.fail(f"pending: expected {sorted(arg)}, got {got}")

    def do_check_trace(self, arg):
        config = load_config(self.base / arg["mapping"])
        if arg.get("strict_unmapped"):
            config = replace(config, strict_unmapped=True)
        policy = TimePolicy.IGNORE_TIME if arg.get("ignore_time") else None
        source = filter_to_contract(read_trace(self.base / arg["trace"]), config.contract)
        self.alerts = []
        summary = run_monitor(source, config, self.doc, self.alerts.append, policy)
        self.marking = summary.marking
        if "summary" in arg and not _partial_match(arg["summary"], summary.to_dict()):
            self.fail(f"summary: expected {arg['summary']}, got {summary.to_dict()}")

    def do_expect_alert(self, arg):
        if not self.alerts:
            self.fail(f"expected alert {arg}, but none is left")
        got = self.alerts.pop(0).to_dict()
        if not _partial_match(arg, got):
            self.fail(f"expected alert {arg}, got {got}")

    def do_expect_no_more_alerts(self, arg):
        if arg and self.alerts:
            self.fail(f"unexpected alerts: {[a.to_dict() for a in self.alerts]}")


def run_scenario(path) -> ScenarioReport:
    """Run one manifest; the first failing step stops the run and is reported with the marking."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    name = manifest.get("name", path.stem)
    run = _Run(manifest, path.parent)
    done = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UndefinedGuardWarning)
        for i, step in enumerate(manifest["steps"]):
            if not isinstance(step, dict) or len(step) != 1:
                raise ValueError(f"{path}: step {i} must have exactly one key")
            (op, arg), = step.items()
            try:
                run.step(op, arg)
            except (ScenarioFailure, DcrError) as exc:
                return ScenarioReport(name, False, done, str(exc), i, marking_to_dict(run.marking),
                                      [a.to_dict() for a in run.alerts])
            done += 1
    return ScenarioReport(name, True, done, marking=marking_to_dict(run.marking))


def fixtures_dir() -> Path:
    return Path(__file__).parent / "fixtures"


def all_scenarios() -> list[Path]:
    return sorted(fixtures_dir().glob("*/scenario-*.json"))

"""Command-line entry points: validate, simulate, check, serve, scenarios."""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from . import core
from .errors import DcrError, DcrSyntaxError, NotEnabled, SchemaError
from .expr import Lit, parse_duration, parse_expr
from .model import load_model, marking_to_dict, validate_model
from .monitor import TimePolicy, blocker_to_dict, load_config, run_monitor
from .trace import filter_to_contract, read_trace

ALERTS_ENV = "DCRMON_ALERTS_OUT"


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


def cmd_validate(args) -> int:
    try:
        doc = load_model(args.model, validate=False)
    except OSError as exc:
        _err(f"cannot read {args.model}: {exc.strerror}")
        return 2
    except (SchemaError, DcrSyntaxError) as exc:
        _err(str(exc))
        return 1
    diagnostics = validate_model(doc)
    for d in diagnostics:
        print(d)
    if diagnostics:
        print(f"{len(diagnostics)} problem(s) in {args.model}")
        return 1
    g = doc.graph
    print(f"ok: {doc.name or args.model} ({len(g.events)} events, {len(g.relations)} relations, "
          f"{len(g.groups)} groups)")
    return 0


def _parse_value(text):
    try:
        node = parse_expr(text)
    except DcrSyntaxError:
        return text
    if isinstance(node, Lit):
        return node.value
    return text


class Simulator:
    """Line-oriented simulation session; output depends only on the input lines."""

    def __init__(self, doc, role=None, out=None):
        self.doc = doc
        self.graph = doc.graph
        self.marking = doc.initial
        self.role = role
        self.out = out

    def say(self, text=""):
        print(text, file=self.out or sys.stdout)

    def banner(self):
        g = self.graph
        self.say(f"model {self.doc.name or '(unnamed)'}: {len(g.events)} events, "
                 f"roles {', '.join(sorted(g.roles)) or '-'}; acting as {self.role or 'any role'}")
        self.say("commands: list, exec <event> [value], advance <duration> [permissive], "
                 "role <name|any>, why [event], marking, quit")

    def handle(self, line) -> bool:
        """Run one command; False means the session is over."""
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            return True
        cmd, rest = parts[0], parts[1:]
        if cmd in ("quit", "exit"):
            return False
        handler = getattr(self, "do_" + cmd, None)
        if handler is None:
            self.say(f"unknown command {cmd!r}")
            return True
        try:
            handler(rest)
        except DcrError as exc:
            self.say(f"error: {exc}")
        return True

    def do_help(self, rest):
        self.banner()

    def do_list(self, rest):
        roles = [self.role] if self.role else sorted(self.graph.roles)
        for r in roles:
            enabled = sorted(core.enabled_events(self.graph, self.marking, r))
            self.say(f"enabled ({r}): {', '.join(enabled) or '-'}")
        pending = [f"{e}{'' if d == core.INFINITE else f' (due in {int(d)})'}"
                   for e, d in sorted(self.marking.pending.items()) if e in self.marking.included]
        self.say(f"pending: {', '.join(pending) or '-'}")
        self.say(f"accepting: {'yes' if core.is_accepting(self.graph, self.marking) else 'no'}")

    def do_exec(self, rest):
        if not rest:
            self.say("usage: exec <event> [value]")
            return
        event = rest[0]
        value = _parse_value(" ".join(rest[1:])) if len(rest) > 1 else None
        try:
            self.marking = core.execute(self.graph, self.marking, event, self.role, value)
        except NotEnabled as exc:
            self.say(f"refused {event}:")
            for b in exc.verdict.blockers:
                self.say(f"  - {b}")
            return
        shown = "" if value is None else f" with {json.dumps(self.marking.values[event])}"
        self.say(f"executed {event}{shown}")

    def do_advance(self, rest):
        if not rest:
            self.say("usage: advance <duration> [permissive]")
            return
        ticks = parse_duration(rest[0])
        mode = core.TimeMode.PERMISSIVE if rest[1:] == ["permissive"] else core.TimeMode.STRICT
        self.marking, overdue = core.advance_time(self.graph, self.marking, ticks, mode)
        self.say(f"advanced {ticks} ticks")
        for o in overdue:
            self.say(f"  overdue: {o.event} by {o.overdue_by}")

    def do_role(self, rest):
        if len(rest) != 1:
            self.say("usage: role <name|any>")
            return
        role = None if rest[0] == "any" else rest[0]
        if role is not None and role not in self.graph.roles:
            self.say(f"error: unknown role {role!r}")
            return
        self.role = role
        self.say(f"acting as {role or 'any role'}")

    def do_marking(self, rest):
        self.say(json.dumps(marking_to_dict(self.marking), indent=2))

    def do_why(self, rest):
        for event in rest or sorted(self.graph.events):
            v = core.is_enabled(self.graph, self.marking, event, self.role)
            self.say(f"{event}: " + ("enabled" if v.enabled else "; ".join(str(b) for b in v.blockers)))


def cmd_simulate(args) -> int:
    try:
        doc = load_model(args.model)
    except OSError as exc:
        _err(f"cannot read {args.model}: {exc.strerror}")
        return 2
    except DcrError as exc:
        _err(str(exc))
        return 1
    if args.role is not None and args.role not in doc.graph.roles:
        _err(f"unknown role {args.role!r}")
        return 2
    sim = Simulator(doc, args.role)
    sim.banner()
    interactive = sys.stdin.isatty()
    while True:
        if interactive:
            try:
                line = input("> ")
            except EOFError:
                break
        else:
            line = sys.stdin.readline()
            if not line:
                break
            line = line.rstrip("\n")
            sim.say(f"> {line}")
        if not sim.handle(line):
            break
    return 0


def cmd_check(args) -> int:
    try:
        doc = load_model(args.model)
        config = load_config(args.mapping)
        if args.strict_unmapped:
            config = replace(config, strict_unmapped=True)
        source = filter_to_contract(read_trace(args.trace), config.contract)
    except OSError as exc:
        _err(f"cannot read {exc.filename}: {exc.strerror}")
        return 2
    except DcrError as exc:
        _err(str(exc))
        return 2

    alerts_out = args.alerts_out or os.environ.get(ALERTS_ENV)
    if alerts_out == "-":
        sink_file = sys.stdout
    elif alerts_out:
        sink_file = open(alerts_out, "w", encoding="utf-8")
    else:
        sink_file = None

    def sink(alert):
        print(f"ALERT block {alert.provenance.block_number} tx {alert.provenance.tx_index}: "
              f"{alert.kind.value}: {alert.message}", file=sys.stderr)
        if sink_file is not None:
            sink_file.write(json.dumps(alert.to_dict()) + "\n")

    policy = TimePolicy.IGNORE_TIME if args.ignore_time else None
    try:
        summary = run_monitor(source, config, doc, sink, policy)
    except DcrError as exc:
        _err(str(exc))
        return 2
    finally:
        if sink_file is not None and sink_file is not sys.stdout:
            sink_file.close()
    report = summary.to_dict()
    if sink_file is sys.stdout:
        print(json.dumps(report))
    else:
        print(json.dumps(report, indent=2))
    return 0 if summary.alert_count == 0 else 1


def cmd_serve(args) -> int:
    import uvicorn
    from .service import create_app

    if not 0 <= args.port <= 65535:
        _err(f"port {args.port} is out of range")
        return 2
    try:
        uvicorn.run(create_app(args.snapshot), host=args.host, port=args.port, log_level=args.log_level)
    except SystemExit as exc:
        return exc.code or 1
    except OSError as exc:
        _err(f"cannot serve on {args.host}:{args.port}: {exc}")
        return 1
    return 0


def cmd_scenarios(args) -> int:
    from .scenarios import all_scenarios, run_scenario

    paths = args.paths or all_scenarios()
    failed = 0
    for p in paths:
        report = run_scenario(p)
        print(report)
        failed += not report.passed
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dcrmon", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model file")
    p.add_argument("model")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="step through a model interactively (commands on stdin)")
    p.add_argument("model")
    p.add_argument("--role", help="act as this role (default: any role)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="replay a transaction trace against a model")
    p.add_argument("model")
    p.add_argument("mapping")
    p.add_argument("trace")
    p.add_argument("--strict-unmapped", action="store_true",
                   help="alert on calls to functions the mapping does not cover")
    p.add_argument("--ignore-time", action="store_true", help="do not advance time between transactions")
    p.add_argument("--alerts-out", help=f"write alerts as JSON lines here ('-' for stdout; default ${ALERTS_ENV})")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("serve", help="run the HTTP engine service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--snapshot", help="load instances from and save them to this file")
    p.add_argument("--log-level", default="info")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("scenarios", help="run scenario manifests (default: the bundled fixtures)")
    p.add_argument("paths", nargs="*")
    p.set_defaults(func=cmd_scenarios)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

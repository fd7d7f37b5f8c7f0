import random
from dataclasses import replace

import pytest

from dcrmon import core
from dcrmon.abi import encode_call
from dcrmon.core import MilestoneBlocked, RoleDenied
from dcrmon.errors import ConfigError
from dcrmon.model import document_from_dict
from dcrmon.monitor import (
    ActivityStep, Alert, AlertKind, MappingConfig, Provenance, Skip, TimePolicy, check_config,
    load_config, process_step, run_monitor, translate,
)
from dcrmon.trace import Status, Transaction, filter_to_contract, read_trace

from conftest import fixture_path

SENDER = "0x70997970c51812dc3a010c7d01b50e0d17dc79c8"
RECEIVER = "0x3c44cdddb6a900fa2b585dd299e03d12fa4293bc"
STRANGER = "0x90f79bf6eb2c4f870365e785982e1f101e93b906"


@pytest.fixture
def config():
    return load_config(fixture_path("escrow", "mapping.json"))


def trace(name, config):
    return filter_to_contract(read_trace(fixture_path("escrow", name)), config.contract)


def make_tx(call, sender=SENDER, block=1, index=0, status=Status.SUCCESS, value=0, timestamp=0, to=None):
    raw = encode_call(call) if isinstance(call, str) else call
    return Transaction(block, index, "0x" + "00" * 32, sender, to or "0x5fbdb2315678afecb367f032d93f642f64180aa3",
                       raw, value, status, timestamp)


def step(event, role, value=None, block=1):
    return ActivityStep(event, role, value, Provenance(block, 0, "0x", 0))


class TestConfig:
    def test_escrow_mapping(self, config, escrow):
        assert len(config.functions) == 4
        assert config.roles[SENDER] == "sender"
        assert check_config(config, escrow) == []

    def test_round_trip(self, config):
        assert MappingConfig.from_dict(config.to_dict()) == config

    @pytest.mark.parametrize("patch", [
        {"functions": [{"signature": "f(uint256)", "event": "x", "bind": "arg:1"}]},
        {"functions": [{"signature": "f()", "event": "x"}, {"signature": "f()", "event": "y"}]},
        {"unknown_sender": "ignore"},
        {"time": "wallclock"},
        {"functions": [{"signature": "f(string)", "event": "x"}]},
        {"functions": [{"event": "x"}]},
    ])
    def test_bad_configs(self, patch):
        with pytest.raises(ConfigError):
            MappingConfig.from_dict({"contract": "0x" + "00" * 20, **patch})

    def test_mismatch_with_model(self, escrow):
        bad = MappingConfig.from_dict({
            "contract": "0x" + "00" * 20,
            "functions": [{"signature": "placeInEscrow()", "event": "placeInEscrow"},
                          {"signature": "releaseBySender()", "event": "releaseBySender", "bind": "msg.value"},
                          {"signature": "nope()", "event": "nope"}],
            "roles": {SENDER: "admin"},
        })
        problems = check_config(bad, escrow)
        assert len(problems) == 4
        with pytest.raises(ConfigError):
            run_monitor([], bad, escrow)


class TestTranslate:
    def test_deposit(self, config, escrow):
        out = translate(make_tx("placeInEscrow()", value=5), config, escrow)
        assert isinstance(out, ActivityStep)
        assert (out.event, out.role, out.input) == ("placeInEscrow", "sender", 5)

    def test_reverted(self, config, escrow):
        out = translate(make_tx("placeInEscrow()", status=Status.REVERTED), config, escrow)
        assert out == Skip("reverted", out.provenance)

    def test_unmapped(self, config, escrow):
        tx = make_tx(bytes.fromhex("deadbeef"))
        assert isinstance(translate(tx, config, escrow), Skip)
        out = translate(tx, replace(config, strict_unmapped=True), escrow)
        assert isinstance(out, Alert) and out.kind is AlertKind.UNMAPPED_FUNCTION
        assert out.selector == "0xdeadbeef"

    def test_short_input_is_unmapped(self, config, escrow):
        assert translate(make_tx(b"\x01"), config, escrow).reason == "unmapped"

    def test_decode_error(self, config, escrow):
        out = translate(make_tx(encode_call("releaseBySender()") + b"\x00"), config, escrow)
        assert out.kind is AlertKind.DECODE_ERROR

    def test_unknown_sender(self, config, escrow):
        out = translate(make_tx("placeInEscrow()", sender=STRANGER), config, escrow)
        assert out.kind is AlertKind.ROLE_VIOLATION and out.sender == STRANGER
        out = translate(make_tx("placeInEscrow()", sender=STRANGER), replace(config, default_role="receiver"),
                        escrow)
        assert out.role == "receiver"

    def test_argument_binding(self, casino):
        cfg = load_config(fixture_path("casino", "mapping.json"))
        out = translate(make_tx(encode_call("placeBet(bool)", True)), cfg, casino)
        assert (out.event, out.role, out.input) == ("placeBet", "player", True)


class TestProcessStep:
    def test_faulty_third_step(self, escrow):
        g = escrow.graph
        m = core.execute(g, escrow.initial, "placeInEscrow", "sender", 1)
        m = core.execute(g, m, "releaseByReceiver", "receiver")
        m2, alert = process_step(g, m, step("withdrawFromEscrow", "receiver"))
        assert m2 == m
        assert alert.kind is AlertKind.STEP_VIOLATION
        assert alert.blockers == (MilestoneBlocked("releaseBySender"),)

    def test_happy_sequence(self, escrow):
        m = escrow.initial
        for s in [step("placeInEscrow", "sender", 1), step("releaseBySender", "sender"),
                  step("releaseByReceiver", "receiver"), step("withdrawFromEscrow", "receiver")]:
            m, alert = process_step(escrow.graph, m, s)
            assert alert is None
        assert core.is_accepting(escrow.graph, m)

    def test_wrong_role(self, escrow):
        _, alert = process_step(escrow.graph, escrow.initial, step("placeInEscrow", "receiver", 1))
        assert RoleDenied("receiver") in alert.blockers

    def test_expression_failure_is_an_alert(self):
        doc = document_from_dict({"roles": ["r"], "events": [
            {"id": "a", "roles": ["r"], "kind": "computation", "expression": "1 / 0"}],
            "initial": {"included": ["a"]}})
        m, alert = process_step(doc.graph, doc.initial, step("a", "r"))
        assert m == doc.initial and alert.kind is AlertKind.EXECUTION_ERROR


class TestRunMonitor:
    def test_happy(self, config, escrow):
        alerts = []
        summary = run_monitor(trace("trace-happy.jsonl", config), config, escrow, alerts.append)
        assert (summary.executed, summary.alert_count, summary.accepting) == (4, 0, True)
        assert alerts == []

    def test_faulty(self, config, escrow):
        alerts = []
        summary = run_monitor(trace("trace-faulty.jsonl", config), config, escrow, alerts.append)
        assert summary.executed == 2
        assert summary.alerts == {"StepViolation": 1}
        assert summary.diverged and not summary.accepting
        (a,) = alerts
        assert (a.provenance.block_number, a.provenance.tx_index) == (203, 0)
        assert a.to_dict()["blockers"] == [{"kind": "MilestoneBlocked", "source": "releaseBySender"}]

    def test_empty(self, config, escrow):
        summary = run_monitor(trace("trace-empty.jsonl", config), config, escrow)
        assert summary.to_dict()["transactions"] == 0
        assert (summary.executed, summary.alert_count, summary.skipped) == (0, 0, {})
        assert summary.accepting == core.is_accepting(escrow.graph, escrow.initial)

    def test_noisy(self, config, escrow):
        summary = run_monitor(trace("trace-noisy.jsonl", config), config, escrow)
        assert summary.skipped == {"reverted": 2, "unmapped": 1}
        assert summary.alerts == {"RoleViolation": 1}

    def test_alerts_in_provenance_order(self, config, escrow):
        alerts = []
        strict = replace(config, strict_unmapped=True)
        run_monitor(trace("trace-noisy.jsonl", config), strict, escrow, alerts.append)
        keys = [(a.provenance.block_number, a.provenance.tx_index) for a in alerts]
        assert keys == sorted(keys) and len(keys) == 2

    def test_deterministic(self, config, escrow):
        a = run_monitor(trace("trace-noisy.jsonl", config), config, escrow).to_dict()
        b = run_monitor(trace("trace-noisy.jsonl", config), config, escrow).to_dict()
        assert a == b

    def test_reverted_never_changes_marking(self, config, escrow):
        txs = list(trace("trace-happy.jsonl", config))
        reverted = [replace(t, status=Status.REVERTED) for t in txs]
        summary = run_monitor(reverted, config, escrow)
        assert summary.marking == escrow.initial
        assert summary.skipped == {"reverted": 4}

    def test_source_not_mutated(self, config, escrow):
        txs = list(trace("trace-faulty.jsonl", config))
        before = list(txs)
        run_monitor(txs, config, escrow)
        assert txs == before

    @pytest.mark.parametrize("seed", range(5))
    def test_ignore_time_is_timestamp_independent(self, seed, casino):
        cfg = load_config(fixture_path("casino", "mapping.json"))
        txs = list(filter_to_contract(read_trace(fixture_path("casino", "trace-timeout.jsonl")), cfg.contract))
        rnd = random.Random(seed)
        t, fuzzed = 0, []
        for tx in txs:
            t += rnd.randint(0, 10**6)
            fuzzed.append(replace(tx, timestamp=t))
        want = run_monitor(txs, cfg, casino, time_policy=TimePolicy.IGNORE_TIME).to_dict()
        assert run_monitor(fuzzed, cfg, casino, time_policy=TimePolicy.IGNORE_TIME).to_dict() == want

    def test_deadline_overdue(self):
        doc = document_from_dict({"roles": ["r"], "events": [{"id": "a", "roles": ["r"]}, {"id": "b", "roles": ["r"], "kind": "computation", "expression": "@a * 2"}],
                                  "relations": [{"kind": "response", "source": "a", "target": "b", "deadline": 10}],
                                  "initial": {"included": ["a", "b"]}})
        cfg = MappingConfig.from_dict({"contract": "0x" + "00" * 20, "roles": {SENDER: "r"},
                                       "functions": [{"signature": "a(uint256)", "event": "a", "bind": "arg:0"},
                                                     {"signature": "b()", "event": "b"}]})
        to = "0x" + "00" * 20
        txs = [make_tx(encode_call("a(uint256)", 7), block=1, timestamp=100, to=to),
               make_tx(bytes.fromhex("00000000"), block=2, timestamp=150, to=to),
               make_tx("b()", block=3, timestamp=160, to=to)]
        alerts = []
        summary = run_monitor(txs, cfg, doc, alerts.append)
        # still overdue at block 3, so it is reported again
        assert [(a.kind, a.event, a.provenance.block_number, a.message) for a in alerts] == [
            (AlertKind.DEADLINE_OVERDUE, "b", 2, "b missed its deadline by 40 ticks"),
            (AlertKind.DEADLINE_OVERDUE, "b", 3, "b missed its deadline by 10 ticks")]
        assert summary.executed == 2 and summary.accepting

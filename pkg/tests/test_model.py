import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from dcrmon.core import INFINITE, RelationKind
from dcrmon.errors import DcrSyntaxError, SchemaError
from dcrmon.model import (
    document_from_dict, document_to_dict, load_model, parse_model, serialize_model, validate_model,
)

from conftest import FIXTURES, fixture_path

MODELS = sorted(FIXTURES.glob("*/model.json"))


def minimal(**extra):
    doc = {"roles": [], "events": [{"id": "a"}], "relations": [], "initial": {"included": ["a"]}}
    doc.update(extra)
    return doc


class TestLoad:
    def test_escrow(self, escrow):
        g = escrow.graph
        assert len(g.events) == 4
        assert len(g.relations) == 11
        assert escrow.initial.included == {"placeInEscrow"}
        assert escrow.initial.pending == {}

    def test_minimal(self):
        doc = document_from_dict(minimal())
        assert validate_model(doc) == []
        assert doc.graph.relations == ()

    def test_undeclared_target(self):
        data = minimal(relations=[{"kind": "include", "source": "a", "target": "ghost"}])
        with pytest.raises(SchemaError) as info:
            document_from_dict(data)
        assert "ghost" in str(info.value)

    def test_casino_durations(self, casino):
        delayed = [r for r in casino.graph.relations if r.kind is RelationKind.CONDITION]
        assert [r.delay for r in delayed] == [86400]

    def test_bad_json(self):
        with pytest.raises(DcrSyntaxError):
            parse_model("{not json")

    @pytest.mark.parametrize("data", [
        [], {"events": []},
        minimal(events=[{"id": "a"}, {"id": "a"}]),
        minimal(events=[{"id": "a", "kind": "computation"}]),
        minimal(events=[{"id": "a", "expression": "true"}]),
        minimal(events=[{"id": "a", "colour": "red"}]),
        minimal(relations=[{"kind": "follows", "source": "a", "target": "a"}]),
        minimal(schema="other@2"),
        minimal(relations=[{"kind": "condition", "source": "a", "target": "a", "delay": "soon"}]),
    ])
    def test_structural_errors(self, data):
        with pytest.raises(SchemaError):
            document_from_dict(data)


class TestDiagnostics:
    def paths(self, data):
        return [d.path for d in validate_model(document_from_dict(data, validate=False))]

    def test_undeclared_role(self):
        data = minimal(events=[{"id": "a", "roles": ["admin"]}])
        assert self.paths(data) == ["events.a.roles"]
        with pytest.raises(SchemaError) as info:
            document_from_dict(data)
        assert len(info.value.diagnostics) == 1

    def test_delay_on_response(self):
        data = minimal(relations=[{"kind": "response", "source": "a", "target": "a", "delay": 5}])
        assert self.paths(data) == ["relations[0].delay"]

    def test_deadline_on_condition(self):
        data = minimal(relations=[{"kind": "condition", "source": "a", "target": "a", "deadline": 5}])
        assert self.paths(data) == ["relations[0].deadline"]

    def test_expression_references(self):
        data = minimal(events=[{"id": "a", "kind": "computation", "expression": "@b + 1"}],
                       relations=[{"kind": "include", "source": "a", "target": "a", "guard": "@c"}])
        assert self.paths(data) == ["events.a.expression", "relations[0].guard"]

    def test_groups(self):
        data = minimal(events=[{"id": "a"}, {"id": "b"}],
                       groups={"g": ["a", "h"], "h": ["g"], "k": ["a"], "a": ["b"], "u": ["zzz"]})
        paths = self.paths(data)
        assert "groups.a" in paths                  # clashes with an event
        assert paths.count("groups.g") >= 1         # cycle
        assert "groups.u" in paths                  # unknown member
        assert "groups.k" in paths                  # second parent

    def test_initial_domains(self):
        data = minimal(initial={"included": ["a", "x"], "pending": {"y": 3}})
        assert self.paths(data) == ["initial.included", "initial.pending"]

    def test_all_fixtures_clean(self):
        for path in MODELS:
            assert validate_model(load_model(path)) == [], path


class TestRoundTrip:
    @pytest.mark.parametrize("path", MODELS, ids=lambda p: p.parent.name)
    def test_fixture(self, path):
        doc = load_model(path)
        again = parse_model(serialize_model(doc))
        assert again == doc
        assert serialize_model(again) == serialize_model(doc)

    def test_infinite_pending(self):
        doc = document_from_dict(minimal(initial={"included": ["a"], "pending": {"a": "infinite"}}))
        assert doc.initial.pending == {"a": INFINITE}
        assert document_to_dict(doc)["initial"]["pending"] == {"a": "infinite"}

    @settings(max_examples=150, deadline=None)
    @given(st.randoms(use_true_random=False))
    def test_random_documents(self, rnd):
        doc = document_from_dict(random_document(rnd))
        assert parse_model(serialize_model(doc)) == doc


def random_document(rnd: random.Random) -> dict:
    events = [f"e{i}" for i in range(rnd.randint(1, 6))]
    roles = ["r0", "r1", "r2"][:rnd.randint(0, 3)]
    ev_items = []
    for e in events:
        item = {"id": e, "roles": rnd.sample(roles, rnd.randint(0, len(roles)))}
        if rnd.random() < 0.4:
            item.update(kind="computation", expression=rnd.choice(
                ["true", f"@{rnd.choice(events)} + 1", f"not (@{rnd.choice(events)} = 2)", '"x"']))
        ev_items.append(item)
    relations = []
    for _ in range(rnd.randint(0, 10)):
        kind = rnd.choice([k.value for k in RelationKind])
        r = {"kind": kind, "source": rnd.choice(events), "target": rnd.choice(events)}
        if rnd.random() < 0.3:
            r["guard"] = f"@{rnd.choice(events)} > {rnd.randint(0, 9)}"
        if kind == "condition" and rnd.random() < 0.5:
            r["delay"] = rnd.choice(["P1D", 30, "PT5M"])
        if kind == "response" and rnd.random() < 0.5:
            r["deadline"] = rnd.choice([10, "P2D", "infinite"])
        relations.append(r)
    initial = {
        "included": rnd.sample(events, rnd.randint(0, len(events))),
        "pending": {e: rnd.choice([0, 7, "infinite"]) for e in rnd.sample(events, rnd.randint(0, min(2, len(events))))},
        "executed": {e: rnd.randint(0, 100) for e in rnd.sample(events, rnd.randint(0, min(2, len(events))))},
        "values": {e: rnd.choice([1, True, "s", -4]) for e in rnd.sample(events, rnd.randint(0, min(2, len(events))))},
    }
    return {"name": "random", "roles": roles, "events": ev_items, "relations": relations, "initial": initial}


def test_fixture_files_are_plain_json():
    for path in MODELS:
        assert isinstance(json.loads(path.read_text()), dict)
    assert fixture_path("escrow", "model.json").exists()

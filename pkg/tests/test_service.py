import json

import pytest
from fastapi.testclient import TestClient

from dcrmon.service import create_app

from conftest import fixture_path
from service_script import Library, make_script, normalise, send

ESCROW = json.loads(fixture_path("escrow", "model.json").read_text())


@pytest.fixture
def client():
    with TestClient(create_app()) as c:
        yield c


def create(client, doc=ESCROW):
    r = client.post("/graphs", json=doc)
    assert r.status_code == 201, r.text
    return r.json()["id"]


class TestEndpoints:
    def test_create(self, client):
        r = client.post("/graphs", json=ESCROW)
        assert r.status_code == 201
        body = r.json()
        assert body["accepting"] is True
        assert body["marking"]["included"] == ["placeInEscrow"]

    def test_deposit_enables_releases(self, client):
        iid = create(client)
        r = client.post(f"/graphs/{iid}/execute", json={"event": "placeInEscrow", "role": "sender", "value": 5})
        assert r.status_code == 200 and r.json()["accepting"] is False
        enabled = client.get(f"/graphs/{iid}/enabled").json()["enabled"]
        assert {"releaseBySender", "releaseByReceiver"} <= set(enabled)

    def test_withdraw_first_is_refused(self, client):
        iid = create(client)
        r = client.post(f"/graphs/{iid}/execute", json={"event": "withdrawFromEscrow", "role": "receiver"})
        assert r.status_code == 409
        assert r.json()["blockers"] == [{"kind": "NotIncluded"}]

    def test_fresh_is_accepting(self, client):
        assert client.get(f"/graphs/{create(client)}/accepting").json() == {"accepting": True}

    def test_verbose_enabled(self, client):
        body = client.get(f"/graphs/{create(client)}/enabled", params={"role": "receiver", "verbose": 1}).json()
        assert body["enabled"] == []
        assert body["blocked"]["placeInEscrow"] == [{"kind": "RoleDenied", "role": "receiver"}]

    def test_invalid_model(self, client):
        doc = dict(ESCROW, roles=["sender"])
        r = client.post("/graphs", json=doc)
        assert r.status_code == 422
        assert r.json()["diagnostics"][0]["path"].startswith("events.")
        r = client.post("/graphs", json={"events": "nope"})
        assert r.status_code == 422

    def test_bad_requests(self, client):
        iid = create(client)
        assert client.post("/graphs", content=b"{").status_code == 400
        assert client.get(f"/graphs/{iid}/enabled", params={"role": "admin"}).status_code == 400
        r = client.post(f"/graphs/{iid}/execute", json={"event": "placeInEscrow", "role": "sender"})
        assert r.status_code == 400 and r.json()["error"] == "MissingInput"
        r = client.post(f"/graphs/{iid}/execute", json={"event": "ghost"})
        assert r.status_code == 400 and r.json()["error"] == "UnknownEvent"
        assert client.post(f"/graphs/{iid}/advance", json={"ticks": "soon"}).status_code == 400
        assert client.post(f"/graphs/{iid}/advance", json={"ticks": 1, "mode": "lax"}).status_code == 400
        r = client.post(f"/graphs/{iid}/execute", json={"event": "placeInEscrow", "role": "sender", "value": [1]})
        assert r.status_code == 400

    def test_unknown_instance(self, client):
        assert client.get("/graphs/nope/marking").status_code == 404
        assert client.delete("/graphs/nope").status_code == 404

    def test_delete(self, client):
        iid = create(client)
        assert client.delete(f"/graphs/{iid}").status_code == 200
        assert client.get(f"/graphs/{iid}/marking").status_code == 404

    def test_strict_deadline(self, client):
        doc = {"roles": [], "events": [{"id": "a"}], "initial": {"included": ["a"], "pending": {"a": 10}}}
        iid = create(client, doc)
        r = client.post(f"/graphs/{iid}/advance", json={"ticks": 11})
        assert r.status_code == 409 and r.json()["events"] == ["a"]
        r = client.post(f"/graphs/{iid}/advance", json={"ticks": 11, "mode": "permissive"})
        assert r.json()["overdue"] == [{"event": "a", "deadline": 10, "overdue_by": 1}]
        assert r.json()["marking"]["pending"] == {"a": 0}


class TestConformance:
    @pytest.mark.parametrize("seed", [1, 7, 42])
    def test_matches_library(self, client, escrow, seed):
        iid = create(client)
        lib = Library(escrow)
        for op, args in make_script(seed):
            assert send(client, iid, op, args) == normalise(lib.apply(op, args)), (op, args)

    def test_instance_isolation(self, client):
        a, b = create(client), create(client)
        before = client.get(f"/graphs/{b}/marking").json()
        client.post(f"/graphs/{a}/execute", json={"event": "placeInEscrow", "role": "sender", "value": 1})
        client.post(f"/graphs/{a}/advance", json={"ticks": 100})
        assert client.get(f"/graphs/{b}/marking").json() == before
        assert client.get(f"/graphs/{a}/marking").json() != before


def test_snapshot_survives_restart(tmp_path):
    path = tmp_path / "snap.json"
    with TestClient(create_app(str(path))) as c:
        iid = create(c)
        c.post(f"/graphs/{iid}/execute", json={"event": "placeInEscrow", "role": "sender", "value": 3})
        c.post(f"/graphs/{iid}/advance", json={"ticks": 30})
        marking = c.get(f"/graphs/{iid}/marking").json()
    assert path.exists()
    with TestClient(create_app(str(path))) as c:
        assert c.get(f"/graphs/{iid}/marking").json() == marking

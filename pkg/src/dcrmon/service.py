"""JSON-over-HTTP facade over the engine.

Instances live in memory; each has its own lock so execute/advance on one
instance are serialized while different instances proceed independently.
"""
from __future__ import annotations

import json
import logging
import threading
import uuid
from contextlib import asynccontextmanager
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from . import core
from .core import Marking
from .errors import (
    DcrError,
    DcrSyntaxError,
    DeadlineViolation,
    NotEnabled,
    SchemaError,
)
from .expr import parse_duration
from .model import ModelDocument, document_from_dict, document_to_dict, marking_to_dict, validate_model
from .monitor import blocker_to_dict

log = logging.getLogger(__name__)


@dataclass
class Instance:
    doc: ModelDocument
    marking: Marking
    lock: threading.Lock


class InstanceStore:
    def __init__(self):
        self._instances: dict[str, Instance] = {}
        self._lock = threading.Lock()

    def add(self, doc: ModelDocument, marking: Optional[Marking] = None, iid: Optional[str] = None) -> str:
        iid = iid or uuid.uuid4().hex
        with self._lock:
            self._instances[iid] = Instance(doc, marking or doc.initial, threading.Lock())
        return iid

    def get(self, iid: str) -> Instance:
        with self._lock:
            inst = self._instances.get(iid)
        if inst is None:
            raise HTTPException(404, detail={"error": "UnknownInstance", "id": iid})
        return inst

    def remove(self, iid: str) -> None:
        self.get(iid)
        with self._lock:
            self._instances.pop(iid, None)

    def items(self):
        with self._lock:
            return list(self._instances.items())


def snapshot(store: InstanceStore) -> dict:
    out = {}
    for iid, inst in store.items():
        with inst.lock:
            out[iid] = document_to_dict(replace(inst.doc, initial=inst.marking))
    return out


def restore(store: InstanceStore, data: dict) -> None:
    for iid, d in data.items():
        doc = document_from_dict(d)
        store.add(doc, doc.initial, iid)


def _state(inst: Instance) -> dict:
    return {"marking": marking_to_dict(inst.marking),
            "accepting": core.is_accepting(inst.doc.graph, inst.marking)}


def _error(status, **body):
    return HTTPException(status, detail=body)


def _role(inst, role):
    if role is not None and role not in inst.doc.graph.roles:
        raise _error(400, error="UnknownRole", role=role)
    return role


async def _json_body(request: Request) -> dict:
    try:
        body = await request.json()
    except (json.JSONDecodeError, UnicodeDecodeError):
        raise _error(400, error="BadRequest", message="body is not valid JSON")
    if not isinstance(body, dict):
        raise _error(400, error="BadRequest", message="body must be a JSON object")
    return body


def create_app(snapshot_path: Optional[str] = None) -> FastAPI:
    store = InstanceStore()

    @asynccontextmanager
    async def lifespan(app):
        if snapshot_path and Path(snapshot_path).exists():
            restore(store, json.loads(Path(snapshot_path).read_text()))
            log.info("restored %d instances from %s", len(store.items()), snapshot_path)
        yield
        if snapshot_path:
            Path(snapshot_path).write_text(json.dumps(snapshot(store), indent=2))
            log.info("wrote %d instances to %s", len(store.items()), snapshot_path)

    app = FastAPI(title="dcrmon engine", lifespan=lifespan)
    app.state.store = store

    @app.exception_handler(HTTPException)
    async def _http_error(request, exc):
        body = exc.detail if isinstance(exc.detail, dict) else {"error": str(exc.detail)}
        return JSONResponse(body, status_code=exc.status_code)

    @app.post("/graphs", status_code=201)
    async def create_instance(request: Request):
        body = await _json_body(request)
        try:
            doc = document_from_dict(body, validate=False)
        except (SchemaError, DcrSyntaxError) as exc:
            raise _error(422, error="SchemaError",
                         diagnostics=[{"path": getattr(exc, "path", "$"), "message": str(exc)}])
        diagnostics = validate_model(doc)
        if diagnostics:
            raise _error(422, error="SchemaError",
                         diagnostics=[{"path": d.path, "message": d.message} for d in diagnostics])
        iid = store.add(doc)
        return {"id": iid, **_state(store.get(iid))}

    @app.delete("/graphs/{iid}")
    def delete_instance(iid: str):
        store.remove(iid)
        return {"deleted": iid}

    @app.get("/graphs/{iid}/enabled")
    def get_enabled(iid: str, role: Optional[str] = None, verbose: int = 0):
        inst = store.get(iid)
        role = _role(inst, role)
        with inst.lock:
            graph, marking = inst.doc.graph, inst.marking
            verdicts = {e: core.is_enabled(graph, marking, e, role) for e in graph.events}
        out = {"role": role, "enabled": sorted(e for e, v in verdicts.items() if v.enabled)}
        if verbose:
            out["blocked"] = {e: [blocker_to_dict(b) for b in v.blockers]
                              for e, v in sorted(verdicts.items()) if not v.enabled}
        return out

    @app.post("/graphs/{iid}/execute")
    async def execute_event(iid: str, request: Request):
        inst = store.get(iid)
        body = await _json_body(request)
        event = body.get("event")
        role = _role(inst, body.get("role"))
        value = body.get("value")
        if value is not None and not isinstance(value, (bool, int, str)):
            raise _error(400, error="BadRequest", message="value must be an integer, boolean or string")
        with inst.lock:
            try:
                inst.marking = core.execute(inst.doc.graph, inst.marking, event, role, value)
            except NotEnabled as exc:
                raise _error(409, error="NotEnabled", event=event,
                             blockers=[blocker_to_dict(b) for b in exc.verdict.blockers])
            except DcrError as exc:
                raise _error(400, error=type(exc).__name__, message=str(exc))
            return {"event": event, **_state(inst)}

    @app.post("/graphs/{iid}/advance")
    async def advance(iid: str, request: Request):
        inst = store.get(iid)
        body = await _json_body(request)
        try:
            ticks = parse_duration(body.get("ticks", 0))
            mode = core.TimeMode(body.get("mode", "strict"))
        except (DcrSyntaxError, ValueError) as exc:
            raise _error(400, error="BadRequest", message=str(exc))
        with inst.lock:
            try:
                inst.marking, overdue = core.advance_time(inst.doc.graph, inst.marking, ticks, mode)
            except DeadlineViolation as exc:
                raise _error(409, error="DeadlineViolation", events=exc.events)
            return {"overdue": [o.__dict__ for o in overdue], **_state(inst)}

    @app.get("/graphs/{iid}/marking")
    def get_marking(iid: str):
        inst = store.get(iid)
        with inst.lock:
            return marking_to_dict(inst.marking)

    @app.get("/graphs/{iid}/accepting")
    def get_accepting(iid: str):
        inst = store.get(iid)
        with inst.lock:
            return {"accepting": core.is_accepting(inst.doc.graph, inst.marking)}

    return app

"""HTTP facade over the workspace pipeline plus stepwise interpreter sessions.

One process serves many workspaces. Mutations on a workspace are serialized
by a per-workspace lock; distinct workspaces never contend. Sessions are
in-memory: each one owns a machine state pinned to the code image it was
opened against, and refuses to step once that image's inputs change.
"""
from __future__ import annotations

import os
import re
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel
from starlette.exceptions import HTTPException as StarletteHTTPException

from .pipeline import SPEC_SLOTS, StaleUpstream, WorkspaceStore
from .tinyvm import MachineCode, MachineState, run

DEFAULT_PORT = 8000
_INT_TOKEN = re.compile(r"[+-]?[0-9]+\Z")


def env_int(name: str, default: int) -> int:
    raw = os.environ.get(name, "").strip()
    return int(raw) if raw else default


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, **extra):
        self.status = status
        self.body = {"error": {"code": code, "message": message, **extra}}
        super().__init__(message)


def _not_found(what: str) -> ApiError:
    return ApiError(404, "E_NOT_FOUND", f"{what} not found")


@dataclass
class Session:
    id: str
    workspace_id: str
    input_text: str
    max_steps: int
    max_trace: int
    code: MachineCode
    pinned_hash: str
    pinned_optimized: bool
    state: MachineState = field(default_factory=MachineState)
    records_len: int = 0
    truncated: bool = False
    last_trap: str | None = None
    last_trap_message: str | None = None

    def summary(self, changed: dict[int, int] | None = None,
                output_delta: str = "") -> dict:
        st = self.state
        return {
            "pc": st.pc,
            "steps": st.steps,
            "halted": st.halted,
            "trap": self.last_trap,
            "trap_message": self.last_trap_message,
            "stack": list(st.stack),
            "memory": {str(k): st.memory[k] for k in sorted(st.memory)},
            "changed_cells": {str(k): v for k, v in sorted((changed or {}).items())},
            "output": st.output,
            "output_delta": output_delta,
            "input_pending": list(st.input_tokens),
            "trace_len": self.records_len,
            "trace_truncated": self.truncated,
        }


class CreateWorkspaceBody(BaseModel):
    name: str


class RunBody(BaseModel):
    optimize: bool = True
    source: str | None = None


class InterpretBody(BaseModel):
    input: str = ""
    maxSteps: int | None = None
    maxTrace: int | None = None
    withTrace: bool = True


class OpenSessionBody(BaseModel):
    input: str = ""
    maxSteps: int | None = None
    maxTrace: int | None = None


class StepBody(BaseModel):
    n: int = 1


class FeedBody(BaseModel):
    integers: list[int]


def _check_input_text(text: str):
    for tok in text.split():
        if not _INT_TOKEN.match(tok):
            raise ApiError(400, "E_INPUT_MALFORMED",
                           f"{tok!r} is not an integer")


def create_app(store: WorkspaceStore, max_steps: int | None = None,
               max_trace: int | None = None,
               static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="tws", docs_url=None, redoc_url=None)
    step_ceiling = max_steps if max_steps is not None else env_int(
        "TWS_MAX_STEPS", 1_000_000)
    trace_ceiling = max_trace if max_trace is not None else env_int(
        "TWS_MAX_TRACE", 100_000)

    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()
    ws_locks: dict[str, threading.Lock] = {}

    def lock_for(ws_id: str) -> threading.Lock:
        with registry_lock:
            return ws_locks.setdefault(ws_id, threading.Lock())

    def get_workspace(ws_id: str):
        try:
            return store.get(ws_id)
        except KeyError:
            raise _not_found(f"workspace {ws_id}")

    def get_session(sid: str) -> Session:
        try:
            return sessions[sid]
        except KeyError:
            raise _not_found(f"session {sid}")

    def clamp(requested: int | None, ceiling: int) -> int:
        return ceiling if requested is None else max(0, min(requested, ceiling))

    @app.exception_handler(ApiError)
    async def on_api_error(request: Request, exc: ApiError):
        return JSONResponse(exc.body, status_code=exc.status)

    @app.exception_handler(RequestValidationError)
    async def on_bad_body(request: Request, exc: RequestValidationError):
        return JSONResponse(
            {"error": {"code": "E_BAD_REQUEST", "message": str(exc.errors()[:1])}},
            status_code=400)

    @app.exception_handler(StarletteHTTPException)
    async def on_http_error(request: Request, exc: StarletteHTTPException):
        code = "E_NOT_FOUND" if exc.status_code == 404 else f"E_HTTP_{exc.status_code}"
        return JSONResponse({"error": {"code": code, "message": str(exc.detail)}},
                            status_code=exc.status_code)

    def stale(exc: StaleUpstream) -> ApiError:
        return ApiError(409, "E_STALE_UPSTREAM", str(exc), subfases=exc.stages)

    # ------------------------------------------------------------ workspaces

    @app.post("/workspaces", status_code=201)
    def create_workspace(body: CreateWorkspaceBody):
        with registry_lock:
            ws = store.create(body.name)
        return {"id": ws.id, "name": ws.name}

    @app.get("/workspaces")
    def list_workspaces():
        return [{"id": ws.id, "name": ws.name} for ws in store.list()]

    @app.get("/workspaces/{ws_id}")
    def show_workspace(ws_id: str):
        ws = get_workspace(ws_id)
        with lock_for(ws_id):
            return {"id": ws.id, "name": ws.name,
                    "slots": {slot: text is not None
                              for slot, text in ws.slots.items()},
                    "status": ws.status()}

    @app.get("/workspaces/{ws_id}/status")
    def workspace_status(ws_id: str):
        ws = get_workspace(ws_id)
        with lock_for(ws_id):
            return ws.status()

    @app.delete("/workspaces/{ws_id}", status_code=204)
    def delete_workspace(ws_id: str):
        get_workspace(ws_id)
        with lock_for(ws_id):
            with registry_lock:
                store.delete(ws_id)
                for sid in [s for s, sess in sessions.items()
                            if sess.workspace_id == ws_id]:
                    del sessions[sid]
        return Response(status_code=204)

    # ------------------------------------------------------------ slot texts

    def _slot_or_404(slot: str) -> str:
        if slot not in SPEC_SLOTS:
            raise _not_found(f"spec slot {slot}")
        return slot

    @app.get("/workspaces/{ws_id}/specs/{slot}")
    def get_spec(ws_id: str, slot: str):
        ws = get_workspace(ws_id)
        text = ws.slots.get(_slot_or_404(slot))
        if text is None:
            raise _not_found(f"{slot} text")
        return PlainTextResponse(text)

    @app.put("/workspaces/{ws_id}/specs/{slot}", status_code=204)
    async def put_spec(ws_id: str, slot: str, request: Request):
        ws = get_workspace(ws_id)
        text = (await request.body()).decode("utf-8")
        with lock_for(ws_id):
            ws.set_spec(_slot_or_404(slot), text)
            store.save(ws)
        return Response(status_code=204)

    @app.get("/workspaces/{ws_id}/source")
    def get_source(ws_id: str):
        ws = get_workspace(ws_id)
        if ws.slots["source"] is None:
            raise _not_found("source text")
        return PlainTextResponse(ws.slots["source"])

    @app.put("/workspaces/{ws_id}/source", status_code=204)
    async def put_source(ws_id: str, request: Request):
        ws = get_workspace(ws_id)
        text = (await request.body()).decode("utf-8")
        with lock_for(ws_id):
            ws.set_source(text)
            store.save(ws)
        return Response(status_code=204)

    # -------------------------------------------------------------- building

    @app.post("/workspaces/{ws_id}/compile")
    def compile_workspace(ws_id: str):
        ws = get_workspace(ws_id)
        with lock_for(ws_id):
            report = ws.compile()
            store.save(ws)
        return report

    @app.post("/workspaces/{ws_id}/run")
    def run_workspace(ws_id: str, body: RunBody | None = None):
        ws = get_workspace(ws_id)
        body = body or RunBody()
        with lock_for(ws_id):
            try:
                report = ws.run(body.source, optimize_flag=body.optimize)
            except StaleUpstream as exc:
                raise stale(exc)
            store.save(ws)
        return report

    @app.post("/workspaces/{ws_id}/interpret")
    def interpret_workspace(ws_id: str, body: InterpretBody | None = None):
        ws = get_workspace(ws_id)
        body = body or InterpretBody()
        with lock_for(ws_id):
            try:
                report = ws.interpret(
                    body.input,
                    max_steps=clamp(body.maxSteps, step_ceiling),
                    with_trace=body.withTrace,
                    max_trace=clamp(body.maxTrace, trace_ceiling))
            except StaleUpstream as exc:
                raise stale(exc)
            store.save(ws)
        return report

    @app.get("/workspaces/{ws_id}/artifacts/{stage}")
    def show_artifact(ws_id: str, stage: str):
        ws = get_workspace(ws_id)
        with lock_for(ws_id):
            status = ws.status()
            if stage not in status:
                raise _not_found(f"subfase {stage}")
            entry = ws.cache.get(stage)
            return {"subfase": stage, "status": status[stage],
                    "payload": entry["payload"] if entry else None}

    # -------------------------------------------------------------- sessions

    def _pinnable_code(ws):
        entry = ws.cache.get("Code")
        if ws.stage_status("Code") != "fresh" or entry is None:
            raise stale(StaleUpstream(["Code"]))
        return entry

    def _check_session_current(sess: Session):
        try:
            ws = store.get(sess.workspace_id)
        except KeyError:
            raise _not_found(f"workspace {sess.workspace_id}")
        entry = ws.cache.get("Code")
        if (ws.stage_status("Code") != "fresh" or entry is None
                or entry["input_hash"] != sess.pinned_hash
                or entry["payload"]["optimized"] != sess.pinned_optimized):
            raise stale(StaleUpstream(
                ["Code"], "workspace code changed after this session started"))
        return ws

    @app.post("/workspaces/{ws_id}/sessions", status_code=201)
    def open_session(ws_id: str, body: OpenSessionBody | None = None):
        ws = get_workspace(ws_id)
        body = body or OpenSessionBody()
        _check_input_text(body.input)
        with lock_for(ws_id):
            entry = _pinnable_code(ws)
            sess = Session(
                id=uuid.uuid4().hex[:12],
                workspace_id=ws_id,
                input_text=body.input,
                max_steps=clamp(body.maxSteps, step_ceiling),
                max_trace=clamp(body.maxTrace, trace_ceiling),
                code=MachineCode.from_obj(entry["payload"]["code"]),
                pinned_hash=entry["input_hash"],
                pinned_optimized=entry["payload"]["optimized"])
            sess.state.feed_input(body.input)
            with registry_lock:
                sessions[sess.id] = sess
        return {"id": sess.id, "workspace": ws_id, "state": sess.summary()}

    @app.get("/sessions/{sid}")
    def show_session(sid: str):
        sess = get_session(sid)
        with lock_for(sess.workspace_id):
            return {"id": sess.id, "workspace": sess.workspace_id,
                    "state": sess.summary()}

    @app.post("/sessions/{sid}/step")
    def step_session(sid: str, body: StepBody | None = None):
        sess = get_session(sid)
        n = (body or StepBody()).n
        if n < 0:
            raise ApiError(400, "E_BAD_REQUEST", "step count must be >= 0")
        with lock_for(sess.workspace_id):
            _check_session_current(sess)
            if n == 0:
                return {"records": [], "state": sess.summary()}
            state = sess.state
            before_memory = dict(state.memory)
            before_out = len(state.output)
            target = min(state.steps + n, sess.max_steps)
            res = run(sess.code, state, target, with_trace=True,
                      max_trace=max(0, sess.max_trace - sess.records_len))
            sess.records_len += len(res.trace)
            sess.truncated = sess.truncated or res.trace_truncated
            trap, message = res.trap, res.trap_message
            if trap == "StepLimit" and target < sess.max_steps:
                trap = message = None
            sess.last_trap, sess.last_trap_message = trap, message
            changed = {k: v for k, v in state.memory.items()
                       if before_memory.get(k) != v}
            return {"records": [r.to_obj() for r in res.trace],
                    "state": sess.summary(changed, state.output[before_out:])}

    @app.post("/sessions/{sid}/input")
    def feed_session(sid: str, body: FeedBody):
        sess = get_session(sid)
        with lock_for(sess.workspace_id):
            sess.state.input_tokens.extend(str(n) for n in body.integers)
            if sess.last_trap == "InputExhausted":
                sess.last_trap = sess.last_trap_message = None
            return {"state": sess.summary()}

    @app.post("/sessions/{sid}/reset")
    def reset_session(sid: str):
        sess = get_session(sid)
        with lock_for(sess.workspace_id):
            _check_session_current(sess)
            sess.state = MachineState()
            sess.state.feed_input(sess.input_text)
            sess.records_len = 0
            sess.truncated = False
            sess.last_trap = sess.last_trap_message = None
            return {"state": sess.summary()}

    @app.delete("/sessions/{sid}", status_code=204)
    def close_session(sid: str):
        get_session(sid)
        with registry_lock:
            sessions.pop(sid, None)
        return Response(status_code=204)

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="ui")

    return app

"""HTTP gateway over the runtime.

State-changing endpoints translate requests into runtime commands; an
``Idempotency-Key`` header makes retried submissions safe.  ``/events``
streams the ordered gateway event feed as server-sent events.
"""

from __future__ import annotations

import json
import queue
from datetime import date, datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Header, HTTPException
from fastapi.responses import StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from ..spaces import UnknownSpaceError
from .runtime import GalaxySystem


class ChatBody(BaseModel):
    text: str
    session: str = ""
    ts: str | None = None
    skip_extraction: bool = False


class PlanDecisionBody(BaseModel):
    decision: dict
    ts: str | None = None


class AlignBody(BaseModel):
    answers: dict
    ts: str | None = None


class InvokeBody(BaseModel):
    args: dict = {}
    ts: str | None = None


class TickBody(BaseModel):
    ts: str | None = None


class RegisterSpaceBody(BaseModel):
    manifest: dict
    ts: str | None = None


class SessionCloseBody(BaseModel):
    transcript: list[dict]
    session: str = ""
    ts: str | None = None


def _ts(value: str | None) -> str:
    return value or datetime.now(timezone.utc).isoformat()


def create_app(system: GalaxySystem, static_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="galaxy-gateway")
    app.state.system = system
    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=static_dir, html=True),
                  name="ui")

    def submit(command: dict, key: str | None) -> dict:
        try:
            return system.submit(command, idempotency_key=key)
        except (KeyError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.post("/chat")
    def chat(body: ChatBody, idempotency_key: str | None = Header(default=None)):
        return submit({"kind": "chat", "ts": _ts(body.ts), "text": body.text,
                       "session": body.session,
                       "skip_extraction": body.skip_extraction}, idempotency_key)

    @app.get("/events")
    def events(after: int = 0):
        def stream():
            for event in list(system.bus.history):
                if event["seq"] > after:
                    yield f"id: {event['seq']}\nevent: {event['kind']}\n" \
                          f"data: {json.dumps(event['payload'])}\n\n"
            q = system.bus.subscribe()
            try:
                while True:
                    try:
                        event = q.get(timeout=15)
                    except queue.Empty:
                        yield ": keepalive\n\n"
                        continue
                    yield f"id: {event['seq']}\nevent: {event['kind']}\n" \
                          f"data: {json.dumps(event['payload'])}\n\n"
            finally:
                system.bus.unsubscribe(q)
        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/plan/{day}")
    def get_plan(day: str):
        plan = system.agenda.plans.get(date.fromisoformat(day))
        if plan is None:
            raise HTTPException(status_code=404, detail=f"no plan for {day}")
        return plan.to_doc()

    @app.post("/plan/{day}/draft")
    def draft_plan(day: str, body: TickBody,
                   idempotency_key: str | None = Header(default=None)):
        return submit({"kind": "draft_plan", "ts": _ts(body.ts), "date": day},
                      idempotency_key)

    @app.post("/plan/{day}")
    def decide_plan(day: str, body: PlanDecisionBody,
                    idempotency_key: str | None = Header(default=None)):
        return submit({"kind": "plan_decision", "ts": _ts(body.ts), "date": day,
                       "decision": body.decision}, idempotency_key)

    @app.post("/align/{task_id}")
    def align(task_id: str, body: AlignBody,
              idempotency_key: str | None = Header(default=None)):
        return submit({"kind": "align", "ts": _ts(body.ts), "task_id": task_id,
                       "answers": body.answers}, idempotency_key)

    @app.post("/spaces/{space}/{node}")
    def invoke(space: str, node: str, body: InvokeBody,
               idempotency_key: str | None = Header(default=None)):
        return submit({"kind": "invoke", "ts": _ts(body.ts), "space": space,
                       "node": node, "args": body.args}, idempotency_key)

    @app.get("/spaces")
    def spaces():
        return {"catalog": system.spaces.catalog()}

    @app.post("/spaces")
    def register_space(body: RegisterSpaceBody,
                       idempotency_key: str | None = Header(default=None)):
        return submit({"kind": "register_space", "ts": _ts(body.ts),
                       "manifest": body.manifest}, idempotency_key)

    @app.get("/spaces/{space}")
    def space_schema(space: str):
        try:
            return system.spaces.get_manifest(space).to_doc()
        except UnknownSpaceError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.post("/session/close")
    def session_close(body: SessionCloseBody,
                      idempotency_key: str | None = Header(default=None)):
        return submit({"kind": "session_close", "ts": _ts(body.ts),
                       "transcript": body.transcript,
                       "session": body.session}, idempotency_key)

    @app.post("/tick")
    def tick(body: TickBody, idempotency_key: str | None = Header(default=None)):
        return submit({"kind": "tick", "ts": _ts(body.ts)}, idempotency_key)

    @app.get("/forest")
    def forest():
        nodes = [{"path": node.node_id, "semantic": node.semantic,
                  "function_ref": node.function_ref,
                  "usage_count": node.usage_count,
                  "kernel_only": node.kernel_only}
                 for node in system.forest.nodes()]
        return {"nodes": nodes}

    @app.get("/report/{day}")
    def report(day: str):
        return system.daily_report(date.fromisoformat(day))

    @app.get("/diagnostics")
    def diagnostics():
        return {"degraded_mode": system.kernel.degraded_mode,
                "escalations": system.kernel.escalations,
                "advisories": system.kernel.advisory_log,
                "proposals": {pid: p.status
                              for pid, p in system.kernel.proposals.items()}}

    @app.get("/latency/{task_id}")
    def latency(task_id: str):
        return system.latency_report(task_id)

    @app.get("/digest")
    def digest():
        return {"digest": system.state_digest()}

    return app

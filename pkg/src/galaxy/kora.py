"""KoRa: the cognition-enhanced generative agent.

Intents (user utterances or proactive plan triggers) are routed through the
KoRa view of the forest, grounded by node retrieval, and compiled into an
action chain of generate / align / invoke / respond steps.  Execution runs on
a strict-LIFO state stack: a responsive task may interrupt a suspended
proactive one, missing parameters suspend the chain until the user aligns
them, and completed work is reflected back into persona.
"""

from __future__ import annotations

import re
import time as _time
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

import numpy as np

from . import ids
from .embedding import cosine, embed_text
from .events import ensure_aware
from .forest import DIALOGUE_PATH, Forest
from .inference import (Caller, ChatRequest, ChatResponse, InferenceService,
                        NoFixtureError)
from .persona import Insight, Persona
from .privacy import PrivacyGate
from .records import ExecutionRecord, payload_digest
from .spaces import MissingArgumentError, SpaceRegistry

ACTION_KINDS = ("generate", "align", "invoke", "respond")

QUOTED = re.compile(r"[\"“'][^\"”']*[\"”']")


def routing_embedding(text: str) -> np.ndarray:
    """Embed the intent with quoted payloads stripped; full text if all quoted."""
    skeleton = QUOTED.sub(" ", text).strip()
    return embed_text(skeleton) if skeleton else embed_text(text)


@dataclass
class Intent:
    text: str
    origin: str                      # responsive | proactive
    arrival: datetime
    session_id: str = ""
    tool_hint: str | None = None     # proactive plan actions carry their tool
    embedding: np.ndarray = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.origin not in ("responsive", "proactive"):
            raise ValueError(f"unknown intent origin {self.origin!r}")
        self.arrival = ensure_aware(self.arrival)
        if self.embedding is None:
            self.embedding = embed_text(self.text)


@dataclass
class Action:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in ACTION_KINDS:
            raise ValueError(f"unknown action kind {self.kind!r}")


@dataclass
class ActionChain:
    actions: list[Action]
    intent: Intent
    provenance: list[str] = field(default_factory=list)   # retrieved node ids

    @property
    def target_tool(self) -> str | None:
        for action in self.actions:
            if action.kind == "invoke":
                return action.params.get("space")
        return None


@dataclass
class StateFrame:
    task_id: str
    task_type: str                   # proactive | responsive
    source: str
    chain: ActionChain
    cursor: int = 0
    details: list[dict] = field(default_factory=list)
    suspension: dict | None = None
    status: str = "active"           # active | suspended | completed | failed | cancelled

    @property
    def suspended(self) -> bool:
        return self.suspension is not None


class StateStack:
    """Strict LIFO: only the top frame ever advances."""

    def __init__(self) -> None:
        self.frames: list[StateFrame] = []

    def push(self, frame: StateFrame) -> None:
        self.frames.append(frame)

    def top(self) -> StateFrame | None:
        return self.frames[-1] if self.frames else None

    def pop(self) -> StateFrame:
        frame = self.frames[-1]
        if frame.status not in ("completed", "failed", "cancelled"):
            raise KoRaError("only completed or cancelled frames may be popped")
        return self.frames.pop()

    def find(self, task_id: str) -> StateFrame | None:
        for frame in self.frames:
            if frame.task_id == task_id:
                return frame
        return None


class KoRaError(Exception):
    pass


class KoRa:
    def __init__(self, forest: Forest, spaces: SpaceRegistry, persona: Persona,
                 inference: InferenceService, gate: PrivacyGate,
                 route_threshold: float = 0.35, route_fanout: int = 3,
                 retrieve_k: int = 3, dedup_threshold: float = 0.8,
                 dedup_window_hours: float = 24.0) -> None:
        self.forest = forest
        self.spaces = spaces
        self.persona = persona
        self.inference = inference
        self.gate = gate
        self.route_threshold = route_threshold
        self.route_fanout = route_fanout
        self.retrieve_k = retrieve_k
        self.dedup_threshold = dedup_threshold
        self.dedup_window = timedelta(hours=dedup_window_hours)
        self.stack = StateStack()
        self.degraded = False                        # responsive chat only
        self.archive: list[StateFrame] = []          # popped frames
        self.reflected_through = 0                   # archive index already reflected
        self.capability_gaps: list[dict] = []
        self.scheduled: list[dict] = []              # proactive triggers
        self.record_listeners: list = []
        self.respond_listeners: list = []            # (task_id, channel, text)
        self.align_listeners: list = []              # (task_id, missing, prompt)
        self.status_listeners: list = []             # (task_id, status)
        self.gap_listeners: list = []                # capability-gap records

    # -- intent entry ------------------------------------------------------

    def handle_intent(self, intent: Intent) -> dict:
        now = intent.arrival
        verdict, existing = self.dedup_check(intent)
        if verdict == "duplicate":
            message = (f"Already scheduled: this matches active task {existing}; "
                       "adopting it and reporting its status.")
            self._deliver(existing, "chat", message)
            return {"task_id": existing, "result": "duplicate"}
        view = self.forest.subset_view("kora")
        started = _time.monotonic()
        # Quoted payload text is an argument, not part of the intent shape;
        # routing on the skeleton keeps long quotes from drowning the verb.
        query = routing_embedding(intent.text)
        if self.degraded:
            paths = [DIALOGUE_PATH]
        else:
            paths = self.forest.route_intent(view, query, intent.text,
                                             self.route_threshold, self.route_fanout)
        retrieved = []
        if paths != [DIALOGUE_PATH]:
            for path in paths:
                retrieved.extend(self.forest.retrieve(view, path, query,
                                                      self.retrieve_k, now=now))
        task_id = ids.fresh("task")
        self._emit(ExecutionRecord(
            route="kernel_cognition_retrieval", caller="kora", outcome="ok",
            elapsed_s=_time.monotonic() - started,
            digest=payload_digest(intent.text), task_id=task_id, timestamp=now))
        chain = self.build_action_chain(intent, retrieved, task_id=task_id)
        frame = StateFrame(
            task_id=task_id,
            task_type=intent.origin,
            source=intent.session_id or intent.origin,
            chain=chain)
        self.stack.push(frame)
        self._notify_status(frame)
        self.drive(now)
        return {"task_id": task_id, "result": "started", "status": frame.status}

    # -- chain assembly ----------------------------------------------------

    def build_action_chain(self, intent: Intent, retrieved: list,
                           task_id: str | None = None) -> ActionChain:
        provenance = [n.node_id for n in retrieved]
        invokable = next(
            (n for n in retrieved
             if n.function_ref and n.path[0] == "env" and len(n.path) == 4),
            None)
        if invokable is None:
            if retrieved:
                gap = {"intent": intent.text, "task_id": task_id,
                       "reason": "no invokable node for retrieved paths"}
                self.capability_gaps.append(gap)
            actions = [Action("generate", {"purpose": "content_generation",
                                           "template": "open_chat"}),
                       Action("respond", {"channel": "chat"})]
            return ActionChain(actions, intent, provenance)

        space_name, node_name = invokable.path[2], invokable.path[3]
        manifest = self.spaces.get_manifest(space_name)
        node = next(n for n in manifest.nodes if n.name == node_name)
        args: dict = {}
        pending_content: list[str] = []
        missing: list[str] = []
        for param in node.params:
            value = self._resolve_param(param.name, intent.text)
            if value is not None:
                args[param.name] = value
            elif param.name in ("content", "text", "body"):
                pending_content.append(param.name)
            elif param.required:
                missing.append(param.name)

        actions: list[Action] = []
        if pending_content:
            actions.append(Action("generate", {
                "purpose": "content_generation",
                "template": f"{space_name}.{node_name}",
                "fills": pending_content}))
        if missing:
            actions.append(Action("align", {
                "missing": missing,
                "prompt": f"I need {', '.join(missing)} to run "
                          f"{space_name}.{node_name}. Could you provide it?"}))
        actions.append(Action("invoke", {
            "space": space_name, "node": node_name, "args": args,
            "node_id": invokable.node_id}))
        actions.append(Action("respond", {"channel": "chat"}))
        return ActionChain(actions, intent, provenance)

    def _resolve_param(self, name: str, text: str):
        """Intent text first, then persona/identity; None means unresolved."""
        if name == "address":
            m = re.search(r"\b[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}\b", text)
            if m:
                return m.group()
            m = re.search(r"\bto\s+([A-Z][a-z]+)\b", text)
            if m:
                return self.persona.lookup_identity("email", label=m.group(1))
            return None
        if name == "target_language":
            m = re.search(r"\b(?:into|to)\s+(\w+)\s*$", text)
            return m.group(1) if m else None
        if name in ("content", "text", "body"):
            m = re.search(r"[\"“']([^\"”']+)[\"”']", text)
            return m.group(1) if m else None
        return None

    # -- execution ---------------------------------------------------------

    def drive(self, now: datetime) -> None:
        """Advance the top frame until it suspends, fails, or the stack drains."""
        while True:
            frame = self.stack.top()
            if frame is None or frame.suspended or frame.status != "active":
                return
            self.execute_step(frame.task_id, now)
            top = self.stack.top()
            if top is frame and (frame.suspended or frame.status != "active"):
                return

    def execute_step(self, task_id: str, now: datetime) -> str:
        frame = self.stack.top()
        if frame is None or frame.task_id != task_id:
            raise KoRaError(f"task {task_id} is not on top of the stack")
        if frame.suspended:
            raise KoRaError(f"task {task_id} is suspended")
        action = frame.chain.actions[frame.cursor]
        if action.kind == "generate":
            self._step_generate(frame, action, now)
        elif action.kind == "align":
            self._step_align(frame, action)
            return "suspended"
        elif action.kind == "invoke":
            if not self._step_invoke(frame, action, now):
                return frame.status if frame.status != "active" else "suspended"
        elif action.kind == "respond":
            self._step_respond(frame, action, now)
        frame.cursor += 1
        if frame.cursor >= len(frame.chain.actions):
            frame.status = "completed"
            self._notify_status(frame)
            self.archive.append(self.stack.pop())
        return frame.status if frame.status != "active" else "ok"

    def _step_generate(self, frame: StateFrame, action: Action,
                       now: datetime) -> None:
        prefix = self._cognitive_prefix(frame.chain.intent)
        request = ChatRequest(
            messages=[{"role": "system", "content": prefix},
                      {"role": "user", "content": frame.chain.intent.text}],
            purpose=action.params.get("purpose", "content_generation"))
        decision = self.inference.select_backend(request.purpose, Caller.KORA)
        exchange = None
        if decision.must_mask:
            exchange = self.gate.clear_request(request)
        started = _time.monotonic()
        try:
            response = self.inference.complete_chat(request, Caller.KORA)
            text = response.text
        except NoFixtureError:
            # Scripted runs without a generation fixture fall back to a
            # deterministic echo so the chain can still complete.
            response = ChatResponse(text="", backend_id="scripted", elapsed_s=0.0)
            text = f"Noted: {frame.chain.intent.text}"
        if exchange is not None:
            text, unknown = self.gate.restore_response(text, exchange[0])
            for token in unknown:
                self._emit(ExecutionRecord(
                    route="other", caller="kernel", outcome="unknown_placeholder",
                    detail=token, task_id=frame.task_id, timestamp=now))
        self._emit(ExecutionRecord(
            route="kora_cloud_call", caller="kora", outcome="ok",
            elapsed_s=max(response.elapsed_s, _time.monotonic() - started),
            digest=payload_digest(request.text), task_id=frame.task_id,
            timestamp=now))
        frame.details.append({"step": "generate", "text": text})
        for invoke in frame.chain.actions:
            if invoke.kind == "invoke":
                for name in action.params.get("fills", []):
                    invoke.params["args"][name] = text

    def _cognitive_prefix(self, intent: Intent) -> str:
        """Top user nodes plus KoRa's role node, prefixed to every generate prompt."""
        lines = ["You are KoRa, the user's personal assistant."]
        role = self.forest.get(("self", "kora"))
        if role is not None:
            lines.append(role.semantic)
        for node in self.persona.query(intent.text, 3, now=intent.arrival):
            lines.append(f"User context: {node.semantic}")
        return "\n".join(lines)

    def _step_align(self, frame: StateFrame, action: Action) -> None:
        frame.suspension = {"missing": list(action.params["missing"]),
                            "prompt": action.params["prompt"]}
        frame.status = "suspended"
        self._notify_status(frame)
        for listener in self.align_listeners:
            listener(frame.task_id, frame.suspension["missing"],
                     frame.suspension["prompt"])

    def _step_invoke(self, frame: StateFrame, action: Action,
                     now: datetime) -> bool:
        params = action.params
        try:
            result = self.spaces.invoke(params["space"], params["node"],
                                        dict(params["args"]),
                                        task_id=frame.task_id, now=now)
        except MissingArgumentError as exc:
            # Retroactive alignment: surface the missing names and suspend here.
            align = Action("align", {
                "missing": exc.missing,
                "prompt": f"I need {', '.join(exc.missing)} to run "
                          f"{params['space']}.{params['node']}. Could you provide it?"})
            frame.chain.actions.insert(frame.cursor, align)
            self._step_align(frame, align)
            return False
        except Exception as exc:
            frame.status = "failed"
            frame.details.append({"step": "invoke", "error": str(exc)})
            self._notify_status(frame)
            self._emit(ExecutionRecord(
                route="kernel_space_call", caller="kora", outcome="invoke_failed",
                detail=str(exc), task_id=frame.task_id, timestamp=now))
            self.archive.append(self.stack.pop())
            self._resume_interrupted(now)
            return False
        frame.details.append({"step": "invoke", "space": params["space"],
                              "node": params["node"], "args": dict(params["args"]),
                              "result": result})
        return True

    def _step_respond(self, frame: StateFrame, action: Action,
                      now: datetime) -> None:
        started = _time.monotonic()
        text = self._compose_response(frame)
        channel = action.params.get("channel", "chat")
        self._deliver(frame.task_id, channel, text)
        frame.details.append({"step": "respond", "channel": channel, "text": text})
        self._emit(ExecutionRecord(
            route="kora_feedback", caller="kora", outcome="ok",
            elapsed_s=_time.monotonic() - started,
            digest=payload_digest(text), task_id=frame.task_id, timestamp=now))

    def _compose_response(self, frame: StateFrame) -> str:
        for detail in reversed(frame.details):
            if detail["step"] == "invoke":
                return (f"Done: {detail['space']}.{detail['node']} "
                        f"finished with {detail['result']}")
            if detail["step"] == "generate":
                return detail["text"]
        if frame.chain.provenance:
            return ("I don't have a tool for that yet; I've noted the "
                    "capability gap.")
        return "Happy to chat - what's on your mind?"

    # -- suspend / resume --------------------------------------------------

    def resume_chain(self, task_id: str, answers: dict, now: datetime) -> dict:
        frame = self.stack.find(task_id)
        if frame is None or not frame.suspended:
            raise KoRaError(f"task {task_id} is not suspended")
        missing = frame.suspension["missing"]
        invoke = next(a for a in frame.chain.actions[frame.cursor:]
                      if a.kind == "invoke")
        answered = []
        for name in list(missing):
            if name in answers:
                invoke.params["args"][name] = answers[name]
                missing.remove(name)
                answered.append(name)
        for name in answered:
            self.persona.add_insight(Insight(
                summary=f"user provided {name}: {answers[name]}",
                dimension="context", timestamp=now))
        if missing:
            return {"result": "still_suspended", "missing": list(missing)}
        frame.suspension = None
        frame.status = "active"
        # Skip past the satisfied align action.
        if frame.chain.actions[frame.cursor].kind == "align":
            frame.cursor += 1
        self._notify_status(frame)
        if self.stack.top() is frame:
            self.drive(now)
        return {"result": "resumed", "status": frame.status}

    def _resume_interrupted(self, now: datetime) -> None:
        top = self.stack.top()
        if top is not None and top.status == "active" and not top.suspended:
            self.drive(now)

    # -- dedup -------------------------------------------------------------

    def dedup_check(self, intent: Intent) -> tuple[str, str | None]:
        candidates: list[tuple[str, str | None, np.ndarray, datetime]] = []
        for frame in self.stack.frames:
            if frame.status in ("completed", "failed", "cancelled"):
                continue
            candidates.append((frame.task_id, frame.chain.target_tool,
                               frame.chain.intent.embedding,
                               frame.chain.intent.arrival))
        for trigger in self.scheduled:
            if trigger.get("fired"):
                continue
            candidates.append((trigger["trigger_id"], trigger.get("tool"),
                               trigger["embedding"], trigger["when"]))
        for task_id, tool, emb, when in candidates:
            if tool is None:
                continue
            if intent.tool_hint is not None and intent.tool_hint != tool:
                continue
            if abs(intent.arrival - when) > self.dedup_window:
                continue
            if cosine(intent.embedding, emb) >= self.dedup_threshold:
                return "duplicate", task_id
        return "proceed", None

    # -- proactive plan execution ------------------------------------------

    def run_daily_plan(self, summary: dict) -> list[dict]:
        """Register each plan action as a timed proactive trigger."""
        registered = []
        for action in summary.get("actions", []):
            if action.get("type") != "pattern" and action.get("type") != "schedule":
                continue
            intent_text = action.get("intent", "")
            trigger = {
                "trigger_id": f"trig-{len(self.scheduled) + 1}",
                "when": ensure_aware(datetime.fromisoformat(action["trigger"])),
                "intent": intent_text,
                "tool": action.get("tool"),
                "embedding": embed_text(intent_text),
                "fired": False,
            }
            self.scheduled.append(trigger)
            registered.append(trigger)
        return registered

    def tick(self, now: datetime) -> list[dict]:
        """Fire every due, unfired trigger; past-due triggers catch up once."""
        now = ensure_aware(now)
        results = []
        for trigger in self.scheduled:
            if trigger["fired"] or trigger["when"] > now:
                continue
            trigger["fired"] = True
            intent = Intent(text=trigger["intent"], origin="proactive",
                            arrival=now, tool_hint=trigger.get("tool"))
            outcome = self.handle_intent(intent)
            outcome["trigger_id"] = trigger["trigger_id"]
            outcome["tool"] = trigger.get("tool")
            results.append(outcome)
        return results

    # -- reflection --------------------------------------------------------

    def reflect(self, now: datetime) -> dict:
        frames = self.archive[self.reflected_through:]
        completed = [f for f in frames if f.status == "completed"]
        if not completed:
            raise KoRaError("reflection requires at least one completed frame")
        self.reflected_through = len(self.archive)
        request = ChatRequest(
            messages=[{"role": "system",
                       "content": "Summarize completed assistant tasks into "
                                  "user insights as JSON."},
                      {"role": "user",
                       "content": "\n".join(f.chain.intent.text for f in completed)}],
            purpose="insight_aggregation")
        import json as _json
        response = self.inference.complete_chat(request, Caller.KORA)
        insights = []
        for item in _json.loads(response.text).get("insights", []):
            insight = Insight(summary=item["summary"],
                              dimension=item.get("dimension", "habit"),
                              timestamp=now)
            self.persona.add_insight(insight)
            insights.append(insight)
        gaps = list(self.capability_gaps)
        self.capability_gaps = []
        for gap in gaps:
            for listener in self.gap_listeners:
                listener(gap)
        return {"insights": [i.insight_id for i in insights],
                "capability_gaps": gaps}

    # -- plumbing ----------------------------------------------------------

    def _deliver(self, task_id: str, channel: str, text: str) -> None:
        for listener in self.respond_listeners:
            listener(task_id, channel, text)

    def _notify_status(self, frame: StateFrame) -> None:
        for listener in self.status_listeners:
            listener(frame.task_id, frame.status)

    def _emit(self, record: ExecutionRecord) -> None:
        for listener in self.record_listeners:
            listener(record)

"""Runtime assembly: wires the forest, spaces, agenda, persona, KoRa, Kernel,
and Privacy Gate together behind one deterministic command interface.

Every externally originated input (chat turn, perceived interaction, plan
decision, alignment answer, timer tick, ...) is a command document.  Live
operation appends the command to the log and applies it; replay applies the
same documents to a fresh runtime and reproduces the identical state digest.
"""

from __future__ import annotations

import hashlib
import json
import queue
import threading
from datetime import date, datetime, timezone
from pathlib import Path

from .. import ids
from ..agenda import Agenda, ExtractionParseError
from ..config import GalaxyConfig
from ..events import TimeEvent, ensure_aware
from ..forest import create_forest, default_seed_manifest
from ..inference import (Caller, ChatRequest, HostedBackend, InferenceService,
                         NoFixtureError)
from ..kernel import Kernel, latency_breakdown
from ..kora import Intent, KoRa
from ..persona import IdentityFact, Persona
from ..privacy import Detector, PrivacyGate
from ..records import ExecutionRecord
from ..registry import FunctionRegistry
from ..spaces import (SpaceManifest, SpaceRegistry, chat_window_manifest,
                      email_manifest, memo_manifest,
                      register_builtin_functions)
from .store import CommandLog

IDENTITY_KIND_TO_CATEGORY = {
    "name": "PER", "phone": "PHONE", "email": "EMAIL",
    "address": "ADDR", "other": "PER",
}


class EventBus:
    """Fan-out of gateway events to stream subscribers, strictly ordered."""

    def __init__(self) -> None:
        self.seq = 0
        self.history: list[dict] = []
        self._subscribers: list[queue.Queue] = []
        self._lock = threading.Lock()

    def emit(self, kind: str, payload: dict) -> dict:
        with self._lock:
            self.seq += 1
            event = {"seq": self.seq, "kind": kind, "payload": payload}
            self.history.append(event)
            subscribers = list(self._subscribers)
        for q in subscribers:
            q.put(event)
        return event

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        with self._lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)


class GalaxySystem:
    def __init__(self, config: GalaxyConfig | None = None, scripted: bool = True,
                 log_path: Path | None = None, run_self_check: bool = False) -> None:
        self.config = config or GalaxyConfig()
        self.config.data_dir.mkdir(parents=True, exist_ok=True)
        self.ids = ids.IdAllocator()
        self.bus = EventBus()
        self.lock = threading.RLock()
        self.log = CommandLog(log_path) if log_path is not None else None
        self._idempotency: dict[str, dict] = {}

        cloud = local = None
        if not scripted:
            cloud = HostedBackend(self.config.cloud_url, self.config.cloud_model,
                                  "cloud", api_key=self.config.cloud_key,
                                  timeout_s=self.config.llm_timeout_s,
                                  retries=self.config.llm_retries, require_gate=True)
            local = HostedBackend(self.config.local_url, self.config.local_model,
                                  "local", timeout_s=self.config.llm_timeout_s,
                                  retries=self.config.llm_retries)
        self.inference = InferenceService(scripted=scripted, cloud=cloud, local=local)

        registry = FunctionRegistry(list(self.config.module_search_paths))
        with ids.scope(self.ids):
            self.forest = create_forest(
                default_seed_manifest(include_builtin_spaces=False),
                registry, validate_bindings=False)
        register_builtin_functions(registry, self.config.data_dir,
                                   translate=self._translate)
        self.spaces = SpaceRegistry(self.forest, self.config.data_dir)
        self.agenda = Agenda(
            self.inference,
            cluster_threshold=self.config.cluster_threshold,
            min_support=self.config.min_support,
            window_days=self.config.mining_window_days,
            peak_fraction=self.config.peak_fraction)
        self.detector = Detector()
        self.gate = PrivacyGate(self.detector,
                                enabled=self.config.privacy_gate_enabled)
        self.persona = Persona(
            self.forest, self.inference,
            merge_threshold=self.config.merge_threshold,
            promote_support=self.config.promote_support,
            decay_days=self.config.decay_days,
            buffer_days=self.config.buffer_days,
            enabled=self.config.persona_enabled)
        self.kora = KoRa(
            self.forest, self.spaces, self.persona, self.inference, self.gate,
            route_threshold=self.config.route_threshold,
            route_fanout=self.config.route_fanout,
            dedup_threshold=self.config.dedup_threshold,
            dedup_window_hours=self.config.dedup_window_hours)
        self.kernel = Kernel(
            self.forest, self.spaces, self.agenda, self.inference, self.gate,
            self.config.data_dir,
            proposal_support=self.config.proposal_support,
            coverage_threshold=self.config.coverage_threshold,
            rejection_cooldown_days=self.config.rejection_cooldown_days,
            self_repair_enabled=self.config.self_repair_enabled)

        self.last_patterns = []
        self._wire()
        with ids.scope(self.ids):
            for manifest in (memo_manifest(), chat_window_manifest(),
                             email_manifest()):
                self.spaces.register(manifest)
        if run_self_check:
            self.self_check()

    # -- wiring ------------------------------------------------------------

    def _wire(self) -> None:
        self.spaces.event_listeners.append(self._on_time_event)
        self.spaces.record_listeners.append(self._on_record)
        self.spaces.registration_listeners.append(
            lambda action, name: self.bus.emit(
                "space_registered", {"action": action, "name": name,
                                     "catalog": self.spaces.catalog()}))
        self.kora.record_listeners.append(self._on_record)
        self.kora.respond_listeners.append(
            lambda task_id, channel, text: self.bus.emit(
                "chat_delta", {"task_id": task_id, "channel": channel,
                               "text": text}))
        self.kora.align_listeners.append(
            lambda task_id, missing, prompt: self.bus.emit(
                "alignment_request", {"task_id": task_id, "missing": missing,
                                      "prompt": prompt}))
        self.kora.status_listeners.append(
            lambda task_id, status: self.bus.emit(
                "task_status", {"task_id": task_id, "status": status}))
        self.agenda.plan_listeners.append(self.kora.run_daily_plan)
        self.agenda.propose_listeners.append(
            lambda plan: self.bus.emit("plan_proposed", plan.to_doc()))
        self.kernel.alignment_listeners.append(
            lambda item: self.bus.emit("alignment_request", item))
        self.persona.identity_listeners.append(self._on_identity_fact)

    def _on_time_event(self, event: TimeEvent) -> None:
        self.agenda.ingest_time_event(event)

    def _on_record(self, record: ExecutionRecord) -> None:
        self.kernel.oversee_record(record)

    def _on_identity_fact(self, fact: IdentityFact) -> None:
        category = IDENTITY_KIND_TO_CATEGORY.get(fact.kind)
        if category:
            self.detector.add_identity_term(category, fact.value)

    def _translate(self, text: str, target_language: str) -> str:
        try:
            response = self.inference.complete_chat(ChatRequest(
                messages=[{"role": "system", "content": "Translate."},
                          {"role": "user",
                           "content": f"into {target_language}: {text}"}],
                purpose="content_generation"), Caller.KORA)
            return response.text
        except NoFixtureError:
            return f"[{target_language}] {text}"

    # -- command interface -------------------------------------------------

    def submit(self, command: dict, idempotency_key: str | None = None) -> dict:
        with self.lock:
            if idempotency_key is not None and idempotency_key in self._idempotency:
                return self._idempotency[idempotency_key]
            if self.log is not None:
                self.log.append(command)
            result = self._apply(command)
            if idempotency_key is not None:
                self._idempotency[idempotency_key] = result
            return result

    def replay(self, commands: list[dict]) -> None:
        with self.lock:
            for command in commands:
                self._apply(command)

    def _apply(self, command: dict) -> dict:
        with ids.scope(self.ids):
            handler = getattr(self, f"_cmd_{command['kind']}", None)
            if handler is None:
                raise ValueError(f"unknown command kind {command['kind']!r}")
            return handler(command)

    @staticmethod
    def _ts(command: dict) -> datetime:
        return ensure_aware(datetime.fromisoformat(command["ts"]))

    def _cmd_chat(self, command: dict) -> dict:
        now = self._ts(command)
        text = command["text"]
        session = command.get("session", "")
        turn_event = TimeEvent(kind="behavior", start=now, tool="chat_window",
                               intent_text=text, provenance="chat_window")
        self.agenda.ingest_time_event(turn_event)
        if not command.get("skip_extraction"):
            try:
                for event in self.agenda.extract_events_from_text(text, now):
                    self.agenda.ingest_time_event(event)
            except NoFixtureError:
                pass
            except ExtractionParseError as exc:
                self.kernel.oversee_record(ExecutionRecord(
                    route="other", caller="kernel",
                    outcome="extraction_parse_error", detail=str(exc),
                    timestamp=now))
        if command.get("perceive_only"):
            return {"result": "perceived", "event_id": turn_event.event_id}
        intent = Intent(text=text, origin="responsive", arrival=now,
                        session_id=session)
        return self.kora.handle_intent(intent)

    def _cmd_perceive(self, command: dict) -> dict:
        event = self.spaces.perceive(command["raw"])
        return {"event_id": event.event_id}

    def _cmd_time_event(self, command: dict) -> dict:
        event = TimeEvent.from_doc(command["event"])
        status = self.agenda.ingest_time_event(event)
        return {"result": status, "event_id": event.event_id}

    def _cmd_invoke(self, command: dict) -> dict:
        now = self._ts(command)
        result = self.spaces.invoke(command["space"], command["node"],
                                    command.get("args", {}), now=now)
        return {"result": result}

    def _cmd_draft_plan(self, command: dict) -> dict:
        day = date.fromisoformat(command["date"])
        plan = self.agenda.draft_daily_plan(day, patterns=self.last_patterns or None)
        return {"plan": plan.to_doc()}

    def _cmd_plan_decision(self, command: dict) -> dict:
        day = date.fromisoformat(command["date"])
        return self.agenda.confirm_plan(day, command["decision"],
                                        now=self._ts(command))

    def _cmd_align(self, command: dict) -> dict:
        return self.kora.resume_chain(command["task_id"], command["answers"],
                                      self._ts(command))

    def _cmd_tick(self, command: dict) -> dict:
        fired = self.kora.tick(self._ts(command))
        return {"fired": fired}

    def _cmd_session_close(self, command: dict) -> dict:
        now = self._ts(command)
        insights = self.persona.aggregate_insights(
            command["transcript"], command.get("session", ""), now)
        outcomes = [self.persona.add_insight(i) for i in insights]
        promoted = self.persona.promote_insights(now)
        return {"insights": [i.insight_id for i in insights],
                "outcomes": outcomes, "promoted": promoted}

    def _cmd_promote(self, command: dict) -> dict:
        return {"promoted": self.persona.promote_insights(self._ts(command))}

    def _cmd_decay(self, command: dict) -> dict:
        return {"removed": self.persona.decay_sweep(self._ts(command))}

    def _cmd_mine_patterns(self, command: dict) -> dict:
        self.last_patterns = self.agenda.mine_behavior_patterns(self._ts(command))
        return {"patterns": [p.to_doc() for p in self.last_patterns]}

    def _cmd_propose_spaces(self, command: dict) -> dict:
        now = self._ts(command)
        self.last_patterns = self.agenda.mine_behavior_patterns(now)
        proposals = []
        for pattern in self.last_patterns:
            proposal = self.kernel.propose_space(pattern, now=now)
            if proposal is not None:
                proposals.append(proposal.proposal_id)
        return {"proposals": proposals}

    def _cmd_proposal_decision(self, command: dict) -> dict:
        proposal = self.kernel.decide_proposal(
            command["proposal_id"], command["accepted"], now=self._ts(command))
        outcome = {"status": proposal.status}
        if proposal.status == "user_confirmed":
            outcome["scaffold"] = self.kernel.scaffold_space(proposal)
            outcome["status"] = proposal.status
        return outcome

    def _cmd_reflect(self, command: dict) -> dict:
        return self.kora.reflect(self._ts(command))

    def _cmd_register_space(self, command: dict) -> dict:
        manifest = SpaceManifest.from_doc(command["manifest"])
        path = self.spaces.register(manifest)
        return {"path": path}

    def _cmd_unregister_space(self, command: dict) -> dict:
        self.spaces.unregister(command["name"])
        return {"result": "unregistered"}

    # -- queries (no log, no mutation of modeled state) --------------------

    def self_check(self) -> dict:
        with self.lock, ids.scope(self.ids):
            report = self.kernel.self_check()
            self.kora.degraded = self.kernel.degraded_mode
            self.bus.emit("diagnostic", report)
            return report

    def latency_report(self, task_id: str) -> dict:
        return latency_breakdown(self.kernel.all_records, task_id)

    def daily_report(self, day: date) -> dict:
        """Persona-styled daily report including the roast paragraph."""
        plan = self.agenda.plans.get(day)
        try:
            roast = self.inference.complete_chat(ChatRequest(
                messages=[{"role": "system",
                           "content": "Write today's roast, a playful daily "
                                      "report paragraph."},
                          {"role": "user", "content": day.isoformat()}],
                purpose="content_generation"), Caller.KORA).text
        except NoFixtureError:
            done = sum(1 for f in self.kora.archive if f.status == "completed")
            roast = (f"Daily report for {day.isoformat()}: {done} tasks "
                     "completed. Not bad; tomorrow we aim higher.")
        return {"date": day.isoformat(), "roast": roast,
                "plan": plan.to_doc() if plan else None,
                "patterns": [p.to_doc() for p in self.last_patterns]}

    def state_digest(self) -> str:
        """Deterministic digest of the replay-relevant runtime state."""
        forest_nodes = []
        for node in self.forest.nodes():
            doc = {"path": node.node_id, "semantic": node.semantic,
                   "function_ref": node.function_ref,
                   "usage_count": node.usage_count,
                   "extra": node.extra}
            if node.extra.get("persona_node"):
                doc["last_used_at"] = node.last_used_at.isoformat()
            forest_nodes.append(doc)
        state = {
            "forest": forest_nodes,
            "events": [e.to_doc() for e in self.agenda.events],
            "drafts": {d.draft_date.isoformat():
                       {"entries": d.entries, "queue": d.alignment_queue}
                       for d in self.agenda.drafts.values()},
            "plans": {day.isoformat(): plan.to_doc()
                      for day, plan in self.agenda.plans.items()},
            "buffer": [(i.insight_id, i.summary, i.dimension)
                       for i in self.persona.buffer],
            "dropped": self.persona.dropped,
            "stack": [(f.task_id, f.status, f.cursor,
                       [(d.get("step"), d.get("text"), d.get("result"))
                        for d in f.details])
                      for f in self.kora.stack.frames],
            "archive": [(f.task_id, f.status, f.cursor) for f in self.kora.archive],
            "scheduled": [(t["trigger_id"], t["when"].isoformat(), t["fired"])
                          for t in self.kora.scheduled],
            "proposals": {pid: p.status for pid, p in self.kernel.proposals.items()},
            "catalog": self.spaces.catalog(),
            "patterns": [p.to_doc() for p in self.last_patterns],
        }
        blob = json.dumps(state, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def rebuild_from_log(log_path: Path, config: GalaxyConfig | None = None,
                     fixtures: list[tuple] | None = None,
                     upto: int | None = None) -> tuple[GalaxySystem, object]:
    """Replay a command log into a fresh scripted runtime."""
    log = CommandLog(log_path)
    docs, halt = log.read()
    if upto is not None:
        docs = docs[:upto]
    system = GalaxySystem(config=config, scripted=True)
    for fixture in fixtures or []:
        system.inference.scripted.register(*fixture)
    system.replay(docs)
    return system, halt

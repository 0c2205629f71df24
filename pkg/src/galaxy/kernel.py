"""Kernel: the framework-level meta agent.

Consumes the execution-record stream and triggers predefined failure routines
on anomaly patterns, runs boot self-checks that can repair a broken module
search path by consulting design descriptors, proposes and scaffolds new
Spaces from mined behavior patterns, and owns the Privacy Gate configuration.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

from . import ids
from .agenda import Agenda, BehaviorPattern
from .embedding import cosine
from .events import ensure_aware
from .forest import Forest
from .inference import Caller, ChatRequest, InferenceService, NoFixtureError
from .privacy import PrivacyGate, choose_mask_level
from .records import ExecutionRecord
from .spaces import SpaceManifest, SpaceRegistry, validate_manifest

ANOMALY_WINDOW = timedelta(minutes=10)
ANOMALY_REPEATS = 3


@dataclass
class FailureRoutine:
    name: str
    error_kinds: tuple[str, ...]
    steps: tuple[str, ...]            # declarative step names, run in order
    immediate: bool = False           # trigger on first occurrence

    def matches(self, error_kind: str) -> bool:
        return error_kind in self.error_kinds


@dataclass
class SpaceProposal:
    proposal_id: str
    pattern_id: str
    manifest: SpaceManifest
    alignment_question: str
    status: str = "proposed"          # proposed | user_confirmed | rejected | registered
    findings: list[str] = field(default_factory=list)


BUILTIN_ROUTINES = (
    FailureRoutine("reset-space",
                   ("invoke_failed", "space_function_error"),
                   ("reset_component", "reregister_binding")),
    FailureRoutine("tighten-extraction",
                   ("extraction_parse_error",),
                   ("strict_extraction_mode",), immediate=True),
    FailureRoutine("reroute-backend",
                   ("inference_timeout", "inference_transport"),
                   ("reroute_backend",)),
    FailureRoutine("escalate-to-user", (), ("escalate_to_user",)),
)

# Built-in scaffolding templates: space name -> node name -> function source.
SCAFFOLD_TEMPLATES: dict[str, dict[str, str]] = {
    "translator": {
        "translate": (
            "def translate(text, target_language):\n"
            "    return {'translation': f'[{target_language}] ' + text}\n"),
        "open": (
            "def open():\n"
            "    return {'opened': True}\n"),
    },
    "summarizer": {
        "summarize": (
            "def summarize(text):\n"
            "    sentences = [s for s in text.split('.') if s.strip()]\n"
            "    return {'summary': (sentences[0].strip() + '.') if sentences else ''}\n"),
    },
    "clipper": {
        "clip": (
            "def clip(text):\n"
            "    return {'clipped': text[:280]}\n"),
    },
}


class Kernel:
    def __init__(self, forest: Forest, spaces: SpaceRegistry, agenda: Agenda,
                 inference: InferenceService, gate: PrivacyGate,
                 data_root: Path, proposal_support: int = 8,
                 coverage_threshold: float = 0.75,
                 rejection_cooldown_days: int = 14,
                 self_repair_enabled: bool = True) -> None:
        self.forest = forest
        self.spaces = spaces
        self.agenda = agenda
        self.inference = inference
        self.gate = gate
        self.data_root = Path(data_root)
        self.proposal_support = proposal_support
        self.coverage_threshold = coverage_threshold
        self.rejection_cooldown = timedelta(days=rejection_cooldown_days)
        self.self_repair_enabled = self_repair_enabled
        self.routines = {r.name: r for r in BUILTIN_ROUTINES}
        self.records: deque[ExecutionRecord] = deque(maxlen=4096)
        self.all_records: list[ExecutionRecord] = []
        self.advisory_log: list[str] = []
        self.escalations: list[dict] = []
        self.proposals: dict[str, SpaceProposal] = {}
        self.rejected_patterns: dict[str, datetime] = {}   # pattern id -> rejected at
        self._routine_done: set[tuple[str, str]] = set()
        self.degraded_mode = False
        self.alignment_listeners: list = []

    # -- oversee -----------------------------------------------------------

    def oversee_record(self, record: ExecutionRecord) -> dict | None:
        self.records.append(record)
        self.all_records.append(record)
        if record.ok:
            return None
        routine = self._routine_for(record.outcome)
        if routine is not None and routine.immediate:
            return {"trigger": "routine",
                    "report": self.run_failure_routine(routine.name,
                                                       {"record": record})}
        if routine is not None:
            recent = [r for r in self.records
                      if r.outcome == record.outcome
                      and record.timestamp - r.timestamp <= ANOMALY_WINDOW]
            if len(recent) >= ANOMALY_REPEATS:
                context = {"record": record}
                if record.digest:
                    context["digest"] = record.digest
                return {"trigger": "routine",
                        "report": self.run_failure_routine(routine.name, context)}
            return None
        return {"trigger": "meta_reflection",
                "advisory": self._meta_reflect(record)}

    def _routine_for(self, error_kind: str) -> FailureRoutine | None:
        for routine in self.routines.values():
            if routine.matches(error_kind):
                return routine
        return None

    def _meta_reflect(self, record: ExecutionRecord) -> str:
        try:
            response = self.inference.complete_chat(ChatRequest(
                messages=[{"role": "system",
                           "content": "Reflect on this runtime anomaly."},
                          {"role": "user",
                           "content": f"{record.route} {record.outcome}: {record.detail}"}],
                purpose="meta_reflection"), Caller.KERNEL)
            advisory = response.text
        except NoFixtureError:
            advisory = f"unmatched anomaly: {record.outcome} on {record.route}"
        self.advisory_log.append(advisory)
        return advisory

    # -- failure routines --------------------------------------------------

    def run_failure_routine(self, name: str, context: dict) -> dict:
        if name not in self.routines:
            raise KeyError(f"unknown failure routine {name!r}")
        routine = self.routines[name]
        key = (name, str(context.get("space") or context.get("digest") or ""))
        if key in self._routine_done:
            return {"routine": name, "result": "noop",
                    "steps": [], "note": "already repaired"}
        steps: list[dict] = []
        succeeded = True
        for step in routine.steps:
            try:
                outcome = self._run_step(step, context)
                steps.append({"step": step, "outcome": outcome})
            except Exception as exc:
                steps.append({"step": step, "outcome": f"error: {exc}"})
                succeeded = False
                break
        if succeeded:
            self._routine_done.add(key)
        else:
            item = {"kind": "repair_failed", "routine": name,
                    "question": f"Automated repair {name} failed; please assist."}
            self.escalations.append(item)
            for listener in self.alignment_listeners:
                listener(item)
        return {"routine": name, "result": "ok" if succeeded else "escalated",
                "steps": steps}

    def _run_step(self, step: str, context: dict) -> str:
        if step == "reset_component":
            space = context.get("space")
            if not space:
                raise ValueError("reset_component needs a space in context")
            self.spaces.reset_space(space)
            return f"reset sandbox for {space}"
        if step == "reregister_binding":
            self.forest.registry.invalidate_module_cache()
            return "module bindings re-resolved"
        if step == "strict_extraction_mode":
            self.agenda.strict_extraction = True
            return "extraction switched to strict template mode"
        if step == "reroute_backend":
            self.inference.scripted_mode = True
            return "inference rerouted to scripted backend"
        if step == "escalate_to_user":
            item = {"kind": "escalation", "question": context.get(
                "question", "Kernel needs your input to continue.")}
            self.escalations.append(item)
            for listener in self.alignment_listeners:
                listener(item)
            return "escalation raised"
        raise ValueError(f"unknown repair step {step!r}")

    # -- self-check --------------------------------------------------------

    def self_check(self) -> dict:
        """Boot diagnostic; repairs path misconfigurations, quarantines the rest."""
        findings, repairs = self._check_once(repair=self.self_repair_enabled)
        if repairs:
            second_findings, _ = self._check_once(repair=False)
        else:
            second_findings = findings
        unrepaired = list(second_findings)
        if unrepaired:
            self.degraded_mode = True
            for finding in unrepaired:
                if finding["kind"] == "unresolved_binding":
                    self.forest.quarantine(finding["node_id"])
        return {"findings": findings, "repairs": repairs,
                "unrepaired": unrepaired, "degraded_mode": self.degraded_mode}

    def _check_once(self, repair: bool) -> tuple[list[dict], list[dict]]:
        findings: list[dict] = []
        repairs: list[dict] = []
        registry = self.forest.registry
        for node in self.forest.nodes():
            if node.function_ref and not registry.resolves(node.function_ref):
                repaired = False
                if repair and node.design is not None:
                    repaired = self._repair_search_path(node.design.source)
                    if repaired and registry.resolves(node.function_ref):
                        repairs.append({"kind": "search_path_injected",
                                        "node_id": node.node_id,
                                        "source": node.design.source})
                        continue
                findings.append({"kind": "unresolved_binding",
                                 "node_id": node.node_id,
                                 "binding": node.function_ref})
            if node.design is not None and not self._source_exists(node.design.source):
                findings.append({"kind": "missing_design_source",
                                 "node_id": node.node_id,
                                 "source": node.design.source})
        catalog_names = {entry["name"] for entry in self.spaces.catalog()}
        forest_spaces = {n.path[2] for n in self.forest.nodes_under(("env", "spaces"))
                         if len(n.path) == 3}
        for name in sorted(catalog_names - forest_spaces):
            findings.append({"kind": "catalog_without_forest", "name": name})
        for name in sorted(forest_spaces - catalog_names):
            findings.append({"kind": "forest_without_catalog", "name": name})
        return findings, repairs

    def _repair_search_path(self, source: str) -> bool:
        """The case-study repair: locate the module via its design descriptor
        and inject the containing directory into the runtime search path."""
        path = Path(source)
        if not path.is_file():
            return False
        parent = str(path.parent)
        registry = self.forest.registry
        if parent not in registry.module_search_paths:
            registry.module_search_paths.append(parent)
        registry.invalidate_module_cache()
        return True

    def _source_exists(self, source: str) -> bool:
        path = Path(source)
        if path.is_file():
            return True
        return any((Path(root) / path.name).is_file()
                   for root in self.forest.registry.module_search_paths)

    # -- space proposal and scaffolding ------------------------------------

    def propose_space(self, pattern: BehaviorPattern,
                      now: datetime | None = None) -> SpaceProposal | None:
        now = ensure_aware(now) if now else datetime.now(timezone.utc)
        if pattern.support < self.proposal_support:
            return None
        rejected_at = self.rejected_patterns.get(pattern.pattern_id)
        if rejected_at is not None and now - rejected_at < self.rejection_cooldown:
            return None
        if self._pattern_covered(pattern):
            return None
        response = self.inference.complete_chat(ChatRequest(
            messages=[{"role": "system",
                       "content": "Propose a space manifest as JSON for this "
                                  "recurring behavior."},
                      {"role": "user",
                       "content": json.dumps({
                           "tool": pattern.tool,
                           "intent": pattern.representative_intent,
                           "support": pattern.support})}],
            purpose="space_proposal"), Caller.KERNEL)
        manifest = SpaceManifest.from_doc(json.loads(response.text))
        proposal = SpaceProposal(
            proposal_id=ids.fresh("sp"),
            pattern_id=pattern.pattern_id,
            manifest=manifest,
            alignment_question=(
                f"You often {pattern.representative_intent}. Should I build a "
                f"dedicated {manifest.name} space for that?"))
        self.proposals[proposal.proposal_id] = proposal
        item = {"kind": "space_proposal", "proposal_id": proposal.proposal_id,
                "question": proposal.alignment_question}
        for listener in self.alignment_listeners:
            listener(item)
        return proposal

    def _pattern_covered(self, pattern: BehaviorPattern) -> bool:
        for node in self.forest.nodes_under(("env", "spaces")):
            if len(node.path) < 3:
                continue
            if cosine(pattern.centroid_embedding, node.embedding) >= self.coverage_threshold:
                return True
        return False

    def decide_proposal(self, proposal_id: str, accepted: bool,
                        now: datetime | None = None) -> SpaceProposal:
        now = ensure_aware(now) if now else datetime.now(timezone.utc)
        proposal = self.proposals[proposal_id]
        if accepted:
            proposal.status = "user_confirmed"
        else:
            proposal.status = "rejected"
            self.rejected_patterns[proposal.pattern_id] = now
        return proposal

    def scaffold_space(self, proposal: SpaceProposal) -> str:
        if proposal.status != "user_confirmed":
            raise ValueError("only user_confirmed proposals can be scaffolded")
        manifest = proposal.manifest
        template = SCAFFOLD_TEMPLATES.get(manifest.name)
        if template is None:
            item = {"kind": "escalation", "proposal_id": proposal.proposal_id,
                    "question": (f"No template matches space {manifest.name!r}; "
                                 "this requires human guidance.")}
            self.escalations.append(item)
            for listener in self.alignment_listeners:
                listener(item)
            proposal.findings = [f"no template for {manifest.name!r}"]
            return "escalated"
        scaffold_dir = self.data_root / "scaffold"
        scaffold_dir.mkdir(parents=True, exist_ok=True)
        module_name = f"{manifest.name}_tools"
        module_path = scaffold_dir / f"{module_name}.py"
        sources, problems = [], []
        for node in manifest.nodes:
            if node.name not in template:
                problems.append(f"template has no function for node {node.name!r}")
                continue
            sources.append(template[node.name])
            node.function_binding = f"mod:{module_name}:{node.name}"
        if problems:
            proposal.status = "proposed"
            proposal.findings = problems
            return "validation_failed"
        module_path.write_text("".join(sources))
        registry = self.forest.registry
        if str(scaffold_dir) not in registry.module_search_paths:
            registry.module_search_paths.append(str(scaffold_dir))
        registry.invalidate_module_cache()
        problems = validate_manifest(manifest, registry,
                                     {e["name"] for e in self.spaces.catalog()})
        if problems:
            proposal.status = "proposed"
            proposal.findings = problems
            return "validation_failed"
        self.spaces.register(manifest, design_source=str(module_path))
        proposal.status = "registered"
        return "registered"

    # -- privacy -----------------------------------------------------------

    def choose_mask_level(self, destination: str, text: str) -> int:
        from .privacy import categories_at
        present = {s.category
                   for s in self.gate.detector.detect(text, categories_at(4))}
        return choose_mask_level(destination, present)


def latency_breakdown(records: list[ExecutionRecord], task_id: str) -> dict:
    """Per-task latency bucketed by the four execution routes."""
    buckets = {route: 0.0 for route in
               ("kora_cloud_call", "kernel_cognition_retrieval",
                "kernel_space_call", "kora_feedback")}
    for record in records:
        if record.task_id == task_id and record.route in buckets:
            buckets[record.route] += record.elapsed_s
    return {"task_id": task_id, "routes": buckets,
            "total_s": sum(buckets.values())}

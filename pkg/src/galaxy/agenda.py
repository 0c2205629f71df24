"""Short-term behavioral modeling.

Ingests TimeEvents into an append-only retained log, extracts schedules from
utterances, queues conflicts and ambiguities for alignment, mines recurring
behavior patterns (tool + semantic clustering with time-of-day histograms),
and drafts next-day plans that place confirmed schedule entries first and
suggest patterns into open peak slots.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, datetime, time as dtime, timedelta, timezone

import numpy as np

from . import ids
from .clustering import centroid, greedy_cluster
from .embedding import cosine, embed_text
from .events import TimeEvent, ensure_aware, overlaps
from .inference import Caller, ChatRequest, InferenceService

DUPLICATE_SLACK = timedelta(minutes=5)


@dataclass
class BehaviorPattern:
    pattern_id: str
    tool: str
    centroid_embedding: np.ndarray
    representative_intent: str
    support: int
    hour_histogram: list[int]           # 24 bins of event start hours
    weekday_mask: list[bool]            # Monday..Sunday
    exemplar_ids: list[str]
    last_seen: datetime

    def peak_hours(self, peak_fraction: float) -> list[int]:
        top = max(self.hour_histogram)
        if top == 0:
            return []
        return [h for h, c in enumerate(self.hour_histogram)
                if c >= peak_fraction * top]

    def to_doc(self) -> dict:
        return {
            "pattern_id": self.pattern_id,
            "tool": self.tool,
            "representative_intent": self.representative_intent,
            "support": self.support,
            "hour_histogram": self.hour_histogram,
            "weekday_mask": self.weekday_mask,
            "exemplar_ids": self.exemplar_ids,
            "last_seen": self.last_seen.isoformat(),
        }


@dataclass
class PlanSlot:
    start: datetime
    end: datetime
    action: dict            # {"type": "schedule", ...} | {"type": "pattern", ...}


@dataclass
class DailyPlan:
    plan_date: date
    slots: list[PlanSlot] = field(default_factory=list)
    status: str = "proposed"            # proposed | amended | confirmed
    confirmed_at: datetime | None = None

    def to_doc(self) -> dict:
        return {
            "date": self.plan_date.isoformat(),
            "status": self.status,
            "confirmed_at": self.confirmed_at.isoformat() if self.confirmed_at else None,
            "slots": [
                {"start": s.start.isoformat(), "end": s.end.isoformat(),
                 "action": s.action}
                for s in self.slots
            ],
        }


@dataclass
class ScheduleDraft:
    draft_date: date
    entries: list[str] = field(default_factory=list)        # accepted event ids
    alignment_queue: list[tuple[str, str]] = field(default_factory=list)


class ExtractionParseError(Exception):
    """Inference returned an unparseable structured extraction."""


class Agenda:
    def __init__(self, inference: InferenceService, cluster_threshold: float = 0.6,
                 min_support: int = 5, window_days: int = 14,
                 peak_fraction: float = 0.5) -> None:
        self.inference = inference
        self.cluster_threshold = cluster_threshold
        self.min_support = min_support
        self.window_days = window_days
        self.peak_fraction = peak_fraction
        self.events: list[TimeEvent] = []            # append-only retained log
        self.drafts: dict[date, ScheduleDraft] = {}
        self.plans: dict[date, DailyPlan] = {}
        self.strict_extraction = False               # flipped by Kernel's routine
        self.plan_listeners: list = []               # called with confirmed summaries
        self.propose_listeners: list = []            # called with proposed plans

    # -- ingestion ---------------------------------------------------------

    def draft_for(self, day: date) -> ScheduleDraft:
        return self.drafts.setdefault(day, ScheduleDraft(day))

    def ingest_time_event(self, event: TimeEvent) -> str:
        for prior in self.events:
            if (prior.tool == event.tool
                    and prior.intent_text == event.intent_text
                    and overlaps(prior.start - DUPLICATE_SLACK,
                                 (prior.end or prior.start) + DUPLICATE_SLACK,
                                 event.start, event.end or event.start)):
                self.events.append(event)
                return "duplicate"
        self.events.append(event)
        if event.kind != "schedule":
            return "accepted"
        day = event.start.date()
        draft = self.draft_for(day)
        if event.status == "conflicted" or self._conflicts_confirmed(event):
            reason = "ambiguous" if event.status == "conflicted" else "overlap"
            draft.alignment_queue.append((event.event_id, reason))
            return "queued"
        draft.entries.append(event.event_id)
        return "accepted"

    def _conflicts_confirmed(self, event: TimeEvent) -> bool:
        draft = self.drafts.get(event.start.date())
        if draft is None:
            return False
        for other_id in draft.entries:
            other = self.event_by_id(other_id)
            if other and overlaps(event.start, event.end, other.start, other.end):
                return True
        return False

    def event_by_id(self, event_id: str) -> TimeEvent | None:
        for event in self.events:
            if event.event_id == event_id:
                return event
        return None

    # -- extraction --------------------------------------------------------

    def extract_events_from_text(self, utterance: str, now: datetime
                                 ) -> list[TimeEvent]:
        """Structured extraction via inference; ambiguity is queued, never guessed."""
        now = ensure_aware(now)
        request = ChatRequest(
            messages=[{"role": "system",
                       "content": "Extract schedule events as a JSON array."},
                      {"role": "user", "content": utterance}],
            purpose="intent_extraction")
        response = self.inference.complete_chat(request, Caller.KERNEL)
        candidates = self._parse_extraction(response.text)
        events: list[TimeEvent] = []
        for cand in candidates:
            intent = cand.get("intent", utterance)
            if cand.get("ambiguous") or not cand.get("start"):
                event = TimeEvent(kind="schedule", start=now, intent_text=intent,
                                  status="conflicted", provenance="extraction")
            else:
                start = ensure_aware(datetime.fromisoformat(cand["start"]))
                end = None
                if cand.get("end"):
                    end = ensure_aware(datetime.fromisoformat(cand["end"]))
                event = TimeEvent(kind="schedule", start=start, end=end,
                                  intent_text=intent, status="drafted",
                                  provenance="extraction")
            events.append(event)
        return events

    def _parse_extraction(self, text: str) -> list[dict]:
        payload = text
        if self.strict_extraction:
            # Strict template mode: tolerate prose around the array.
            lo, hi = text.find("["), text.rfind("]")
            if lo >= 0 and hi > lo:
                payload = text[lo:hi + 1]
        try:
            data = json.loads(payload)
        except json.JSONDecodeError as exc:
            raise ExtractionParseError(str(exc)) from exc
        if not isinstance(data, list):
            raise ExtractionParseError("extraction did not return a list")
        return data

    # -- conflicts ---------------------------------------------------------

    def detect_conflicts(self, day: date) -> list[tuple[str, str]]:
        """Pairwise overlap check among a draft's entries; returns the queued delta."""
        draft = self.drafts.get(day)
        if draft is None:
            return []
        delta: list[tuple[str, str]] = []
        entries = [self.event_by_id(eid) for eid in draft.entries]
        entries = [e for e in entries if e is not None]
        for i, a in enumerate(entries):
            for b in entries[i + 1:]:
                if overlaps(a.start, a.end, b.start, b.end):
                    item = (b.event_id, "overlap")
                    if item not in draft.alignment_queue:
                        draft.alignment_queue.append(item)
                        delta.append(item)
        for eid, _ in delta:
            if eid in draft.entries:
                draft.entries.remove(eid)
        return delta

    # -- pattern mining ----------------------------------------------------

    def mine_behavior_patterns(self, window_end: datetime,
                               window_days: int | None = None
                               ) -> list[BehaviorPattern]:
        window_days = window_days or self.window_days
        if window_days < 1:
            raise ValueError("mining window must span at least one day")
        window_end = ensure_aware(window_end)
        window_start = window_end - timedelta(days=window_days)
        behaviors = [e for e in self.events
                     if e.kind == "behavior" and window_start <= e.start < window_end]
        behaviors.sort(key=lambda e: (e.start, e.event_id))
        patterns: list[BehaviorPattern] = []
        for tool in sorted({e.tool for e in behaviors}):
            group = [e for e in behaviors if e.tool == tool]
            clusters = greedy_cluster([e.intent_embedding for e in group],
                                      self.cluster_threshold)
            for members in clusters:
                if len(members) < self.min_support:
                    continue
                events = [group[i] for i in members]
                histogram = [0] * 24
                weekdays = [False] * 7
                for e in events:
                    histogram[e.start.hour] += 1
                    weekdays[e.start.weekday()] = True
                patterns.append(BehaviorPattern(
                    pattern_id=ids.fresh("bp"),
                    tool=tool,
                    centroid_embedding=centroid([e.intent_embedding for e in events]),
                    representative_intent=events[0].intent_text,
                    support=len(events),
                    hour_histogram=histogram,
                    weekday_mask=weekdays,
                    exemplar_ids=[e.event_id for e in events],
                    last_seen=max(e.start for e in events),
                ))
        return patterns

    # -- planning ----------------------------------------------------------

    def draft_daily_plan(self, day: date, patterns: list[BehaviorPattern] | None = None
                         ) -> DailyPlan:
        if patterns is None:
            patterns = self.mine_behavior_patterns(
                datetime.combine(day, dtime(0), tzinfo=timezone.utc))
        slots: list[PlanSlot] = []
        draft = self.drafts.get(day)
        busy: list[tuple[datetime, datetime]] = []
        if draft is not None:
            for eid in draft.entries:
                event = self.event_by_id(eid)
                if event is None:
                    continue
                end = event.end or event.start + timedelta(hours=1)
                slots.append(PlanSlot(event.start, end, {
                    "type": "schedule", "event_id": eid,
                    "intent": event.intent_text}))
                busy.append((event.start, end))
        weekday = day.weekday()
        for pattern in sorted(patterns, key=lambda p: p.pattern_id):
            if not pattern.weekday_mask[weekday]:
                continue
            for lo, hi in _contiguous_ranges(pattern.peak_hours(self.peak_fraction)):
                start = datetime.combine(day, dtime(lo), tzinfo=timezone.utc)
                end = datetime.combine(day, dtime(0), tzinfo=timezone.utc) + timedelta(hours=hi + 1)
                if any(overlaps(start, end, b0, b1) for b0, b1 in busy):
                    continue
                slots.append(PlanSlot(start, end, {
                    "type": "pattern", "pattern_id": pattern.pattern_id,
                    "tool": pattern.tool,
                    "intent": pattern.representative_intent}))
                busy.append((start, end))
        slots.sort(key=lambda s: (s.start, s.action.get("type", "")))
        plan = DailyPlan(plan_date=day, slots=slots)
        self.plans[day] = plan
        for listener in self.propose_listeners:
            listener(plan)
        return plan

    def confirm_plan(self, day: date, decision: dict,
                     now: datetime | None = None) -> dict:
        """Apply a user confirm/amend decision; dispatch the summary on confirm."""
        plan = self.plans.get(day)
        if plan is None:
            raise KeyError(f"no plan drafted for {day}")
        if plan.status == "confirmed":
            return {"result": "noop", "plan": plan.to_doc()}
        action = decision.get("action", "confirm")
        if action == "amend":
            removed = set(decision.get("remove", []))
            plan.slots = [s for s in plan.slots
                          if _slot_key(s) not in removed]
            plan.status = "amended"
            return {"result": "amended", "plan": plan.to_doc()}
        plan.status = "confirmed"
        plan.confirmed_at = ensure_aware(now) if now else datetime.now(timezone.utc)
        summary = {
            "date": day.isoformat(),
            "actions": [
                {"trigger": s.start.isoformat(), "end": s.end.isoformat(),
                 **s.action}
                for s in plan.slots
            ],
        }
        for listener in self.plan_listeners:
            listener(summary)
        return {"result": "confirmed", "plan": plan.to_doc(), "summary": summary}


def _slot_key(slot: PlanSlot) -> str:
    kind = slot.action.get("type", "")
    ident = slot.action.get("event_id") or slot.action.get("pattern_id") or ""
    return f"{kind}:{ident}:{slot.start.isoformat()}"


def _contiguous_ranges(hours: list[int]) -> list[tuple[int, int]]:
    if not hours:
        return []
    ranges = []
    lo = prev = hours[0]
    for h in hours[1:]:
        if h == prev + 1:
            prev = h
            continue
        ranges.append((lo, prev))
        lo = prev = h
    ranges.append((lo, prev))
    return ranges

"""Scripted evaluation harness.

Three repeatable suites exercise the runtime end to end:

- ``preference_retention``: a long scripted conversation; measures how many
  stated preferences are recoverable from the user model afterwards.
- ``leakage``: scenarios with planted personal entities sent through the
  outbound gate to a capturing fake cloud backend; counts scenarios whose
  captured payload still contains a planted entity.
- ``pattern_recovery``: a multi-day behavior trace with one planted routine;
  checks the routine is mined and that confirming a plan built from it fires
  a proactive trigger at the right time.

Each suite builds its own isolated runtime in a temp directory, so runs are
independent and deterministic.
"""

from __future__ import annotations

import random
import tempfile
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

from ..config import GalaxyConfig
from ..events import TimeEvent
from ..inference import ChatResponse
from .runtime import GalaxySystem

UTC = timezone.utc

PREFERENCES = [
    ("I prefer oat milk in my coffee", "oat milk coffee"),
    ("I like window seats on long flights", "window seats flights"),
    ("I want meetings scheduled after ten in the morning", "meetings after ten"),
    ("I prefer short bullet point summaries", "bullet point summaries"),
    ("I like jazz playlists while working", "jazz playlists working"),
    ("I prefer vegetarian lunch options", "vegetarian lunch"),
    ("I want reminders fifteen minutes before events", "reminders fifteen minutes"),
    ("I prefer the metric system for distances", "metric system distances"),
    ("I like aisle tables at quiet restaurants", "aisle tables restaurants"),
    ("I prefer dark roast espresso beans", "dark roast espresso"),
]

DISTRACTORS = [
    "the weather looked cloudy again today",
    "traffic on the bridge was heavy this morning",
    "the printer on the third floor jammed twice",
    "someone left an umbrella in the hallway",
    "the elevator music changed last week",
    "a delivery van blocked the driveway briefly",
    "the cafeteria ran out of napkins at noon",
    "the parking garage repainted its arrows",
    "a pigeon sat on the windowsill for an hour",
    "the lobby plants were watered on schedule",
]


def _fresh_system(**config_overrides) -> GalaxySystem:
    data_dir = Path(tempfile.mkdtemp(prefix="galaxy-eval-"))
    config = GalaxyConfig(data_dir=data_dir, **config_overrides)
    return GalaxySystem(config=config, scripted=True)


# -- preference retention --------------------------------------------------

def build_retention_sessions(n_sessions: int = 30, turns_per_session: int = 10,
                             seed: int = 7) -> list[dict]:
    """Sessions of user turns; each preference is restated in three sessions."""
    rng = random.Random(seed)
    sessions = []
    for i in range(n_sessions):
        sessions.append({"session_id": f"s{i:02d}",
                         "marker": f"[session-{i:02d}]", "turns": []})
    for p, (statement, _) in enumerate(PREFERENCES):
        for session_index in (p, p + 10, p + 20):
            sessions[session_index]["turns"].append(statement)
    for session in sessions:
        while len(session["turns"]) < turns_per_session:
            session["turns"].append(rng.choice(DISTRACTORS))
        rng.shuffle(session["turns"])
        session["turns"].insert(0, session["marker"])
    return sessions


def run_preference_retention(persona_enabled: bool = True,
                             seed: int = 7) -> dict:
    system = _fresh_system(persona_enabled=persona_enabled)
    sessions = build_retention_sessions(seed=seed)
    base = datetime(2026, 8, 1, 9, 0, tzinfo=UTC)
    total_turns = 0

    statements = {s for s, _ in PREFERENCES}
    for i, session in enumerate(sessions):
        insights = [{"summary": t, "dimension": "preference"}
                    for t in session["turns"] if t in statements]
        insights += [{"summary": t, "dimension": "context"}
                     for t in session["turns"]
                     if t in DISTRACTORS][:1]
        system.inference.scripted.register(
            "insight_aggregation", (session["marker"],),
            {"insights": insights, "identity": []})
        when = base + timedelta(hours=i)
        for j, turn in enumerate(session["turns"]):
            system.submit({"kind": "chat", "ts": (when + timedelta(minutes=j)).isoformat(),
                           "text": turn, "session": session["session_id"],
                           "skip_extraction": True})
            total_turns += 1
        transcript = [{"role": "user", "content": t} for t in session["turns"]]
        system.submit({"kind": "session_close",
                       "ts": (when + timedelta(minutes=30)).isoformat(),
                       "transcript": transcript,
                       "session": session["session_id"]})

    end = base + timedelta(hours=len(sessions))
    system.submit({"kind": "promote", "ts": end.isoformat()})

    retained = 0
    misses = []
    for statement, probe in PREFERENCES:
        hits = system.persona.query(probe, 3, now=end)
        if any(statement in node.semantic for node in hits):
            retained += 1
        else:
            misses.append(statement)
    return {"suite": "preference_retention", "persona_enabled": persona_enabled,
            "turns": total_turns, "retained": retained,
            "total": len(PREFERENCES), "misses": misses}


# -- privacy leakage -------------------------------------------------------

class CapturingBackend:
    """Fake hosted backend: records every outbound payload verbatim."""

    def __init__(self, backend_id: str) -> None:
        self.backend_id = backend_id
        self.captured: list[str] = []

    def complete(self, request) -> ChatResponse:
        self.captured.append(request.text)
        return ChatResponse(text="Acknowledged.", backend_id=self.backend_id,
                            elapsed_s=0.0)


def build_leakage_scenarios(n: int = 50, seed: int = 11) -> list[dict]:
    rng = random.Random(seed)
    # Names the identity dictionary knows; unknown strangers are out of scope.
    names = ["Alice", "Bob", "Carol", "David", "Emma", "Frank", "Grace",
             "Henry", "Irene", "Jack"]
    cities = ["Shanghai", "Beijing", "London", "Paris", "Tokyo"]
    scenarios = []
    for i in range(n):
        name = rng.choice(names)
        email = f"{name.lower()}{i}@example.com"
        phone = f"+1-555-{rng.randint(100, 999)}-{rng.randint(1000, 9999)}"
        city = rng.choice(cities)
        text = (f"Draft a message for {name} at {email} or {phone}, "
                f"we are meeting in {city} about the quarterly budget")
        scenarios.append({"text": text,
                          "entities": [name, email, phone]})
    return scenarios


def run_leakage(gate_enabled: bool = True, n: int = 50, seed: int = 11) -> dict:
    system = _fresh_system(privacy_gate_enabled=gate_enabled)
    cloud = CapturingBackend("cloud")
    local = CapturingBackend("local")
    system.inference.scripted_mode = False
    system.inference.cloud = cloud
    system.inference.local = local

    scenarios = build_leakage_scenarios(n=n, seed=seed)
    base = datetime(2026, 8, 10, 9, 0, tzinfo=UTC)
    leaked = 0
    for i, scenario in enumerate(scenarios):
        start = len(cloud.captured)
        system.submit({"kind": "chat",
                       "ts": (base + timedelta(minutes=i)).isoformat(),
                       "text": scenario["text"], "session": "leak",
                       "skip_extraction": True})
        payloads = cloud.captured[start:]
        if any(entity in payload for payload in payloads
               for entity in scenario["entities"]):
            leaked += 1
    return {"suite": "leakage", "gate_enabled": gate_enabled,
            "scenarios": len(scenarios), "leaked": leaked,
            "cloud_calls": len(cloud.captured)}


# -- behavior pattern recovery ---------------------------------------------

def build_routine_trace(support: int = 9, seed: int = 3) -> list[TimeEvent]:
    """Fourteen days of behavior events with one planted weekday routine."""
    rng = random.Random(seed)
    base = date(2026, 8, 3)                      # a Monday
    events: list[TimeEvent] = []
    planted = 0
    day = base
    while planted < support:
        if day.weekday() < 5:
            start = datetime(day.year, day.month, day.day, 9,
                             rng.choice([0, 5, 10]), tzinfo=UTC)
            events.append(TimeEvent(kind="behavior", start=start,
                                    tool="email",
                                    intent_text="review the overnight inbox",
                                    provenance="email"))
            planted += 1
        day += timedelta(days=1)
    noise_texts = ["jot a random shopping thought", "archive an old receipt",
                   "skim a product newsletter", "check the weather widget"]
    for i in range(4):
        start = datetime(2026, 8, 4 + 3 * i, 14 + i, 30, tzinfo=UTC)
        events.append(TimeEvent(kind="behavior", start=start, tool="memo",
                                intent_text=noise_texts[i], provenance="memo"))
    events.sort(key=lambda e: e.start)
    return events


def run_pattern_recovery(support: int = 9, seed: int = 3) -> dict:
    system = _fresh_system()
    events = build_routine_trace(support=support, seed=seed)
    for event in events:
        system.submit({"kind": "time_event", "ts": event.start.isoformat(),
                       "event": event.to_doc()})
    window_end = datetime(2026, 8, 17, 0, 0, tzinfo=UTC)
    mined = system.submit({"kind": "mine_patterns",
                           "ts": window_end.isoformat()})["patterns"]
    routine = next((p for p in mined if p["tool"] == "email"), None)

    plan_day = date(2026, 8, 17)                 # the following Monday
    system.submit({"kind": "draft_plan", "ts": window_end.isoformat(),
                   "date": plan_day.isoformat()})
    confirm = system.submit({"kind": "plan_decision",
                             "ts": window_end.isoformat(),
                             "date": plan_day.isoformat(),
                             "decision": {"action": "confirm"}})
    fired = system.submit({"kind": "tick",
                           "ts": datetime(2026, 8, 17, 9, 1,
                                          tzinfo=UTC).isoformat()})["fired"]
    return {"suite": "pattern_recovery",
            "patterns": mined, "routine": routine,
            "routine_found": routine is not None,
            "routine_support": routine["support"] if routine else 0,
            "confirmed": confirm, "fired": fired,
            "trigger_fired": any(f.get("tool") == "email" for f in fired)}


SUITES = {
    "preference_retention": run_preference_retention,
    "leakage": run_leakage,
    "pattern_recovery": run_pattern_recovery,
}


def run_eval(suite: str, **kwargs) -> dict:
    if suite not in SUITES:
        raise ValueError(f"unknown eval suite {suite!r}; "
                         f"choose from {sorted(SUITES)}")
    return SUITES[suite](**kwargs)

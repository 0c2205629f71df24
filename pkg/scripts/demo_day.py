#!/usr/bin/env python3
"""Walk one scripted day through the full runtime and narrate what happens.

Covers the main loops end to end: reactive chats (including a suspension that
is resolved through an alignment answer), behavior mining over a seeded trace,
a drafted and confirmed next-day plan, the proactive trigger firing, and the
daily report. Also demonstrates crash recovery: the command log is replayed
into a second runtime and the state digests are compared.
"""

import argparse
import tempfile
from datetime import datetime, timedelta, timezone
from pathlib import Path

from galaxy.config import GalaxyConfig
from galaxy.events import TimeEvent
from galaxy.gateway.runtime import GalaxySystem, rebuild_from_log

UTC = timezone.utc
T0 = datetime(2026, 8, 20, 9, 0, tzinfo=UTC)

FIXTURES = [
    ("content_generation", ("interesting",),
     "Octopuses have three hearts; two stop when they swim."),
    ("insight_aggregation", (), {"insights": [
        {"summary": "front-loads errands before ten", "dimension": "habit"}]}),
]


def say(label: str, text: str) -> None:
    print(f"[{label:>9}] {text}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data-dir", type=Path, default=None)
    args = parser.parse_args()
    data_dir = args.data_dir or Path(tempfile.mkdtemp(prefix="galaxy-demo-"))
    log_path = data_dir / "commands.jsonl"

    system = GalaxySystem(config=GalaxyConfig(data_dir=data_dir),
                         log_path=log_path)
    for fixture in FIXTURES:
        system.inference.scripted.register(*fixture)
    system.bus.subscribe()      # events also flow to stream subscribers

    def chat(text, minutes=0):
        at = T0 + timedelta(minutes=minutes)
        say("user", text)
        out = system.submit({"kind": "chat", "ts": at.isoformat(),
                             "text": text, "session": "demo",
                             "skip_extraction": True})
        say("system", f"task {out.get('task_id')} -> {out.get('status')}")
        return out

    chat('write "buy milk and eggs" to my memo')
    chat('send an email to bob@example.com saying "kickoff moved to ten"', 2)
    chat("tell me something interesting", 4)

    suspended = chat('send an email saying "the report is ready"', 6)
    say("align", "answering the missing address question")
    system.submit({"kind": "align", "ts": (T0 + timedelta(minutes=7)).isoformat(),
                   "task_id": suspended["task_id"],
                   "answers": {"address": "boss@example.com"}})

    # Two weeks of a weekday 9am routine, then mine and plan tomorrow.
    day = T0.date() - timedelta(days=14)
    planted = 0
    while planted < 9:
        if day.weekday() < 5:
            start = datetime(day.year, day.month, day.day, 9, tzinfo=UTC)
            system.submit({"kind": "time_event", "ts": start.isoformat(),
                           "event": TimeEvent(kind="behavior", start=start,
                                              tool="email",
                                              intent_text="review the overnight inbox",
                                              event_id=f"seed-{planted}").to_doc()})
            planted += 1
        day += timedelta(days=1)
    mined = system.submit({"kind": "mine_patterns",
                           "ts": (T0 + timedelta(hours=1)).isoformat()})
    for pattern in mined["patterns"]:
        say("mined", f"{pattern['tool']}: {pattern['representative_intent']} "
                     f"(support {pattern['support']})")

    tomorrow = (T0 + timedelta(days=1)).date()
    plan = system.submit({"kind": "draft_plan",
                          "ts": (T0 + timedelta(hours=1)).isoformat(),
                          "date": tomorrow.isoformat()})["plan"]
    for slot in plan["slots"]:
        say("plan", f"{slot['start']} {slot['action'].get('intent')}")
    system.submit({"kind": "plan_decision",
                   "ts": (T0 + timedelta(hours=2)).isoformat(),
                   "date": tomorrow.isoformat(),
                   "decision": {"action": "confirm"}})
    say("plan", "confirmed")

    fired = system.submit({"kind": "tick",
                           "ts": (T0 + timedelta(days=1, minutes=5)).isoformat()})
    for outcome in fired["fired"]:
        say("trigger", f"{outcome['tool']}: task {outcome['task_id']} "
                       f"-> {outcome['status']}")

    system.submit({"kind": "reflect",
                   "ts": (T0 + timedelta(days=1, hours=1)).isoformat()})
    report = system.daily_report(T0.date())
    say("report", report["roast"])

    rebuilt, halt = rebuild_from_log(
        log_path, config=GalaxyConfig(data_dir=data_dir / "rebuilt"),
        fixtures=FIXTURES)
    match = rebuilt.state_digest() == system.state_digest()
    say("replay", f"halt={halt}, digest match={match}")
    if not match:
        raise SystemExit(1)


if __name__ == "__main__":
    main()

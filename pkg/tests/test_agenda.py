import json
from datetime import date, datetime, timedelta, timezone

import pytest

from galaxy import ids
from galaxy.agenda import Agenda, ExtractionParseError
from galaxy.clustering import greedy_cluster
from galaxy.events import TimeEvent
from galaxy.inference import InferenceService

UTC = timezone.utc
MONDAY = date(2026, 8, 3)


@pytest.fixture
def agenda(id_scope):
    return Agenda(InferenceService(scripted=True))


def behavior(day_offset, hour, tool="email", text="review the overnight inbox",
             minute=0):
    start = datetime.combine(MONDAY + timedelta(days=day_offset),
                             datetime.min.time(), tzinfo=UTC)
    return TimeEvent(kind="behavior",
                     start=start + timedelta(hours=hour, minutes=minute),
                     tool=tool, intent_text=text)


def schedule(day_offset, hour, text, end_hour=None, status="drafted"):
    day = MONDAY + timedelta(days=day_offset)
    start = datetime(day.year, day.month, day.day, hour, tzinfo=UTC)
    end = datetime(day.year, day.month, day.day, end_hour, tzinfo=UTC) \
        if end_hour else None
    return TimeEvent(kind="schedule", start=start, end=end,
                     intent_text=text, status=status)


class TestIngestion:
    def test_behavior_accepted(self, agenda):
        assert agenda.ingest_time_event(behavior(0, 9)) == "accepted"
        assert len(agenda.events) == 1

    def test_duplicate_same_tool_intent_and_overlap(self, agenda):
        agenda.ingest_time_event(behavior(0, 9))
        assert agenda.ingest_time_event(behavior(0, 9, minute=3)) == "duplicate"

    def test_not_duplicate_when_apart_in_time(self, agenda):
        agenda.ingest_time_event(behavior(0, 9))
        assert agenda.ingest_time_event(behavior(0, 15)) == "accepted"

    def test_schedule_enters_draft(self, agenda):
        event = schedule(1, 10, "dentist appointment", end_hour=11)
        assert agenda.ingest_time_event(event) == "accepted"
        assert agenda.drafts[event.start.date()].entries == [event.event_id]

    def test_ambiguous_schedule_queued(self, agenda):
        event = schedule(1, 10, "sometime tomorrow", status="conflicted")
        assert agenda.ingest_time_event(event) == "queued"
        draft = agenda.drafts[event.start.date()]
        assert draft.alignment_queue == [(event.event_id, "ambiguous")]
        assert draft.entries == []

    def test_overlap_with_accepted_entry_queued(self, agenda):
        first = schedule(1, 10, "dentist appointment", end_hour=12)
        clash = schedule(1, 11, "team standup call", end_hour=13)
        agenda.ingest_time_event(first)
        assert agenda.ingest_time_event(clash) == "queued"
        draft = agenda.drafts[first.start.date()]
        assert (clash.event_id, "overlap") in draft.alignment_queue


class TestExtraction:
    def test_extracts_drafted_events(self, agenda):
        agenda.inference.scripted.register(
            "intent_extraction", ("dentist",),
            [{"intent": "dentist appointment",
              "start": "2026-08-04T10:00:00+00:00",
              "end": "2026-08-04T11:00:00+00:00"}])
        events = agenda.extract_events_from_text(
            "I have a dentist appointment tomorrow at ten",
            datetime(2026, 8, 3, 9, tzinfo=UTC))
        assert len(events) == 1
        assert events[0].status == "drafted"
        assert events[0].start.hour == 10

    def test_missing_start_becomes_conflicted(self, agenda):
        agenda.inference.scripted.register(
            "intent_extraction", ("sometime",),
            [{"intent": "call the bank", "ambiguous": True}])
        events = agenda.extract_events_from_text(
            "call the bank sometime", datetime(2026, 8, 3, 9, tzinfo=UTC))
        assert events[0].status == "conflicted"

    def test_unparseable_output_raises(self, agenda):
        agenda.inference.scripted.register("intent_extraction", (), "not json")
        with pytest.raises(ExtractionParseError):
            agenda.extract_events_from_text("anything",
                                            datetime(2026, 8, 3, tzinfo=UTC))

    def test_strict_mode_tolerates_surrounding_prose(self, agenda):
        agenda.inference.scripted.register(
            "intent_extraction", (),
            'Sure! Here you go: [] hope that helps')
        with pytest.raises(ExtractionParseError):
            agenda.extract_events_from_text("x", datetime(2026, 8, 3, tzinfo=UTC))
        agenda.strict_extraction = True
        assert agenda.extract_events_from_text(
            "x", datetime(2026, 8, 3, tzinfo=UTC)) == []


def mining_oracle(agenda, window_end):
    """Brute-force mining reference over the retained event log."""
    start = window_end - timedelta(days=agenda.window_days)
    behaviors = sorted(
        [e for e in agenda.events
         if e.kind == "behavior" and start <= e.start < window_end],
        key=lambda e: (e.start, e.event_id))
    expected = []
    for tool in sorted({e.tool for e in behaviors}):
        group = [e for e in behaviors if e.tool == tool]
        for members in greedy_cluster([e.intent_embedding for e in group],
                                      agenda.cluster_threshold):
            if len(members) < agenda.min_support:
                continue
            events = [group[i] for i in members]
            histogram = [0] * 24
            for e in events:
                histogram[e.start.hour] += 1
            expected.append({
                "tool": tool,
                "support": len(events),
                "exemplars": [e.event_id for e in events],
                "histogram": histogram,
            })
    return expected


class TestMining:
    def fill(self, agenda):
        for d in range(9):
            agenda.ingest_time_event(behavior(d, 9))
        for d in range(3):
            agenda.ingest_time_event(
                behavior(d, 14, tool="memo", text=f"odd note {d}"))

    def test_patterns_match_oracle(self, agenda, id_scope):
        self.fill(agenda)
        window_end = datetime(2026, 8, 17, tzinfo=UTC)
        mined = agenda.mine_behavior_patterns(window_end)
        expected = mining_oracle(agenda, window_end)
        assert len(mined) == len(expected) == 1
        got, want = mined[0], expected[0]
        assert got.tool == want["tool"]
        assert got.support == want["support"]
        assert got.exemplar_ids == want["exemplars"]
        assert got.hour_histogram == want["histogram"]

    def test_support_threshold_excludes_sparse_clusters(self, agenda):
        for d in range(4):
            agenda.ingest_time_event(behavior(d, 9))
        assert agenda.mine_behavior_patterns(
            datetime(2026, 8, 17, tzinfo=UTC)) == []

    def test_window_excludes_old_events(self, agenda):
        for d in range(9):
            agenda.ingest_time_event(behavior(d, 9))
        late_end = datetime(2026, 9, 20, tzinfo=UTC)
        assert agenda.mine_behavior_patterns(late_end) == []

    def test_peak_hours(self, agenda, id_scope):
        self.fill(agenda)
        pattern = agenda.mine_behavior_patterns(
            datetime(2026, 8, 17, tzinfo=UTC))[0]
        assert pattern.peak_hours(0.5) == [9]


class TestPlanning:
    def test_schedule_entries_come_first(self, agenda, id_scope):
        event = schedule(14, 9, "quarterly review", end_hour=10)  # Monday
        agenda.ingest_time_event(event)
        for d in range(9):
            agenda.ingest_time_event(behavior(d, 11))
        patterns = agenda.mine_behavior_patterns(datetime(2026, 8, 17, tzinfo=UTC))
        plan = agenda.draft_daily_plan(date(2026, 8, 17), patterns)
        kinds = [s.action["type"] for s in plan.slots]
        assert kinds == ["schedule", "pattern"]
        assert plan.slots[1].start.hour == 11

    def test_pattern_suggestion_avoids_busy_slot(self, agenda, id_scope):
        agenda.ingest_time_event(schedule(14, 9, "all morning workshop",
                                          end_hour=12))
        for d in range(9):
            agenda.ingest_time_event(behavior(d, 9))
        patterns = agenda.mine_behavior_patterns(datetime(2026, 8, 17, tzinfo=UTC))
        plan = agenda.draft_daily_plan(date(2026, 8, 17), patterns)
        assert [s.action["type"] for s in plan.slots] == ["schedule"]

    def test_pattern_skipped_on_non_matching_weekday(self, agenda, id_scope):
        for d in (0, 1, 2, 3, 4, 7, 8, 9, 10):
            agenda.ingest_time_event(behavior(d, 9))   # weekday-only routine
        patterns = agenda.mine_behavior_patterns(datetime(2026, 8, 17, tzinfo=UTC))
        sunday = date(2026, 8, 16)
        plan = agenda.draft_daily_plan(sunday, patterns)
        assert plan.slots == []

    def test_confirm_dispatches_summary_once(self, agenda, id_scope):
        for d in range(9):
            agenda.ingest_time_event(behavior(d, 9))
        patterns = agenda.mine_behavior_patterns(datetime(2026, 8, 17, tzinfo=UTC))
        agenda.draft_daily_plan(date(2026, 8, 17), patterns)
        summaries = []
        agenda.plan_listeners.append(summaries.append)
        first = agenda.confirm_plan(date(2026, 8, 17), {"action": "confirm"},
                                    now=datetime(2026, 8, 16, 20, tzinfo=UTC))
        again = agenda.confirm_plan(date(2026, 8, 17), {"action": "confirm"})
        assert first["result"] == "confirmed"
        assert again["result"] == "noop"
        assert len(summaries) == 1
        assert summaries[0]["actions"][0]["tool"] == "email"

    def test_amend_removes_slots(self, agenda, id_scope):
        for d in range(9):
            agenda.ingest_time_event(behavior(d, 9))
        patterns = agenda.mine_behavior_patterns(datetime(2026, 8, 17, tzinfo=UTC))
        plan = agenda.draft_daily_plan(date(2026, 8, 17), patterns)
        from galaxy.agenda import _slot_key
        out = agenda.confirm_plan(date(2026, 8, 17),
                                  {"action": "amend",
                                   "remove": [_slot_key(plan.slots[0])]})
        assert out["result"] == "amended"
        assert plan.slots == []

    def test_confirm_unknown_day_raises(self, agenda):
        with pytest.raises(KeyError):
            agenda.confirm_plan(date(2030, 1, 1), {"action": "confirm"})

from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from galaxy.events import TimeEvent, ensure_aware, overlaps
from galaxy.records import ROUTE_LABELS, ExecutionRecord, payload_digest

UTC = timezone.utc
T0 = datetime(2026, 8, 20, 9, 0, tzinfo=UTC)


def test_behavior_requires_tool():
    with pytest.raises(ValueError):
        TimeEvent(kind="behavior", start=T0, intent_text="x")


def test_end_before_start_rejected():
    with pytest.raises(ValueError):
        TimeEvent(kind="schedule", start=T0, end=T0 - timedelta(hours=1),
                  intent_text="x")


def test_naive_datetimes_coerced_to_utc():
    event = TimeEvent(kind="schedule", start=datetime(2026, 8, 20, 9),
                      intent_text="x")
    assert event.start.tzinfo is not None


def test_doc_round_trip(id_scope):
    event = TimeEvent(kind="behavior", start=T0, end=T0 + timedelta(hours=1),
                      tool="memo", intent_text="jot a note",
                      provenance="space:memo.write_text")
    clone = TimeEvent.from_doc(event.to_doc())
    assert clone.to_doc() == event.to_doc()
    assert clone.event_id == event.event_id


def test_interval_overlap_cases():
    one = timedelta(hours=1)
    assert overlaps(T0, T0 + one, T0 + one / 2, T0 + one)          # partial
    assert not overlaps(T0, T0 + one, T0 + one, T0 + 2 * one)      # touching
    assert overlaps(T0, None, T0 - one, T0 + one)                  # point in interval
    assert overlaps(T0, None, T0, None)                            # same point
    assert not overlaps(T0, None, T0 + one, None)                  # distinct points


@given(st.integers(0, 48), st.integers(0, 4), st.integers(0, 48), st.integers(0, 4))
def test_overlap_symmetric(a0, da, b0, db):
    a_start = T0 + timedelta(hours=a0)
    b_start = T0 + timedelta(hours=b0)
    a_end = a_start + timedelta(hours=da) if da else None
    b_end = b_start + timedelta(hours=db) if db else None
    assert overlaps(a_start, a_end, b_start, b_end) \
        == overlaps(b_start, b_end, a_start, a_end)


def test_record_requires_known_route():
    with pytest.raises(ValueError):
        ExecutionRecord(route="mystery", caller="kora", outcome="ok")
    for route in ROUTE_LABELS:
        ExecutionRecord(route=route, caller="kora", outcome="ok")


def test_record_doc_round_trip(id_scope):
    record = ExecutionRecord(route="kernel_space_call", caller="kora",
                             outcome="ok", elapsed_s=0.25,
                             digest=payload_digest("memo.write_text"),
                             task_id="task-9", timestamp=T0)
    clone = ExecutionRecord.from_doc(record.to_doc())
    assert clone.to_doc() == record.to_doc()


def test_payload_digest_stable():
    assert payload_digest("abc") == payload_digest("abc")
    assert payload_digest("abc") != payload_digest("abd")
    assert len(payload_digest("abc")) == 16

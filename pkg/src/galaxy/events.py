"""TimeEvent: the unified record for explicit schedules and observed behaviors."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import ids
from .embedding import embed_text

KINDS = ("schedule", "behavior")
STATUSES = ("observed", "drafted", "aligned", "conflicted")


def ensure_aware(dt: datetime) -> datetime:
    return dt.replace(tzinfo=timezone.utc) if dt.tzinfo is None else dt


@dataclass
class TimeEvent:
    kind: str
    start: datetime
    intent_text: str
    end: datetime | None = None
    tool: str | None = None
    status: str = "observed"
    provenance: str = ""
    event_id: str = ""
    intent_embedding: np.ndarray = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown TimeEvent kind {self.kind!r}")
        if self.status not in STATUSES:
            raise ValueError(f"unknown TimeEvent status {self.status!r}")
        self.start = ensure_aware(self.start)
        if self.end is not None:
            self.end = ensure_aware(self.end)
            if self.end < self.start:
                raise ValueError("TimeEvent end precedes start")
        if self.kind == "behavior" and not self.tool:
            raise ValueError("behavior events must carry a tool")
        if not self.event_id:
            self.event_id = ids.fresh("ev")
        if self.intent_embedding is None:
            self.intent_embedding = embed_text(self.intent_text)

    def to_doc(self) -> dict:
        return {
            "event_id": self.event_id,
            "kind": self.kind,
            "start": self.start.isoformat(),
            "end": self.end.isoformat() if self.end else None,
            "tool": self.tool,
            "intent_text": self.intent_text,
            "status": self.status,
            "provenance": self.provenance,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "TimeEvent":
        return cls(
            kind=doc["kind"],
            start=datetime.fromisoformat(doc["start"]),
            end=datetime.fromisoformat(doc["end"]) if doc.get("end") else None,
            tool=doc.get("tool"),
            intent_text=doc["intent_text"],
            status=doc.get("status", "observed"),
            provenance=doc.get("provenance", ""),
            event_id=doc["event_id"],
        )

    def dumps(self) -> str:
        return json.dumps(self.to_doc(), sort_keys=True)


def overlaps(a_start: datetime, a_end: datetime | None,
             b_start: datetime, b_end: datetime | None) -> bool:
    """Half-open interval intersection; a missing end means a point event."""
    a_end = a_end or a_start
    b_end = b_end or b_start
    if a_start == a_end and b_start == b_end:
        return a_start == b_start
    if a_start == a_end:
        return b_start <= a_start < b_end
    if b_start == b_end:
        return a_start <= b_start < a_end
    return a_start < b_end and b_start < a_end

"""Execution records: the audit stream Kernel supervises.

Every inference call, space invocation, retrieval, and feedback delivery is
bucketed into one of four execution routes (plus ``other``) so the gateway can
emit a per-task latency breakdown.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from datetime import datetime, timezone

from . import ids

ROUTE_LABELS = (
    "kora_cloud_call",
    "kernel_cognition_retrieval",
    "kernel_space_call",
    "kora_feedback",
    "other",
)


def payload_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass
class ExecutionRecord:
    route: str
    caller: str
    outcome: str                       # "ok" or an error kind
    elapsed_s: float = 0.0
    digest: str = ""
    task_id: str | None = None
    detail: str = ""
    timestamp: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    record_id: str = ""

    def __post_init__(self) -> None:
        if self.route not in ROUTE_LABELS:
            raise ValueError(f"unknown route label {self.route!r}")
        if not self.record_id:
            self.record_id = ids.fresh("xr")

    @property
    def ok(self) -> bool:
        return self.outcome == "ok"

    def to_doc(self) -> dict:
        return {
            "record_id": self.record_id,
            "route": self.route,
            "caller": self.caller,
            "outcome": self.outcome,
            "elapsed_s": self.elapsed_s,
            "digest": self.digest,
            "task_id": self.task_id,
            "detail": self.detail,
            "timestamp": self.timestamp.isoformat(),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ExecutionRecord":
        doc = dict(doc)
        doc["timestamp"] = datetime.fromisoformat(doc["timestamp"])
        return cls(**doc)

"""Append-only command log with prefix snapshots.

One JSON document per line; append is atomic per line.  Replay applies the
documents in order to an empty runtime and must reproduce the live state
exactly (the runtime's command dispatch is deterministic).  A snapshot is a
compacted prefix of the log: replaying snapshot-then-tail equals replaying
the full log.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


@dataclass
class ReplayHalt:
    offset: int                 # first offset that could not be applied
    reason: str


class CommandLog:
    def __init__(self, path: Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.touch(exist_ok=True)
        self._count = sum(1 for line in self.path.open() if line.strip())

    def append(self, doc: dict) -> int:
        line = json.dumps(doc, sort_keys=True)
        with self.path.open("a") as fh:
            fh.write(line + "\n")
        offset = self._count
        self._count += 1
        return offset

    def read(self, start: int = 0) -> tuple[list[dict], ReplayHalt | None]:
        """Read documents from ``start``; a corrupt line halts the read there."""
        docs: list[dict] = []
        halt: ReplayHalt | None = None
        with self.path.open() as fh:
            for offset, line in enumerate(fh):
                if offset < start:
                    continue
                stripped = line.rstrip("\n")
                if not stripped:
                    continue
                try:
                    docs.append(json.loads(stripped))
                except json.JSONDecodeError as exc:
                    halt = ReplayHalt(offset, f"corrupt record: {exc}")
                    break
        return docs, halt

    def __len__(self) -> int:
        return self._count


def write_snapshot(snapshot_path: Path, log: CommandLog, offset: int) -> dict:
    """Compact the first ``offset`` commands into a snapshot file."""
    docs, halt = log.read()
    if halt is not None and halt.offset < offset:
        raise ValueError(f"cannot snapshot past corrupt record at {halt.offset}")
    snapshot = {"format": "galaxy-snapshot/1", "offset": offset,
                "commands": docs[:offset]}
    snapshot_path = Path(snapshot_path)
    snapshot_path.parent.mkdir(parents=True, exist_ok=True)
    snapshot_path.write_text(json.dumps(snapshot, sort_keys=True))
    return snapshot


def read_snapshot(snapshot_path: Path) -> dict:
    return json.loads(Path(snapshot_path).read_text())

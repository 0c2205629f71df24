"""Scoped id allocation.

Ids for events, insights, tasks, patterns, and proposals come from the
allocator installed on the current context.  A runtime installs its own
allocator around every command it applies, so replaying a log into a fresh
runtime reproduces identical ids regardless of what else ran in the process.
"""

from __future__ import annotations

import contextvars
import itertools
from contextlib import contextmanager


class IdAllocator:
    def __init__(self) -> None:
        self._counters: dict[str, itertools.count] = {}

    def fresh(self, prefix: str) -> str:
        counter = self._counters.setdefault(prefix, itertools.count(1))
        return f"{prefix}-{next(counter)}"


_default = IdAllocator()
_current: contextvars.ContextVar[IdAllocator] = contextvars.ContextVar(
    "galaxy_ids", default=_default)


def fresh(prefix: str) -> str:
    return _current.get().fresh(prefix)


@contextmanager
def scope(allocator: IdAllocator):
    token = _current.set(allocator)
    try:
        yield allocator
    finally:
        _current.reset(token)

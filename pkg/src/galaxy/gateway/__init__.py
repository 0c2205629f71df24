from .runtime import EventBus, GalaxySystem, rebuild_from_log
from .store import CommandLog, ReplayHalt, read_snapshot, write_snapshot

__all__ = ["EventBus", "GalaxySystem", "rebuild_from_log", "CommandLog",
           "ReplayHalt", "read_snapshot", "write_snapshot"]

"""Runtime configuration for the Galaxy assistant.

All tunable thresholds live here as dataclass fields so tests and the CLI can
override them without touching module code.  Values can also be loaded from a
key=value config file and from environment variables (GALAXY_CLOUD_URL,
GALAXY_CLOUD_KEY, GALAXY_LOCAL_URL).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path


@dataclass
class GalaxyConfig:
    # Embedding / routing
    embedding_dim: int = 256
    route_threshold: float = 0.35     # minimum cosine score before Dialogue fallback
    route_fanout: int = 3             # max candidate paths returned by routing

    # Behavior pattern mining
    cluster_threshold: float = 0.6    # average-linkage join threshold
    min_support: int = 5
    mining_window_days: int = 14
    peak_fraction: float = 0.5        # histogram bin >= fraction * max counts as a peak

    # Persona lifecycle
    merge_threshold: float = 0.7      # insight-to-node cosine merge (inclusive)
    promote_support: int = 3
    decay_days: int = 45
    buffer_days: int = 14

    # KoRa dedup
    dedup_threshold: float = 0.8
    dedup_window_hours: float = 24.0

    # Kernel / scaffolding
    proposal_support: int = 8
    coverage_threshold: float = 0.75  # existing-space similarity that suppresses proposals
    rejection_cooldown_days: int = 14

    # Hosted inference
    llm_timeout_s: float = 30.0
    llm_retries: int = 2
    cloud_url: str = ""
    cloud_key: str = ""
    local_url: str = ""
    cloud_model: str = "gpt-4o-mini"
    local_model: str = "qwen2.5-14b"

    # Storage
    data_dir: Path = field(default_factory=lambda: Path("galaxy-data"))

    # Module search paths used to resolve space function modules; the boot
    # self-check can repair a wrong entry by consulting design descriptors.
    module_search_paths: list[str] = field(default_factory=list)

    # Feature switches (eval harness flips these)
    privacy_gate_enabled: bool = True
    persona_enabled: bool = True
    self_repair_enabled: bool = True

    def __post_init__(self) -> None:
        self.data_dir = Path(self.data_dir)

    @classmethod
    def load(cls, path: str | Path | None = None, **overrides) -> "GalaxyConfig":
        """Build a config from an optional key=value file, env vars, then overrides."""
        values: dict = {}
        if path is not None:
            values.update(_parse_kv_file(Path(path)))
        env_map = {
            "GALAXY_CLOUD_URL": "cloud_url",
            "GALAXY_CLOUD_KEY": "cloud_key",
            "GALAXY_LOCAL_URL": "local_url",
        }
        for env, key in env_map.items():
            if os.environ.get(env):
                values[key] = os.environ[env]
        values.update(overrides)
        return cls(**values)


def _parse_kv_file(path: Path) -> dict:
    known = {f.name: f.type for f in fields(GalaxyConfig)}
    out: dict = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in known:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        out[key] = _coerce(key, value)
    return out


def _coerce(key: str, value: str):
    current = getattr(GalaxyConfig(), key)
    if isinstance(current, bool):
        return value.lower() in ("1", "true", "yes", "on")
    if isinstance(current, int):
        return int(value)
    if isinstance(current, float):
        return float(value)
    if isinstance(current, Path):
        return Path(value)
    if isinstance(current, list):
        return [p for p in value.split(":") if p]
    return value

"""The Cognition Forest.

Four stored subtrees (user, self, env, meta) of semantic nodes, each node
carrying up to three dimensions: semantic text, an optional function binding,
and an optional design descriptor pointing at the implementing source.  A
fifth routing-only target, dialogue, absorbs vague or fallback intents.

Reads operate on per-version snapshots; all mutations go through one lock so
the version counter totally orders writes.
"""

from __future__ import annotations

import base64
import json
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from typing import Callable, Iterable

import numpy as np

from .embedding import DIM, cosine, embed_text
from .registry import FunctionRegistry

Path_ = tuple[str, ...]

DIALOGUE_PATH: Path_ = ("dialogue",)


class SubtreeKind(Enum):
    USER = "user"
    SELF = "self"
    ENV = "env"
    META = "meta"
    DIALOGUE = "dialogue"   # routing target only, never stored


STORED_SUBTREES = (SubtreeKind.USER, SubtreeKind.SELF, SubtreeKind.ENV, SubtreeKind.META)


class ForestError(Exception):
    pass


class DuplicatePathError(ForestError):
    pass


class MissingParentError(ForestError):
    pass


class UnknownNodeError(ForestError):
    pass


class ValidationError(ForestError):
    def __init__(self, problems: list[str]) -> None:
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass(frozen=True)
class DesignDescriptor:
    source: str                 # path to the implementing file
    symbol: str = ""
    rationale: str = ""


@dataclass
class CognitionNode:
    path: Path_
    semantic: str
    function_ref: str | None = None
    design: DesignDescriptor | None = None
    embedding: np.ndarray = field(default_factory=lambda: np.zeros(DIM))
    created_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    last_used_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    usage_count: int = 0
    kernel_only: bool = False   # excluded from the KoRa view when set
    node_id: str = ""
    extra: dict = field(default_factory=dict)   # support counts etc. (persona)

    def __post_init__(self) -> None:
        if not self.node_id:
            self.node_id = "/".join(self.path)
        norm = float(np.linalg.norm(self.embedding))
        if self.semantic and norm == 0.0:
            self.embedding = embed_text(self.semantic)
        elif norm > 0.0 and abs(norm - 1.0) > 1e-6:
            raise ValueError(f"embedding of {self.node_id} is not unit norm")


@dataclass(frozen=True)
class ForestView:
    included: frozenset[SubtreeKind]
    exclude_kernel_only: bool = False
    quarantined: frozenset[str] = frozenset()   # node ids hidden from this view
    name: str = "full"

    def admits(self, node: CognitionNode) -> bool:
        kind = SubtreeKind(node.path[0])
        if kind not in self.included:
            return False
        if self.exclude_kernel_only and node.kernel_only:
            return False
        return node.node_id not in self.quarantined


@dataclass(frozen=True)
class RemovalSummary:
    root_path: Path_
    removed_count: int          # includes the root itself
    unregistered_bindings: tuple[str, ...]


class Forest:
    def __init__(self, registry: FunctionRegistry | None = None) -> None:
        self.registry = registry or FunctionRegistry()
        self._nodes: dict[Path_, CognitionNode] = {}
        self._lock = threading.RLock()
        self.version = 0
        self.quarantined: set[str] = set()
        for kind in STORED_SUBTREES:
            root = CognitionNode(path=(kind.value,), semantic=f"{kind.value} subtree root")
            self._nodes[root.path] = root

    # -- mutation ----------------------------------------------------------

    def insert(self, node: CognitionNode) -> str:
        with self._lock:
            if node.path in self._nodes:
                raise DuplicatePathError("/".join(node.path))
            if node.path[0] not in [k.value for k in STORED_SUBTREES]:
                raise ForestError(f"unknown subtree {node.path[0]!r}")
            parent = node.path[:-1]
            if len(node.path) > 1 and parent not in self._nodes:
                raise MissingParentError("/".join(parent))
            self._nodes[node.path] = node
            self.version += 1
            return node.node_id

    def remove(self, node_id: str) -> RemovalSummary:
        with self._lock:
            target = self._by_id(node_id)
            if target is None:
                raise UnknownNodeError(node_id)
            doomed = [p for p in self._nodes
                      if p[:len(target.path)] == target.path]
            bindings = []
            for p in doomed:
                ref = self._nodes[p].function_ref
                if ref is not None:
                    bindings.append(ref)
                    self.registry.unregister(ref)
                del self._nodes[p]
            self.version += 1
            return RemovalSummary(target.path, len(doomed), tuple(sorted(bindings)))

    def touch(self, node_id: str, now: datetime) -> None:
        with self._lock:
            node = self._by_id(node_id)
            if node is None:
                raise UnknownNodeError(node_id)
            node.last_used_at = now
            node.usage_count += 1

    def update_node(self, node_id: str, **changes) -> None:
        with self._lock:
            node = self._by_id(node_id)
            if node is None:
                raise UnknownNodeError(node_id)
            for key, value in changes.items():
                setattr(node, key, value)
            self.version += 1

    def quarantine(self, node_id: str) -> None:
        with self._lock:
            self.quarantined.add(node_id)
            self.version += 1

    # -- queries -----------------------------------------------------------

    def _by_id(self, node_id: str) -> CognitionNode | None:
        return self._nodes.get(tuple(node_id.split("/")))

    def get(self, path: Path_ | str) -> CognitionNode | None:
        if isinstance(path, str):
            path = tuple(path.split("/"))
        with self._lock:
            return self._nodes.get(tuple(path))

    def nodes(self, view: ForestView | None = None) -> list[CognitionNode]:
        with self._lock:
            out = list(self._nodes.values())
        if view is not None:
            out = [n for n in out if view.admits(n)]
        return sorted(out, key=lambda n: n.path)

    def nodes_under(self, path: Path_ | str, view: ForestView | None = None
                    ) -> list[CognitionNode]:
        if isinstance(path, str):
            path = tuple(p for p in path.split("/") if p)
        path = tuple(path)
        return [n for n in self.nodes(view) if n.path[:len(path)] == path]

    def subset_view(self, agent: str) -> ForestView:
        """``kernel`` sees everything; ``kora`` never sees Meta or kernel-only nodes."""
        with self._lock:
            quarantined = frozenset(self.quarantined)
        if agent == "kernel":
            return ForestView(frozenset(STORED_SUBTREES), name="kernel")
        if agent == "kora":
            return ForestView(
                frozenset((SubtreeKind.USER, SubtreeKind.SELF, SubtreeKind.ENV)),
                exclude_kernel_only=True, quarantined=quarantined, name="kora")
        raise ValueError(f"unknown agent {agent!r}")

    # -- routing and retrieval --------------------------------------------

    def route_intent(self, view: ForestView, intent_embedding: np.ndarray,
                     intent_text: str = "", threshold: float = 0.35,
                     fanout: int = 3) -> list[Path_]:
        """Rank candidate paths by best cosine under each; Dialogue on a miss.

        Candidate paths are the parents of embedded leaf nodes (a space such
        as env/spaces/memo routes as one unit).  Ties break lexicographically.
        """
        scores: dict[Path_, float] = {}
        for node in self.nodes(view):
            if len(node.path) < 2 or float(np.linalg.norm(node.embedding)) == 0.0:
                continue
            candidate = node.path[:-1] if len(node.path) > 2 else node.path
            score = cosine(intent_embedding, node.embedding)
            if score > scores.get(candidate, -2.0):
                scores[candidate] = score
        ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
        ranked = [(p, s) for p, s in ranked if s >= threshold]
        if not ranked:
            return [DIALOGUE_PATH]
        return [p for p, _ in ranked[:fanout]]

    def retrieve(self, view: ForestView, path: Path_ | str,
                 query_embedding: np.ndarray, k: int,
                 now: datetime | None = None) -> list[CognitionNode]:
        if k < 1:
            raise ValueError("k must be >= 1")
        if isinstance(path, str):
            path = tuple(p for p in path.split("/") if p)
        if self.get(path) is None:
            raise UnknownNodeError("/".join(path))
        candidates = [n for n in self.nodes_under(path, view)
                      if float(np.linalg.norm(n.embedding)) > 0.0]
        ranked = sorted(candidates,
                        key=lambda n: (-cosine(query_embedding, n.embedding), n.path))
        hits = ranked[:k]
        stamp = now or datetime.now(timezone.utc)
        for node in hits:
            self.touch(node.node_id, stamp)
        return hits

    # -- serialization -----------------------------------------------------

    def export_snapshot(self) -> dict:
        with self._lock:
            nodes = [_node_to_doc(n) for n in sorted(self._nodes.values(),
                                                     key=lambda n: n.path)]
            return {"format": "galaxy-forest/1", "version": self.version,
                    "nodes": nodes}

    @classmethod
    def from_snapshot(cls, doc: dict, registry: FunctionRegistry | None = None
                      ) -> "Forest":
        forest = cls(registry)
        forest._nodes.clear()
        for node_doc in doc["nodes"]:
            node = _node_from_doc(node_doc)
            forest._nodes[node.path] = node
        forest.version = doc.get("version", 0)
        return forest

    def dumps(self) -> str:
        return json.dumps(self.export_snapshot(), indent=1, sort_keys=True)

    @classmethod
    def loads(cls, text: str, registry: FunctionRegistry | None = None) -> "Forest":
        return cls.from_snapshot(json.loads(text), registry)


def _node_to_doc(node: CognitionNode) -> dict:
    doc = {
        "path": "/".join(node.path),
        "semantic": node.semantic,
        "function_ref": node.function_ref,
        "design": None,
        "embedding": base64.b64encode(
            np.asarray(node.embedding, dtype=np.float64).tobytes()).decode("ascii"),
        "created_at": node.created_at.isoformat(),
        "last_used_at": node.last_used_at.isoformat(),
        "usage_count": node.usage_count,
        "kernel_only": node.kernel_only,
        "extra": node.extra,
    }
    if node.design is not None:
        doc["design"] = {"source": node.design.source, "symbol": node.design.symbol,
                         "rationale": node.design.rationale}
    return doc


def _node_from_doc(doc: dict) -> CognitionNode:
    design = None
    if doc.get("design"):
        design = DesignDescriptor(**doc["design"])
    embedding = np.frombuffer(
        base64.b64decode(doc["embedding"]), dtype=np.float64).copy()
    return CognitionNode(
        path=tuple(doc["path"].split("/")),
        semantic=doc["semantic"],
        function_ref=doc.get("function_ref"),
        design=design,
        embedding=embedding,
        created_at=datetime.fromisoformat(doc["created_at"]),
        last_used_at=datetime.fromisoformat(doc["last_used_at"]),
        usage_count=doc.get("usage_count", 0),
        kernel_only=doc.get("kernel_only", False),
        extra=doc.get("extra", {}),
    )


def create_forest(seed_manifest: dict, registry: FunctionRegistry | None = None,
                  validate_bindings: bool = True) -> Forest:
    """Build a forest from a seed document; validation failures are collected."""
    forest = Forest(registry)
    problems: list[str] = []
    seen: set[str] = set()
    entries = seed_manifest.get("nodes", [])
    for entry in entries:
        path_str = entry["path"]
        if path_str in seen:
            problems.append(f"duplicate path {path_str}")
        seen.add(path_str)
        ref = entry.get("function_ref")
        if validate_bindings and ref and not forest.registry.resolves(ref):
            problems.append(f"unresolvable function_ref {ref!r} at {path_str}")
    if problems:
        raise ValidationError(problems)
    for entry in sorted(entries, key=lambda e: e["path"].count("/")):
        design = None
        if entry.get("design"):
            design = DesignDescriptor(**entry["design"])
        path = tuple(entry["path"].split("/"))
        # Intermediate parents are created implicitly.
        for depth in range(2, len(path)):
            prefix = path[:depth]
            if forest.get(prefix) is None:
                forest.insert(CognitionNode(path=prefix, semantic=""))
        forest.insert(CognitionNode(
            path=path,
            semantic=entry.get("semantic", ""),
            function_ref=entry.get("function_ref"),
            design=design,
            kernel_only=entry.get("kernel_only", False),
        ))
    return forest


#: Pipeline-stage and failure-routine descriptions seeded into the meta subtree.
META_SEED_NODES = [
    {"path": "meta/pipeline/semantic_routing",
     "semantic": "locate relevant cognitive paths for an intent"},
    {"path": "meta/pipeline/forest_retrieval",
     "semantic": "retrieve supporting nodes from matched subtrees"},
    {"path": "meta/pipeline/action_chain_construction",
     "semantic": "assemble generate, align, invoke, and respond steps"},
    {"path": "meta/pipeline/execution",
     "semantic": "drive the state stack, suspending on missing information"},
    {"path": "meta/pipeline/reflection",
     "semantic": "summarize completed tasks into user insights and capability gaps"},
    {"path": "meta/routines/reset-space",
     "semantic": "recreate a space sandbox and re-register its bindings"},
    {"path": "meta/routines/tighten-extraction",
     "semantic": "switch event extraction to strict template mode"},
    {"path": "meta/routines/reroute-backend",
     "semantic": "fail inference over to the alternate backend"},
    {"path": "meta/routines/escalate-to-user",
     "semantic": "raise an alignment item when automated repair fails"},
]

SELF_SEED_NODES = [
    {"path": "self/kora",
     "semantic": "KoRa, the generative assistant handling responsive and proactive tasks"},
    {"path": "self/kernel",
     "semantic": "Kernel, the supervising meta agent for stability, privacy, and evolution",
     "kernel_only": True},
]


def default_seed_manifest(include_builtin_spaces: bool = True) -> dict:
    """Seed covering self and meta plus, optionally, the built-in space nodes."""
    nodes = [
        {"path": "env/spaces", "semantic": "registered capability spaces"},
        {"path": "user/identity", "semantic": "stable identity facts about the user"},
    ]
    nodes.extend(SELF_SEED_NODES)
    nodes.extend(META_SEED_NODES)
    if include_builtin_spaces:
        from .spaces import builtin_manifests
        for manifest in builtin_manifests():
            base = f"env/spaces/{manifest.name}"
            nodes.append({"path": base, "semantic": manifest.description})
            for snode in manifest.nodes:
                nodes.append({
                    "path": f"{base}/{snode.name}",
                    "semantic": snode.semantic,
                    "function_ref": snode.function_binding,
                })
    return {"format": "galaxy-forest-seed/1", "nodes": nodes}

"""The Space protocol.

A Space is a capability module described by a manifest (name, description,
invokable nodes with scalar parameter schemas, perception flags).  Registering
a space mounts it as an env/spaces/<name> subtree in the forest and adds it to
the catalog; invoking a node runs the bound function inside a per-space
sandbox directory and, for perception-flagged nodes, emits a Behavior
TimeEvent.

Built-ins: memo, chat_window (perception-only), email (sandbox outbox), and a
translator template used as the scaffolding target.
"""

from __future__ import annotations

import json
import shutil
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from .events import TimeEvent, ensure_aware
from .forest import CognitionNode, DesignDescriptor, Forest
from .records import ExecutionRecord, payload_digest
from .registry import FunctionRegistry

SCALAR_TYPES = ("text", "number", "boolean", "timestamp")


class SpaceError(Exception):
    pass


class UnknownSpaceError(SpaceError):
    pass


class UnknownSpaceNodeError(SpaceError):
    pass


class MissingArgumentError(SpaceError):
    """Drives KoRa's alignment suspension; carries the missing field names."""

    def __init__(self, space: str, node: str, missing: list[str]) -> None:
        super().__init__(f"{space}.{node} missing required arguments: {missing}")
        self.missing = list(missing)


class SchemaViolationError(SpaceError):
    pass


class RegistrationError(SpaceError):
    pass


@dataclass(frozen=True)
class ParamSpec:
    name: str
    type: str = "text"
    required: bool = True

    def __post_init__(self) -> None:
        if self.type not in SCALAR_TYPES:
            raise ValueError(f"unsupported parameter type {self.type!r}")


@dataclass
class SpaceNode:
    name: str
    semantic: str
    params: list[ParamSpec] = field(default_factory=list)
    function_binding: str = ""
    perception: bool = False


@dataclass
class SpaceManifest:
    name: str
    description: str
    nodes: list[SpaceNode] = field(default_factory=list)
    perception_note: str = ""

    def to_doc(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "perception_note": self.perception_note,
            "nodes": [
                {
                    "name": n.name,
                    "semantic": n.semantic,
                    "function_binding": n.function_binding,
                    "perception": n.perception,
                    "params": [{"name": p.name, "type": p.type, "required": p.required}
                               for p in n.params],
                }
                for n in self.nodes
            ],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "SpaceManifest":
        return cls(
            name=doc["name"],
            description=doc.get("description", ""),
            perception_note=doc.get("perception_note", ""),
            nodes=[
                SpaceNode(
                    name=nd["name"],
                    semantic=nd.get("semantic", ""),
                    function_binding=nd.get("function_binding", ""),
                    perception=nd.get("perception", False),
                    params=[ParamSpec(**p) for p in nd.get("params", [])],
                )
                for nd in doc.get("nodes", [])
            ],
        )


def validate_manifest(manifest: SpaceManifest, registry: FunctionRegistry,
                      registered_names: set[str] | None = None) -> list[str]:
    """Return every violation; an empty report means the manifest is registrable."""
    problems: list[str] = []
    if not manifest.name or "/" in manifest.name:
        problems.append(f"invalid space name {manifest.name!r}")
    if registered_names and manifest.name in registered_names:
        problems.append(f"duplicate space name {manifest.name!r}")
    seen: set[str] = set()
    for node in manifest.nodes:
        if node.name in seen:
            problems.append(f"duplicate node name {node.name!r} in {manifest.name}")
        seen.add(node.name)
        param_names = set()
        for p in node.params:
            if p.name in param_names:
                problems.append(f"duplicate parameter {p.name!r} on {node.name}")
            param_names.add(p.name)
        if node.function_binding and not registry.resolves(node.function_binding):
            problems.append(
                f"unresolved binding {node.function_binding!r} on {manifest.name}.{node.name}")
    return problems


def _check_args(space: str, node: SpaceNode, args: dict) -> None:
    missing = [p.name for p in node.params if p.required and p.name not in args]
    if missing:
        raise MissingArgumentError(space, node.name, missing)
    for p in node.params:
        if p.name not in args:
            continue
        value = args[p.name]
        ok = {
            "text": lambda v: isinstance(v, str),
            "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
            "boolean": lambda v: isinstance(v, bool),
            "timestamp": lambda v: isinstance(v, (str, datetime)),
        }[p.type](value)
        if not ok:
            raise SchemaViolationError(
                f"{space}.{node.name}: argument {p.name!r} is not a {p.type}")
    unknown = set(args) - {p.name for p in node.params}
    if unknown:
        raise SchemaViolationError(
            f"{space}.{node.name}: unknown arguments {sorted(unknown)}")


class SpaceRegistry:
    """Catalog of registered spaces, kept bidirectionally consistent with the forest."""

    def __init__(self, forest: Forest, data_root: Path) -> None:
        self.forest = forest
        self.registry = forest.registry
        self.data_root = Path(data_root)
        self._spaces: dict[str, SpaceManifest] = {}
        self._space_locks: dict[str, threading.Lock] = {}
        self._lock = threading.RLock()
        self.record_listeners: list[Callable[[ExecutionRecord], None]] = []
        self.event_listeners: list[Callable[[TimeEvent], None]] = []
        self.registration_listeners: list[Callable[[str, str], None]] = []

    # -- catalog -----------------------------------------------------------

    def catalog(self) -> list[dict]:
        with self._lock:
            return [
                {"name": m.name, "description": m.description,
                 "nodes": [n.name for n in m.nodes]}
                for m in sorted(self._spaces.values(), key=lambda m: m.name)
            ]

    def get_manifest(self, name: str) -> SpaceManifest:
        with self._lock:
            if name not in self._spaces:
                raise UnknownSpaceError(name)
            return self._spaces[name]

    def space_dir(self, name: str) -> Path:
        return self.data_root / "spaces" / name

    # -- registration ------------------------------------------------------

    def register(self, manifest: SpaceManifest,
                 design_source: str | None = None) -> str:
        with self._lock:
            problems = validate_manifest(manifest, self.registry, set(self._spaces))
            if problems:
                raise RegistrationError("; ".join(problems))
            base = ("env", "spaces", manifest.name)
            if self.forest.get(base) is not None:
                raise RegistrationError(f"forest path {'/'.join(base)} already exists")
            inserted: list[str] = []
            try:
                self.forest.insert(CognitionNode(
                    path=base, semantic=manifest.description))
                inserted.append("/".join(base))
                for node in manifest.nodes:
                    source = design_source or str(self.space_dir(manifest.name) / "manifest.json")
                    self.forest.insert(CognitionNode(
                        path=base + (node.name,),
                        semantic=node.semantic,
                        function_ref=node.function_binding or None,
                        design=DesignDescriptor(source=source, symbol=node.name),
                    ))
                    inserted.append("/".join(base + (node.name,)))
            except Exception:
                for node_id in reversed(inserted):
                    try:
                        self.forest.remove(node_id)
                    except Exception:
                        pass
                raise
            sandbox = self.space_dir(manifest.name)
            (sandbox / "data").mkdir(parents=True, exist_ok=True)
            (sandbox / "manifest.json").write_text(
                json.dumps(manifest.to_doc(), indent=1, sort_keys=True))
            self._spaces[manifest.name] = manifest
            self._space_locks[manifest.name] = threading.Lock()
        for listener in self.registration_listeners:
            listener("registered", manifest.name)
        return "/".join(base)

    def unregister(self, name: str) -> None:
        with self._lock:
            if name not in self._spaces:
                raise UnknownSpaceError(name)
            self.forest.remove(f"env/spaces/{name}")
            del self._spaces[name]
            del self._space_locks[name]
        for listener in self.registration_listeners:
            listener("unregistered", name)

    # -- invocation --------------------------------------------------------

    def invoke(self, space: str, node_name: str, args: dict,
               task_id: str | None = None, now: datetime | None = None):
        now = ensure_aware(now) if now else datetime.now(timezone.utc)
        with self._lock:
            if space not in self._spaces:
                raise UnknownSpaceError(space)
            manifest = self._spaces[space]
            node = next((n for n in manifest.nodes if n.name == node_name), None)
            lock = self._space_locks[space]
        if node is None:
            raise UnknownSpaceNodeError(f"{space}.{node_name}")
        _check_args(space, node, args)
        func = self.registry.resolve(node.function_binding)
        started = time.monotonic()
        with lock:
            try:
                result = func(**args)
            except Exception as exc:
                self._emit_record(ExecutionRecord(
                    route="kernel_space_call", caller="kora",
                    outcome="space_function_error",
                    elapsed_s=time.monotonic() - started,
                    digest=payload_digest(f"{space}.{node_name}"),
                    task_id=task_id, detail=str(exc), timestamp=now))
                raise
        self._emit_record(ExecutionRecord(
            route="kernel_space_call", caller="kora", outcome="ok",
            elapsed_s=time.monotonic() - started,
            digest=payload_digest(f"{space}.{node_name}:{sorted(args.items())!r}"),
            task_id=task_id, timestamp=now))
        if node.perception:
            event = TimeEvent(
                kind="behavior", start=now, tool=space,
                intent_text=node.semantic,
                provenance=f"space:{space}.{node_name}")
            for listener in self.event_listeners:
                listener(event)
        return result

    def perceive(self, raw: dict) -> TimeEvent:
        """Normalize a raw interaction record into an observed TimeEvent."""
        try:
            start = datetime.fromisoformat(raw["timestamp"])
        except (KeyError, ValueError) as exc:
            raise SpaceError(f"unparseable interaction timestamp: {exc}") from exc
        end = None
        if raw.get("end"):
            end = datetime.fromisoformat(raw["end"])
        event = TimeEvent(
            kind=raw.get("kind", "behavior"),
            start=start, end=end,
            tool=raw.get("source", "chat_window"),
            intent_text=raw.get("intent", ""),
            provenance=f"perception:{raw.get('source', 'chat_window')}")
        for listener in self.event_listeners:
            listener(event)
        return event

    def reset_space(self, name: str) -> None:
        """Recreate a space sandbox; used by Kernel's reset-space routine."""
        manifest = self.get_manifest(name)
        sandbox = self.space_dir(name)
        if sandbox.exists():
            shutil.rmtree(sandbox)
        (sandbox / "data").mkdir(parents=True, exist_ok=True)
        (sandbox / "manifest.json").write_text(
            json.dumps(manifest.to_doc(), indent=1, sort_keys=True))

    def _emit_record(self, record: ExecutionRecord) -> None:
        for listener in self.record_listeners:
            listener(record)


# -- built-in spaces -------------------------------------------------------


def memo_manifest() -> SpaceManifest:
    return SpaceManifest(
        name="memo",
        description="personal memo pad for short notes",
        nodes=[
            SpaceNode("write_text", "write new content to memo",
                      [ParamSpec("text")], "memo:write_text", perception=True),
            SpaceNode("read_text", "read back the memo contents",
                      [], "memo:read_text"),
        ])


def chat_window_manifest() -> SpaceManifest:
    return SpaceManifest(
        name="chat_window",
        description="primary conversational window; every turn is perceived",
        nodes=[],
        perception_note="each chat turn emits a behavior event")


def email_manifest() -> SpaceManifest:
    return SpaceManifest(
        name="email",
        description="send email messages to contacts",
        nodes=[
            SpaceNode("send_email",
                      "send an email message to a contact saying the content",
                      [ParamSpec("address"), ParamSpec("content")],
                      "email:send_email", perception=True),
        ])


def translator_manifest() -> SpaceManifest:
    return SpaceManifest(
        name="translator",
        description="translate documents and abstracts between languages",
        nodes=[
            SpaceNode("translate", "translate text into a target language",
                      [ParamSpec("text"), ParamSpec("target_language")],
                      "translator:translate", perception=True),
            SpaceNode("open", "open the translator for a working session",
                      [], "translator:open", perception=True),
        ])


def builtin_manifests() -> list[SpaceManifest]:
    return [memo_manifest(), chat_window_manifest(), email_manifest()]


def register_builtin_functions(registry: FunctionRegistry, data_root: Path,
                               translate: Callable[[str, str], str] | None = None) -> None:
    """Bind the built-in space functions; side effects stay inside data_root."""
    data_root = Path(data_root)

    def memo_path() -> Path:
        d = data_root / "spaces" / "memo" / "data"
        d.mkdir(parents=True, exist_ok=True)
        return d / "memo.txt"

    def write_text(text: str) -> dict:
        path = memo_path()
        with path.open("a") as fh:
            fh.write(text + "\n")
        return {"written": text}

    def read_text() -> dict:
        path = memo_path()
        return {"content": path.read_text() if path.exists() else ""}

    def send_email(address: str, content: str) -> dict:
        outbox = data_root / "spaces" / "email" / "data" / "outbox.jsonl"
        outbox.parent.mkdir(parents=True, exist_ok=True)
        with outbox.open("a") as fh:
            fh.write(json.dumps({"address": address, "content": content}) + "\n")
        return {"sent_to": address}

    def do_translate(text: str, target_language: str) -> dict:
        if translate is None:
            return {"translation": f"[{target_language}] {text}"}
        return {"translation": translate(text, target_language)}

    def open_translator() -> dict:
        return {"opened": True}

    registry.register("memo:write_text", write_text)
    registry.register("memo:read_text", read_text)
    registry.register("email:send_email", send_email)
    registry.register("translator:translate", do_translate)
    registry.register("translator:open", open_translator)

"""Pluggable model-inference layer.

Three backends share one contract:

* scripted: fixture-matched canned responses, fully deterministic, used by
  every test and the eval harness;
* hosted cloud / hosted local: chat-completion wire clients with timeout and
  bounded retries.

Routing policy: Kernel-originated calls run locally; KoRa-originated calls go
to the cloud and must pass the Privacy Gate first (the cloud client refuses
payloads that were not cleared by the gate).
"""

from __future__ import annotations

import itertools
import json
import threading
import time
from dataclasses import dataclass, field
from enum import Enum

import httpx

PURPOSES = (
    "intent_extraction",
    "insight_aggregation",
    "content_generation",
    "space_proposal",
    "meta_reflection",
)


class Caller(Enum):
    KORA = "kora"
    KERNEL = "kernel"


class InferenceError(Exception):
    pass


class NoFixtureError(InferenceError):
    """Scripted backend had no fixture matching the request."""


class RetryableError(InferenceError):
    """Hosted backend failed after exhausting its retry budget."""


class UnmaskedPayloadError(InferenceError):
    """A must-mask request reached the cloud client without gate clearance."""


# Sentinel written by the Privacy Gate only; the cloud client compares by
# identity so a forged truthy flag does not pass.
GATE_CLEARED = object()


@dataclass
class ChatRequest:
    messages: list[dict]              # [{"role": ..., "content": ...}]
    purpose: str
    route_hint: str = "cloud"         # local | cloud
    max_tokens: int = 1024
    temperature: float = 0.0
    must_mask: bool = False
    gate_clearance: object = None     # set to GATE_CLEARED by the Privacy Gate

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("message list must be non-empty")
        if self.purpose not in PURPOSES:
            raise ValueError(f"unknown purpose {self.purpose!r}")

    @property
    def text(self) -> str:
        return "\n".join(m["content"] for m in self.messages)


@dataclass
class ChatResponse:
    text: str
    backend_id: str
    elapsed_s: float
    prompt_tokens: int = 0
    completion_tokens: int = 0


@dataclass
class RouteDecision:
    route: str                        # scripted | local | cloud
    must_mask: bool


@dataclass
class Fixture:
    fixture_id: int
    purpose: str
    substrings: tuple[str, ...]
    response_text: str

    def matches(self, request: ChatRequest) -> bool:
        if request.purpose != self.purpose:
            return False
        text = request.text
        return all(s in text for s in self.substrings)


class ScriptedBackend:
    """Fixture registry consulted in registration order; first match wins."""

    backend_id = "scripted"

    def __init__(self) -> None:
        self._fixtures: list[Fixture] = []
        self._ids = itertools.count(1)
        self._lock = threading.Lock()

    def register(self, purpose: str, substrings: tuple[str, ...] | list[str],
                 response_text) -> int:
        if purpose not in PURPOSES:
            raise ValueError(f"unknown purpose {purpose!r}")
        if not isinstance(response_text, str):
            response_text = json.dumps(response_text)
        fixture = Fixture(next(self._ids), purpose, tuple(substrings), response_text)
        with self._lock:
            self._fixtures.append(fixture)
        return fixture.fixture_id

    def remove(self, fixture_id: int) -> None:
        with self._lock:
            self._fixtures = [f for f in self._fixtures if f.fixture_id != fixture_id]

    def complete(self, request: ChatRequest) -> ChatResponse:
        with self._lock:
            fixtures = list(self._fixtures)
        for fixture in fixtures:
            if fixture.matches(request):
                return ChatResponse(fixture.response_text, self.backend_id, 0.0)
        raise NoFixtureError(
            f"no scripted fixture matched purpose={request.purpose!r}")


class HostedBackend:
    """Chat-completion wire client with timeout and exponential-backoff retries."""

    def __init__(self, base_url: str, model: str, backend_id: str,
                 api_key: str = "", timeout_s: float = 30.0, retries: int = 2,
                 backoff_s: float = 0.5, require_gate: bool = False) -> None:
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.backend_id = backend_id
        self.api_key = api_key
        self.timeout_s = timeout_s
        self.retries = retries
        self.backoff_s = backoff_s
        self.require_gate = require_gate

    def complete(self, request: ChatRequest) -> ChatResponse:
        if self.require_gate and request.must_mask and request.gate_clearance is not GATE_CLEARED:
            raise UnmaskedPayloadError(
                "cloud-bound payload was not cleared by the Privacy Gate")
        body = {
            "model": self.model,
            "messages": request.messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        attempts = self.retries + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            started = time.monotonic()
            try:
                resp = httpx.post(f"{self.base_url}/chat/completions",
                                  json=body, headers=headers, timeout=self.timeout_s)
                resp.raise_for_status()
                data = resp.json()
                usage = data.get("usage", {})
                return ChatResponse(
                    text=data["choices"][0]["message"]["content"],
                    backend_id=self.backend_id,
                    elapsed_s=time.monotonic() - started,
                    prompt_tokens=usage.get("prompt_tokens", 0),
                    completion_tokens=usage.get("completion_tokens", 0),
                )
            except (httpx.HTTPError, KeyError, ValueError) as exc:
                last_error = exc
                if attempt < attempts - 1:
                    time.sleep(self.backoff_s * (2 ** attempt))
        raise RetryableError(
            f"{self.backend_id} failed after {attempts} attempts: {last_error}")


class InferenceService:
    """Backend selection plus dispatch; records every call for Kernel oversight."""

    def __init__(self, scripted: bool = True, cloud: HostedBackend | None = None,
                 local: HostedBackend | None = None) -> None:
        self.scripted_mode = scripted
        self.scripted = ScriptedBackend()
        self.cloud = cloud
        self.local = local
        self._lock = threading.Lock()
        self.call_listeners: list = []   # callbacks (request, response|exception)

    def select_backend(self, purpose: str, caller: Caller) -> RouteDecision:
        if self.scripted_mode:
            return RouteDecision("scripted", must_mask=False)
        if caller is Caller.KERNEL:
            return RouteDecision("local", must_mask=False)
        return RouteDecision("cloud", must_mask=True)

    def complete_chat(self, request: ChatRequest, caller: Caller) -> ChatResponse:
        decision = self.select_backend(request.purpose, caller)
        request.route_hint = decision.route
        if decision.must_mask:
            request.must_mask = True
        try:
            if decision.route == "scripted":
                response = self.scripted.complete(request)
            elif decision.route == "local":
                if self.local is None:
                    raise InferenceError("no local backend configured")
                response = self.local.complete(request)
            else:
                if self.cloud is None:
                    raise InferenceError("no cloud backend configured")
                response = self.cloud.complete(request)
        except Exception as exc:
            for listener in self.call_listeners:
                listener(request, exc)
            raise
        for listener in self.call_listeners:
            listener(request, response)
        return response

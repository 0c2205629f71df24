"""Reversible privacy masking (the Privacy Gate).

Four nested masking levels:

* L1: person names, phone numbers, email addresses
* L2: L1 plus street addresses, organizations, calendar dates
* L3: L2 plus financial figures, card numbers, health terms, credentials
* L4: every detected category, including times and locations

Detection is a dictionary (identity facts plus built-in name/city/health
lists) and rule patterns, so the zero-leakage property is checkable against a
planter's ground truth.  Placeholders use the ⟪CAT_n⟫ grammar and are stable
per original value within an avatar profile; the map for each exchange stays
local and is never serialized into a cloud-bound payload.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone

CATEGORY_LEVEL = {
    "PER": 1, "PHONE": 1, "EMAIL": 1,
    "ADDR": 2, "ORG": 2, "DATE": 2,
    "CARD": 3, "MONEY": 3, "HEALTH": 3, "CRED": 3,
    "TIME": 4, "LOC": 4,
}

LEVELS = (1, 2, 3, 4)


def categories_at(level: int) -> set[str]:
    return {cat for cat, lvl in CATEGORY_LEVEL.items() if lvl <= level}


KNOWN_NAMES = {
    "Samuel", "Alice", "Bob", "Carol", "David", "Emma", "Frank", "Grace",
    "Henry", "Irene", "Jack", "Karen", "Liam", "Mia", "Noah", "Olivia",
    "Peter", "Quinn", "Rachel", "Steve", "Tina", "Victor", "Wendy", "Yusuf",
    "Zoe", "Miguel", "Chen", "Priya", "Omar", "Sofia", "Ethan", "Laura",
}

KNOWN_CITIES = {
    "Boston", "Shanghai", "London", "Paris", "Tokyo", "Berlin", "Madrid",
    "Seattle", "Chicago", "Toronto", "Sydney", "Mumbai", "Cairo", "Oslo",
}

HEALTH_TERMS = {
    "diabetes", "asthma", "insulin", "chemotherapy", "migraine", "allergy",
    "hypertension", "antidepressant", "therapy session", "blood pressure",
}

_MONTHS = ("January|February|March|April|May|June|July|August|September|"
           "October|November|December")

PATTERNS: dict[str, re.Pattern] = {
    "EMAIL": re.compile(r"\b[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}\b"),
    "PHONE": re.compile(r"(?<![\w+])(?:\+\d{1,2}[\s-]?)?(?:\(\d{3}\)|\d{3})[\s.-]\d{3}[\s.-]\d{4}\b"),
    "CARD": re.compile(r"\b\d{4}[-\s]\d{4}[-\s]\d{4}[-\s]\d{4}\b"),
    "MONEY": re.compile(r"\$\s?\d[\d,]*(?:\.\d+)?\b"),
    "DATE": re.compile(rf"\b(?:{_MONTHS})\s+\d{{1,2}}(?:,\s*\d{{4}})?\b|\b\d{{4}}-\d{{2}}-\d{{2}}\b"),
    "TIME": re.compile(r"\b\d{1,2}:\d{2}\b|\b\d{1,2}\s?(?:am|pm)\b", re.IGNORECASE),
    "ADDR": re.compile(r"\b\d+\s+[A-Z][a-z]+\s+(?:Street|St|Avenue|Ave|Road|Rd|Lane|Ln|Drive|Dr|Blvd)\b"),
    "ORG": re.compile(r"\b[A-Z][A-Za-z&]+(?:\s+[A-Z][A-Za-z&]+)?\s+(?:Inc|Corp|LLC|Ltd|University|Labs|Hospital|Bank)\b"),
    "CRED": re.compile(r"\b(?:password|passcode|api[ _-]?key|token)\s*(?:is\s+|[:=]\s*)\S+", re.IGNORECASE),
}


@dataclass(frozen=True)
class Span:
    start: int
    end: int
    category: str
    text: str


@dataclass
class MaskEntry:
    placeholder: str
    original: str
    category: str
    span: tuple[int, int]


@dataclass
class MaskingMap:
    entries: list[MaskEntry] = field(default_factory=list)
    level: int = 0
    created_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))

    def originals(self) -> dict[str, str]:
        return {e.placeholder: e.original for e in self.entries}


class AvatarProfile:
    """Stable pseudonym assignment: same original → same placeholder, per category."""

    def __init__(self) -> None:
        self._assignments: dict[tuple[str, str], str] = {}
        self._counters: dict[str, itertools.count] = {}

    def placeholder_for(self, category: str, original: str) -> str:
        key = (category, original)
        if key not in self._assignments:
            counter = self._counters.setdefault(category, itertools.count(1))
            self._assignments[key] = f"⟪{category}_{next(counter)}⟫"
        return self._assignments[key]


class Detector:
    """Dictionary + pattern detection over all categories."""

    def __init__(self, identity_terms: dict[str, list[str]] | None = None) -> None:
        # identity_terms: category -> extra dictionary entries (from identity facts)
        self.identity_terms = {cat: list(terms)
                               for cat, terms in (identity_terms or {}).items()}

    def add_identity_term(self, category: str, term: str) -> None:
        self.identity_terms.setdefault(category, []).append(term)

    def detect(self, text: str, categories: set[str]) -> list[Span]:
        spans: list[Span] = []
        for category in sorted(categories):
            pattern = PATTERNS.get(category)
            if pattern is not None:
                for m in pattern.finditer(text):
                    spans.append(Span(m.start(), m.end(), category, m.group()))
            for term in self._dictionary(category):
                for m in re.finditer(re.escape(term), text):
                    spans.append(Span(m.start(), m.end(), category, m.group()))
        return spans

    def _dictionary(self, category: str) -> list[str]:
        terms = list(self.identity_terms.get(category, []))
        if category == "PER":
            terms.extend(sorted(KNOWN_NAMES))
        elif category == "LOC":
            terms.extend(sorted(KNOWN_CITIES))
        elif category == "HEALTH":
            terms.extend(sorted(HEALTH_TERMS))
        return terms


def resolve_spans(spans: list[Span]) -> list[Span]:
    """Drop overlaps deterministically, lower-level categories first.

    Processing order (category level asc, start asc, longer span first) makes
    the accepted span set monotone across L1..L4: adding higher-level
    candidates can never displace a span accepted at a lower level.
    """
    ordered = sorted(spans, key=lambda s: (CATEGORY_LEVEL[s.category], s.start,
                                           -(s.end - s.start), s.category))
    accepted: list[Span] = []
    for span in ordered:
        if any(span.start < a.end and a.start < span.end for a in accepted):
            continue
        accepted.append(span)
    return sorted(accepted, key=lambda s: s.start)


PLACEHOLDER_RE = re.compile(r"⟪([A-Z]+)_(\d+)⟫")


def mask_payload(text: str, level: int, avatar: AvatarProfile,
                 detector: Detector) -> tuple[str, MaskingMap]:
    if level not in LEVELS:
        raise ValueError(f"invalid masking level {level}")
    spans = resolve_spans(detector.detect(text, categories_at(level)))
    entries: list[MaskEntry] = []
    out: list[str] = []
    cursor = 0
    for span in spans:
        placeholder = avatar.placeholder_for(span.category, span.text)
        out.append(text[cursor:span.start])
        out.append(placeholder)
        entries.append(MaskEntry(placeholder, span.text, span.category,
                                 (span.start, span.end)))
        cursor = span.end
    out.append(text[cursor:])
    return "".join(out), MaskingMap(entries=entries, level=level)


def demask_payload(response_text: str, mapping: MaskingMap
                   ) -> tuple[str, list[str]]:
    """Restore originals; unknown placeholders stay put and are reported."""
    originals = mapping.originals()
    unknown: list[str] = []

    def _sub(match: re.Match) -> str:
        token = match.group(0)
        if token in originals:
            return originals[token]
        unknown.append(token)
        return token

    return PLACEHOLDER_RE.sub(_sub, response_text), unknown


def choose_mask_level(destination: str, categories_present: set[str]) -> int:
    """Rule table mapping a call's destination and payload to a level (0 = none)."""
    if destination == "local":
        return 0
    if destination not in ("cloud", "local"):
        return 4            # unknown or untrusted destination
    if categories_present & {"MONEY", "HEALTH", "CRED", "CARD"}:
        return 3
    return 2                # cloud default


class PrivacyGate:
    """Masks cloud-bound chat requests and demasks their responses.

    The per-exchange masking map stays inside the gate; only the gate sets the
    tamper-evident clearance sentinel the cloud client checks for.
    """

    def __init__(self, detector: Detector | None = None,
                 avatar: AvatarProfile | None = None, enabled: bool = True,
                 forced_level: int | None = None) -> None:
        self.detector = detector or Detector()
        self.avatar = avatar or AvatarProfile()
        self.enabled = enabled
        self.forced_level = forced_level
        self.exchange_maps: dict[int, MaskingMap] = {}   # local-only store
        self._exchange_ids = itertools.count(1)

    def clear_request(self, request) -> tuple[int, MaskingMap] | None:
        """Mask every message in place and stamp the gate clearance."""
        from .inference import GATE_CLEARED
        if not self.enabled:
            return None
        combined = "\n".join(m["content"] for m in request.messages)
        present = {s.category for s in self.detector.detect(combined, categories_at(4))}
        level = self.forced_level or choose_mask_level("cloud", present)
        if level == 0:
            request.gate_clearance = GATE_CLEARED
            return None
        avatar = self.avatar
        entries: list[MaskEntry] = []
        for message in request.messages:
            masked, mapping = mask_payload(message["content"], level, avatar,
                                           self.detector)
            message["content"] = masked
            entries.extend(mapping.entries)
        combined_map = MaskingMap(entries=entries, level=level)
        exchange_id = next(self._exchange_ids)
        self.exchange_maps[exchange_id] = combined_map
        request.gate_clearance = GATE_CLEARED
        return exchange_id, combined_map

    def restore_response(self, text: str, exchange_id: int) -> tuple[str, list[str]]:
        mapping = self.exchange_maps.get(exchange_id)
        if mapping is None:
            return text, []
        return demask_payload(text, mapping)

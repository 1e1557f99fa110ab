"""The six memory component types, validation, and the canonical JSON encoding.

Every entry is an immutable value object. ``encode``/``decode`` define the wire
form used by the HTTP API and the export format; ``canonical_text`` defines the
searchable surface shared by all retrieval methods.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field, fields, replace
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Mapping, Union

from .errors import InvalidEntry

DEFAULT_CORE_CAPACITY = 5000

TIMESTAMP_FMT = "%Y-%m-%d %H:%M"


class ComponentId(str, Enum):
    CORE = "core"
    EPISODIC = "episodic"
    SEMANTIC = "semantic"
    PROCEDURAL = "procedural"
    RESOURCE = "resource"
    VAULT = "vault"


#: Components that participate in scored retrieval. Core memory is always
#: injected in full instead of being searched.
SCORED_COMPONENTS = (
    ComponentId.EPISODIC,
    ComponentId.SEMANTIC,
    ComponentId.PROCEDURAL,
    ComponentId.RESOURCE,
    ComponentId.VAULT,
)


class CoreLabel(str, Enum):
    PERSONA = "persona"
    HUMAN = "human"


class EventType(str, Enum):
    USER_MESSAGE = "user_message"
    INFERRED_RESULT = "inferred_result"
    SYSTEM_NOTIFICATION = "system_notification"


class Actor(str, Enum):
    USER = "user"
    ASSISTANT = "assistant"


class ProceduralKind(str, Enum):
    WORKFLOW = "workflow"
    GUIDE = "guide"
    SCRIPT = "script"


class ResourceType(str, Enum):
    DOC = "doc"
    MARKDOWN = "markdown"
    PDF_TEXT = "pdf_text"
    IMAGE = "image"
    VOICE_TRANSCRIPT = "voice_transcript"


class VaultKind(str, Enum):
    CREDENTIAL = "credential"
    BOOKMARK = "bookmark"
    CONTACT_INFO = "contact_info"
    API_KEY = "api_key"


class Sensitivity(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


def new_entry_id() -> str:
    """128-bit random identifier rendered as lowercase hex."""
    return uuid.uuid4().hex


def parse_timestamp(value: str | datetime) -> datetime:
    """Parse the canonical minute-precision form or any ISO-8601 instant.

    Naive inputs are interpreted as UTC; the returned instant is always
    timezone-aware UTC.
    """
    if isinstance(value, datetime):
        dt = value
    else:
        try:
            dt = datetime.strptime(value, TIMESTAMP_FMT)
        except ValueError:
            try:
                dt = datetime.fromisoformat(value)
            except ValueError as exc:
                raise InvalidEntry(f"unparseable timestamp: {value!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_timestamp(dt: datetime) -> str:
    """Render an instant in the canonical minute-precision display form."""
    if dt.tzinfo is not None:
        dt = dt.astimezone(timezone.utc)
    return dt.strftime(TIMESTAMP_FMT)


@dataclass(frozen=True)
class CoreBlock:
    """Always-visible memory block; exactly one per label."""

    label: CoreLabel
    value: str
    capacity: int = DEFAULT_CORE_CAPACITY


@dataclass(frozen=True)
class EpisodicEvent:
    event_type: EventType
    summary: str
    details: str
    actor: Actor
    timestamp: datetime
    id: str = field(default_factory=new_entry_id)

    def sort_key(self) -> tuple[datetime, str]:
        return (self.timestamp, self.id)


@dataclass(frozen=True)
class SemanticEntry:
    name: str
    summary: str
    details: str
    source: str
    id: str = field(default_factory=new_entry_id)


@dataclass(frozen=True)
class ProceduralEntry:
    entry_type: ProceduralKind
    description: str
    steps: tuple[str, ...]
    id: str = field(default_factory=new_entry_id)

    def __post_init__(self):
        if not isinstance(self.steps, tuple):
            object.__setattr__(self, "steps", tuple(self.steps))


@dataclass(frozen=True)
class ResourceEntry:
    title: str
    summary: str
    resource_type: ResourceType
    content: str
    id: str = field(default_factory=new_entry_id)


@dataclass(frozen=True)
class VaultEntry:
    entry_type: VaultKind
    source: str
    sensitivity: Sensitivity
    secret_value: str
    id: str = field(default_factory=new_entry_id)


MemoryEntry = Union[
    CoreBlock, EpisodicEvent, SemanticEntry, ProceduralEntry, ResourceEntry, VaultEntry
]

_ENTRY_TYPES: dict[ComponentId, type] = {
    ComponentId.CORE: CoreBlock,
    ComponentId.EPISODIC: EpisodicEvent,
    ComponentId.SEMANTIC: SemanticEntry,
    ComponentId.PROCEDURAL: ProceduralEntry,
    ComponentId.RESOURCE: ResourceEntry,
    ComponentId.VAULT: VaultEntry,
}

_COMPONENT_OF: dict[type, ComponentId] = {v: k for k, v in _ENTRY_TYPES.items()}


def component_of(entry: MemoryEntry) -> ComponentId:
    try:
        return _COMPONENT_OF[type(entry)]
    except KeyError:
        raise InvalidEntry(f"not a memory entry: {type(entry).__name__}")


def entry_fields(component: ComponentId) -> tuple[str, ...]:
    """Field names of the component's schema, in canonical order."""
    return tuple(f.name for f in fields(_ENTRY_TYPES[component]))


def patchable_fields(component: ComponentId) -> frozenset[str]:
    return frozenset(entry_fields(component)) - {"id"}


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...] = ()


def validate(entry: MemoryEntry) -> ValidationReport:
    """Check the entry against its component's invariants; never raises."""
    problems: list[str] = []

    def _check_id(entry_id: str):
        if not isinstance(entry_id, str) or not entry_id:
            problems.append("id must be a non-empty string")

    if isinstance(entry, CoreBlock):
        if not isinstance(entry.label, CoreLabel):
            problems.append("label must be one of persona, human")
        if not isinstance(entry.capacity, int) or entry.capacity <= 0:
            problems.append("capacity must be a positive integer")
        elif isinstance(entry.value, str) and len(entry.value) > entry.capacity:
            problems.append("value exceeds capacity")
        if not isinstance(entry.value, str):
            problems.append("value must be text")
    elif isinstance(entry, EpisodicEvent):
        _check_id(entry.id)
        if not isinstance(entry.event_type, EventType):
            problems.append("event_type must be a known event kind")
        if not isinstance(entry.summary, str) or not entry.summary.strip():
            problems.append("summary must be non-empty")
        if not isinstance(entry.actor, Actor):
            problems.append("actor must be user or assistant")
        if not isinstance(entry.timestamp, datetime) or entry.timestamp.tzinfo is None:
            problems.append("timestamp must be a timezone-aware instant")
    elif isinstance(entry, SemanticEntry):
        _check_id(entry.id)
        if not isinstance(entry.name, str) or not entry.name.strip():
            problems.append("name must be non-empty")
    elif isinstance(entry, ProceduralEntry):
        _check_id(entry.id)
        if not isinstance(entry.entry_type, ProceduralKind):
            problems.append("entry_type must be workflow, guide, or script")
        if not entry.steps:
            problems.append("steps must be non-empty")
        elif not all(isinstance(s, str) for s in entry.steps):
            problems.append("steps must all be text")
    elif isinstance(entry, ResourceEntry):
        _check_id(entry.id)
        if not isinstance(entry.resource_type, ResourceType):
            problems.append("resource_type must be a known kind")
        if not isinstance(entry.content, str):
            problems.append("content must be text")
    elif isinstance(entry, VaultEntry):
        _check_id(entry.id)
        if not isinstance(entry.entry_type, VaultKind):
            problems.append("entry_type must be a known vault kind")
        if not isinstance(entry.sensitivity, Sensitivity):
            problems.append("sensitivity must be low, medium, or high")
        if not isinstance(entry.secret_value, str):
            problems.append("secret_value must be text")
    else:
        problems.append(f"unknown entry type {type(entry).__name__}")

    return ValidationReport(ok=not problems, violations=tuple(problems))


def canonical_text(entry: MemoryEntry) -> str:
    """Deterministic concatenation of the entry's textual fields.

    High-sensitivity vault entries never contribute their secret_value: the
    searchable surface must not leak what casual retrieval may not return.
    """
    if isinstance(entry, CoreBlock):
        parts = [entry.label.value, entry.value]
    elif isinstance(entry, EpisodicEvent):
        parts = [
            entry.event_type.value,
            entry.summary,
            entry.details,
            entry.actor.value,
            format_timestamp(entry.timestamp),
        ]
    elif isinstance(entry, SemanticEntry):
        parts = [entry.name, entry.summary, entry.details, entry.source]
    elif isinstance(entry, ProceduralEntry):
        parts = [entry.entry_type.value, entry.description, *entry.steps]
    elif isinstance(entry, ResourceEntry):
        parts = [entry.title, entry.summary, entry.resource_type.value, entry.content]
    elif isinstance(entry, VaultEntry):
        parts = [entry.entry_type.value, entry.source, entry.sensitivity.value]
        if entry.sensitivity is not Sensitivity.HIGH:
            parts.append(entry.secret_value)
    else:
        raise InvalidEntry(f"not a memory entry: {type(entry).__name__}")
    return "\n".join(parts)


def summary_of(entry: MemoryEntry) -> str:
    """The short projection used by coarse search; never includes secrets."""
    if isinstance(entry, CoreBlock):
        return entry.label.value
    if isinstance(entry, EpisodicEvent):
        return entry.summary
    if isinstance(entry, SemanticEntry):
        return entry.summary
    if isinstance(entry, ProceduralEntry):
        return entry.description
    if isinstance(entry, ResourceEntry):
        return entry.summary
    if isinstance(entry, VaultEntry):
        return f"{entry.entry_type.value} ({entry.source})"
    raise InvalidEntry(f"not a memory entry: {type(entry).__name__}")


def encode(entry: MemoryEntry) -> dict[str, Any]:
    """Entry as a JSON-ready document with a ``component`` discriminator."""
    component = component_of(entry)
    doc: dict[str, Any] = {"component": component.value}
    for f in fields(entry):
        value = getattr(entry, f.name)
        if isinstance(value, Enum):
            value = value.value
        elif isinstance(value, datetime):
            value = value.astimezone(timezone.utc).isoformat()
        elif isinstance(value, tuple):
            value = list(value)
        doc[f.name] = value
    return doc


def encode_json(entry: MemoryEntry) -> str:
    return json.dumps(encode(entry), ensure_ascii=False, sort_keys=True)


def _coerce_enum(enum_type: type, value: Any, field_name: str) -> Any:
    if isinstance(value, enum_type):
        return value
    try:
        return enum_type(value)
    except ValueError:
        allowed = ", ".join(m.value for m in enum_type)
        raise InvalidEntry(f"unknown {field_name} {value!r}; expected one of: {allowed}")


def decode(doc: Mapping[str, Any]) -> MemoryEntry:
    """Strict inverse of :func:`encode`; unknown components, enum values, or
    extra keys are rejected rather than coerced."""
    if "component" not in doc:
        raise InvalidEntry("document is missing the component discriminator")
    try:
        component = ComponentId(doc["component"])
    except ValueError:
        raise InvalidEntry(f"unknown component {doc['component']!r}")
    payload = {k: v for k, v in doc.items() if k != "component"}
    return entry_from_fields(component, payload)


def decode_json(text: str) -> MemoryEntry:
    return decode(json.loads(text))


_ENUM_BY_FIELD: dict[ComponentId, dict[str, type]] = {
    ComponentId.CORE: {"label": CoreLabel},
    ComponentId.EPISODIC: {"event_type": EventType, "actor": Actor},
    ComponentId.SEMANTIC: {},
    ComponentId.PROCEDURAL: {"entry_type": ProceduralKind},
    ComponentId.RESOURCE: {"resource_type": ResourceType},
    ComponentId.VAULT: {"entry_type": VaultKind, "sensitivity": Sensitivity},
}


def entry_from_fields(
    component: ComponentId,
    payload: Mapping[str, Any],
    default_timestamp: datetime | None = None,
) -> MemoryEntry:
    """Build a validated entry from a loose field mapping (wire payloads).

    Missing ``id`` is generated; episodic ``timestamp`` may be the canonical
    text form, ISO-8601, or absent when ``default_timestamp`` is supplied.
    Raises :class:`InvalidEntry` on unknown fields, unknown enum values, or
    invariant violations.
    """
    allowed = set(entry_fields(component))
    extra = set(payload) - allowed
    if extra:
        raise InvalidEntry(
            f"unknown fields for {component.value}: {', '.join(sorted(extra))}"
        )

    kwargs: dict[str, Any] = dict(payload)
    for name, enum_type in _ENUM_BY_FIELD[component].items():
        if name in kwargs:
            kwargs[name] = _coerce_enum(enum_type, kwargs[name], name)

    if component is ComponentId.EPISODIC:
        if "timestamp" in kwargs and kwargs["timestamp"] is not None:
            kwargs["timestamp"] = parse_timestamp(kwargs["timestamp"])
        elif default_timestamp is not None:
            kwargs["timestamp"] = default_timestamp
        else:
            raise InvalidEntry("episodic entry requires a timestamp")
    if component is ComponentId.PROCEDURAL and "steps" in kwargs:
        steps = kwargs["steps"]
        if not isinstance(steps, (list, tuple)):
            raise InvalidEntry("steps must be a list of instruction strings")
        kwargs["steps"] = tuple(steps)

    entry_type = _ENTRY_TYPES[component]
    try:
        entry = entry_type(**kwargs)
    except TypeError as exc:
        raise InvalidEntry(f"bad {component.value} payload: {exc}") from exc

    report = validate(entry)
    if not report.ok:
        raise InvalidEntry(
            f"invalid {component.value} entry: {'; '.join(report.violations)}"
        )
    return entry


def apply_patch(entry: MemoryEntry, patch: Mapping[str, Any]) -> MemoryEntry:
    """Return a copy of ``entry`` with patch fields applied.

    Only fields legal for the entry's component are accepted; the patched
    entry is re-validated.
    """
    from .errors import InvalidPatch

    component = component_of(entry)
    illegal = set(patch) - patchable_fields(component)
    if illegal:
        raise InvalidPatch(
            f"fields not legal for {component.value}: {', '.join(sorted(illegal))}"
        )
    kwargs: dict[str, Any] = dict(patch)
    for name, enum_type in _ENUM_BY_FIELD[component].items():
        if name in kwargs:
            try:
                kwargs[name] = _coerce_enum(enum_type, kwargs[name], name)
            except InvalidEntry as exc:
                raise InvalidPatch(str(exc)) from exc
    if component is ComponentId.EPISODIC and "timestamp" in kwargs:
        kwargs["timestamp"] = parse_timestamp(kwargs["timestamp"])
    if component is ComponentId.PROCEDURAL and "steps" in kwargs:
        kwargs["steps"] = tuple(kwargs["steps"])
    patched = replace(entry, **kwargs)
    report = validate(patched)
    if not report.ok:
        raise InvalidPatch(f"patch violates invariants: {'; '.join(report.violations)}")
    return patched

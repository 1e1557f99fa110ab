from __future__ import annotations

import sys
from datetime import datetime, timezone
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hexamem.gateway import HashedBagEmbedder
from hexamem.model import (
    Actor,
    ComponentId,
    EpisodicEvent,
    EventType,
    ProceduralEntry,
    ProceduralKind,
    ResourceEntry,
    ResourceType,
    SemanticEntry,
    Sensitivity,
    VaultEntry,
    VaultKind,
    parse_timestamp,
)
from hexamem.store import Store


@pytest.fixture
def embedder():
    return HashedBagEmbedder()


@pytest.fixture
def store(tmp_path, embedder):
    s = Store(str(tmp_path / "memory.db"), embedder=embedder)
    yield s
    s.close()


def make_episodic(summary="had coffee with Ana", details="at the corner cafe",
                  when="2025-03-05 10:15", **kwargs):
    return EpisodicEvent(
        event_type=kwargs.pop("event_type", EventType.USER_MESSAGE),
        summary=summary,
        details=details,
        actor=kwargs.pop("actor", Actor.USER),
        timestamp=parse_timestamp(when),
        **kwargs,
    )


def make_semantic(name="John", summary="John is a friend who enjoys jogging",
                  details="lives in San Francisco", source="user_provided", **kwargs):
    return SemanticEntry(name=name, summary=summary, details=details, source=source, **kwargs)


def make_procedural(description="file a travel reimbursement",
                    steps=("open the portal", "attach receipts", "submit"), **kwargs):
    return ProceduralEntry(
        entry_type=kwargs.pop("entry_type", ProceduralKind.WORKFLOW),
        description=description,
        steps=tuple(steps),
        **kwargs,
    )


def make_resource(title="picnic plan", summary="friend's detailed picnic plan",
                  content="bring sandwiches and a blanket", **kwargs):
    return ResourceEntry(
        title=title,
        summary=summary,
        resource_type=kwargs.pop("resource_type", ResourceType.DOC),
        content=content,
        **kwargs,
    )


def make_vault(entry_type=VaultKind.CREDENTIAL, source="github",
               sensitivity=Sensitivity.LOW, secret_value="hunter2", **kwargs):
    return VaultEntry(
        entry_type=entry_type,
        source=source,
        sensitivity=sensitivity,
        secret_value=secret_value,
        **kwargs,
    )


COMPONENT_FACTORIES = {
    ComponentId.EPISODIC: make_episodic,
    ComponentId.SEMANTIC: make_semantic,
    ComponentId.PROCEDURAL: make_procedural,
    ComponentId.RESOURCE: make_resource,
    ComponentId.VAULT: make_vault,
}


def utc(year=2025, month=3, day=5, hour=10, minute=15):
    return datetime(year, month, day, hour, minute, tzinfo=timezone.utc)

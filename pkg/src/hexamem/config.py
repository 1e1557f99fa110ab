"""Engine configuration, loadable from a single JSON file.

Every field has a documented default, so an empty file (or no file) yields a
working offline engine. Live-provider credentials are only read at first use.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping

from .gateway import ProviderConfig
from .model import DEFAULT_CORE_CAPACITY


@dataclass
class EngineConfig:
    # storage
    store_path: str = "memory.db"
    audit_log_enabled: bool = False
    # core memory
    core_capacity: int = DEFAULT_CORE_CAPACITY
    persona_seed: str = ""
    human_seed: str = ""
    # capture thresholds
    batch_size: int = 20
    similarity_threshold: float = 0.99
    # retrieval defaults
    retrieval_k: int = 10
    retrieval_method: str = "bm25_match"
    # conversation handling
    chunk_turns: int = 10
    history_window: int = 10
    search_budget: int = 6
    # HTTP service
    host: str = "127.0.0.1"
    port: int = 8077
    auth_token: str = ""  # empty disables auth
    webui_dir: str = ""  # static directory served at /ui when set
    # vault access flag policy: high-sensitivity values are reachable only
    # when this is on AND the caller sets the explicit access flag
    vault_access_enabled: bool = False
    # providers
    router_provider: ProviderConfig = field(default_factory=ProviderConfig)
    chat_provider: ProviderConfig = field(default_factory=ProviderConfig)
    rewrite_provider: ProviderConfig = field(default_factory=ProviderConfig)
    embedder_provider: ProviderConfig | None = None  # None = deterministic embedder

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "EngineConfig":
        kwargs: dict[str, Any] = dict(doc)
        for key in ("router_provider", "chat_provider", "rewrite_provider"):
            if key in kwargs and isinstance(kwargs[key], Mapping):
                kwargs[key] = ProviderConfig(**kwargs[key])
        if isinstance(kwargs.get("embedder_provider"), Mapping):
            kwargs["embedder_provider"] = ProviderConfig(**kwargs["embedder_provider"])
        unknown = set(kwargs) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str) -> "EngineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict[str, Any]:
        doc = asdict(self)
        for key in ("router_provider", "chat_provider", "rewrite_provider", "embedder_provider"):
            if doc.get(key) is not None:
                doc[key]["kind"] = doc[key]["kind"].value if hasattr(doc[key]["kind"], "value") else doc[key]["kind"]
        return doc

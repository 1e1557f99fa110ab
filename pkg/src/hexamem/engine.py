"""Assembles store, retrieval, gateway, orchestrator, agents, and ingestion.

The assembled system has exactly eight agent roles: the meta memory manager,
six component memory managers, and the chat agent.
"""

from __future__ import annotations

import logging
import threading
from collections import defaultdict
from datetime import datetime
from typing import Any, Callable, Iterable, Mapping

from .chat import ChatAgent, ChatTurn
from .config import EngineConfig
from .errors import GatewayError
from .gateway import ChatProvider, ProviderKind, build_embedder, build_provider
from .ingestion import (
    AcceptResult,
    ConversationTurn,
    Frame,
    ScreenshotStream,
    ingest_conversation,
    render_batch_text,
)
from .orchestrator import Orchestrator, UpdateAck
from .retrieval import Retriever
from .store import Store, StoreStats

logger = logging.getLogger(__name__)


def _maybe_provider(config) -> ChatProvider | None:
    """Build a provider, or None when the config is an unusable placeholder
    (scripted kind without a script); usage then fails predictably at call time."""
    if config.kind is ProviderKind.SCRIPTED and not config.script_path:
        return None
    return build_provider(config)


class MemoryEngine:
    """One user's memory system over one backing store file."""

    def __init__(
        self,
        config: EngineConfig | None = None,
        *,
        router_provider: ChatProvider | None = None,
        chat_provider: ChatProvider | None = None,
        rewrite_provider: ChatProvider | None = None,
        embedder=None,
        upload_hook: Callable[[Frame], None] | None = None,
        clock: Callable[[], datetime] | None = None,
    ):
        self.config = config or EngineConfig()
        self.embedder = embedder or build_embedder(self.config.embedder_provider)
        store_kwargs: dict[str, Any] = {}
        if clock is not None:
            store_kwargs["clock"] = clock
        self.store = Store(
            self.config.store_path,
            embedder=self.embedder,
            audit_enabled=self.config.audit_log_enabled,
            **store_kwargs,
        )
        self.retriever = Retriever(
            self.store, self.embedder, default_k=self.config.retrieval_k
        )
        self.orchestrator = Orchestrator(
            self.store,
            self.retriever,
            router_provider=router_provider or _maybe_provider(self.config.router_provider),
            rewrite_provider=rewrite_provider
            or _maybe_provider(self.config.rewrite_provider),
            core_capacity=self.config.core_capacity,
            clock=clock,
        )
        self.orchestrator.ensure_core_blocks(
            self.config.persona_seed, self.config.human_seed
        )
        self.chat_agent = ChatAgent(
            self.retriever,
            chat_provider or _maybe_provider(self.config.chat_provider),
            self.orchestrator,
            history_window=self.config.history_window,
            search_budget=self.config.search_budget,
            default_k=self.config.retrieval_k,
        )
        self.last_batch_ack: UpdateAck | None = None
        self.stream = ScreenshotStream(
            batch_size=self.config.batch_size,
            similarity_threshold=self.config.similarity_threshold,
            upload_hook=upload_hook,
            on_batch=self._on_batch,
        )
        self._histories: dict[str, list[ChatTurn]] = defaultdict(list)
        self._conversation_locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._locks_guard = threading.Lock()

    # -- agents ------------------------------------------------------------

    def agent_roles(self) -> tuple[str, ...]:
        return self.orchestrator.agent_roles + (self.chat_agent.role,)

    # -- ingestion ----------------------------------------------------------

    def ingest_text(self, text: str) -> UpdateAck:
        return self.orchestrator.update_cycle(text)

    def _on_batch(self, batch) -> None:
        self.last_batch_ack = self.orchestrator.update_cycle(render_batch_text(batch))

    def ingest_frame(self, frame: Frame) -> AcceptResult:
        """Accept one screenshot frame; a completed batch runs an update cycle
        before this returns (its ack lands in ``last_batch_ack``)."""
        return self.stream.accept_frame(frame)

    def ingest_conversation(
        self, turns: Iterable[ConversationTurn]
    ) -> list[UpdateAck]:
        return ingest_conversation(
            turns, self.orchestrator.update_cycle, self.config.chunk_turns
        )

    # -- conversation -----------------------------------------------------------

    def chat(self, conversation_id: str, message: str) -> ChatTurn:
        """Answer within one conversation; calls for the same id are serialized."""
        with self._locks_guard:
            lock = self._conversation_locks[conversation_id]
        with lock:
            history = list(self._histories[conversation_id])
            turn = self.chat_agent.answer(message, history)
            self._histories[conversation_id].append(ChatTurn(role="user", content=message))
            self._histories[conversation_id].append(turn)
            return turn

    def edit_memory(self, instruction: str) -> UpdateAck:
        return self.chat_agent.edit_memory(instruction)

    # -- inspection / lifecycle ----------------------------------------------------

    def stats(self) -> StoreStats:
        return self.store.stats()

    def export_doc(self, include_secrets: bool = False) -> Mapping[str, Any]:
        if include_secrets and not self.config.vault_access_enabled:
            raise GatewayError("vault access is disabled by policy")
        return self.store.export_doc(include_secrets=include_secrets)

    def import_doc(self, doc: Mapping[str, Any]) -> dict[str, int]:
        return self.store.import_doc(doc)

    def close(self) -> None:
        self.store.close()

    def __enter__(self) -> "MemoryEngine":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

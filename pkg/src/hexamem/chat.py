"""Conversational agent over the memory base.

Answer pipeline: coarse search, a gateway turn that emits the current topic
and any targeted per-component searches, active retrieval injected into the
system prompt as tagged context, then the synthesized reply. Older context
must come from memory: only the trailing history window is ever in the prompt.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

from . import gateway
from .errors import SchemaViolation, ToolLoopExceeded
from .gateway import ChatProvider, Message, ParamSpec, ToolSpec
from .model import ComponentId
from .orchestrator import Orchestrator, UpdateAck
from .retrieval import RetrievalMethod, Retriever, TaggedContext, Topic

logger = logging.getLogger(__name__)

DEFAULT_HISTORY_WINDOW = 10
DEFAULT_SEARCH_BUDGET = 6  # at most one targeted search per component

SET_TOPIC_TOOL = ToolSpec(
    name="set_topic",
    description=(
        "Declare the current topic of the conversation before answering; the "
        "topic drives automatic retrieval from every memory component."
    ),
    params=(ParamSpec("topic", "string", required=True),),
)

SEARCH_TOOL = ToolSpec(
    name="search_memory",
    description=(
        "Targeted search of one memory component. method is one of bm25_match, "
        "embedding_match, string_match (default bm25_match)."
    ),
    params=(
        ParamSpec("component", "string", required=True),
        ParamSpec("query", "string", required=True),
        ParamSpec("method", "string"),
        ParamSpec("k", "integer"),
    ),
)

CHAT_PROMPT = """You are a personal assistant with a six-component long-term memory. \
Answer strictly from the tagged memory excerpts and the visible conversation; if \
memory holds nothing relevant, say so. Before answering, call set_topic with the \
current topic, and optionally search_memory for components worth a deeper look.

{core}

Memory digest:
{digest}
{context}"""


@dataclass(frozen=True)
class ChatTurn:
    role: str
    content: str
    context: TaggedContext | None = None
    sources: tuple[tuple[ComponentId, str], ...] = ()


class ChatAgent:
    """One conversation at a time; distinct conversations may run concurrently."""

    role = "chat_agent"

    def __init__(
        self,
        retriever: Retriever,
        provider: ChatProvider | None,
        orchestrator: Orchestrator,
        history_window: int = DEFAULT_HISTORY_WINDOW,
        search_budget: int = DEFAULT_SEARCH_BUDGET,
        default_k: int | None = None,
    ):
        self.retriever = retriever
        self.provider = provider
        self.orchestrator = orchestrator
        self.history_window = history_window
        self.search_budget = search_budget
        self.default_k = default_k or retriever.default_k
        #: Ordered trace of the last answer() call, for inspection and tests:
        #: ("topic", text) / ("search", component) / ("answer",) events.
        self.last_trace: tuple[tuple, ...] = ()

    def answer(self, query: str, history: Sequence[ChatTurn] = ()) -> ChatTurn:
        if not query.strip():
            raise ValueError("query must be non-empty")
        digest = self.retriever.coarse_search(query)
        context: TaggedContext | None = None
        trace: list[tuple] = []
        sources: list[tuple[ComponentId, str]] = []
        searches_used = 0

        def system_message() -> Message:
            rendered = f"\nRetrieved memory:\n{context.render()}" if context else ""
            return Message.system(
                CHAT_PROMPT.format(
                    core=self.retriever._core_text(),
                    digest=digest.render(),
                    context=rendered,
                )
            )

        window = list(history)[-self.history_window :]
        transcript: list[Message] = [
            Message(role=t.role, content=t.content) for t in window
        ]
        transcript.append(Message.user(query))

        for _ in range(gateway.MAX_TOOL_ROUNDS):
            reply = gateway.chat([system_message()] + transcript, self._tools(), self.provider)
            if not reply.tool_calls:
                trace.append(("answer",))
                self.last_trace = tuple(trace)
                return ChatTurn(
                    role="assistant",
                    content=reply.content,
                    context=context,
                    sources=tuple(dict.fromkeys(sources)),
                )
            transcript.append(reply)
            for call in reply.tool_calls:
                if call.name == SET_TOPIC_TOOL.name:
                    topic = Topic(call.arguments["topic"])
                    trace.append(("topic", topic.text))
                    context = self.retriever.active_retrieve(topic, self.default_k)
                    sources.extend(context.sources())
                    result = context.render() or "(no matching memories)"
                else:
                    searches_used += 1
                    if searches_used > self.search_budget:
                        raise ToolLoopExceeded(
                            f"targeted search budget of {self.search_budget} exceeded"
                        )
                    hits = self._run_search(call.arguments)
                    trace.append(("search", str(call.arguments.get("component"))))
                    sources.extend((h.component, h.entry_id) for h in hits)
                    result = self._render_hits(call.arguments, hits)
                transcript.append(Message.tool(call.call_id, result))
        raise ToolLoopExceeded(
            f"no final answer within {gateway.MAX_TOOL_ROUNDS} tool rounds"
        )

    def _tools(self) -> tuple[ToolSpec, ...]:
        return (SET_TOPIC_TOOL, SEARCH_TOOL)

    def _run_search(self, arguments) -> list:
        try:
            component = ComponentId(arguments["component"])
        except ValueError:
            raise SchemaViolation(f"unknown component {arguments.get('component')!r}")
        try:
            method = RetrievalMethod(arguments.get("method", RetrievalMethod.BM25.value))
        except ValueError:
            raise SchemaViolation(f"unknown retrieval method {arguments.get('method')!r}")
        k = arguments.get("k", self.default_k)
        return self.retriever.search(component, method, arguments["query"], k)

    def _render_hits(self, arguments, hits) -> str:
        if not hits:
            return "(no matching memories)"
        component = ComponentId(arguments["component"])
        tag = f"{component.value}_memory"
        body = "\n\n".join(self.retriever.store.get_text(h.entry_id) for h in hits)
        return f"<{tag}>\n{body}\n</{tag}>"

    def edit_memory(self, instruction: str) -> UpdateAck:
        """Precise memory edits expressed in natural language go through the
        regular update workflow."""
        return self.orchestrator.update_cycle(instruction)

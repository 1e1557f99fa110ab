"""Meta memory manager and the six per-component memory managers.

One update cycle runs: automatic pre-search over the memory base, a routing
call that picks the relevant components and extracts per-component payloads,
parallel manager writes with redundancy avoidance, a core-capacity check, and
a single acknowledgment. A failing manager never blocks or rolls back its
siblings.
"""

from __future__ import annotations

import logging
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Any, Callable, Mapping, Sequence

from . import gateway, model
from .errors import EngineError, GatewayError, SchemaViolation
from .gateway import ChatProvider, Message, ParamSpec, ToolSpec
from .model import ComponentId, CoreBlock, CoreLabel
from .retrieval import CoarseDigest, Retriever
from .store import Store
from .text import normalize_ws

logger = logging.getLogger(__name__)

#: Rewrite triggers when a block passes this fraction of its capacity ...
REWRITE_TRIGGER = 0.9
#: ... and must land at or under this fraction (hysteresis against thrash).
REWRITE_TARGET = 0.75

ELISION_MARKER = "[earlier entries elided]"

#: Pre-update search uses a prefix of the raw input as its query.
PRESEARCH_QUERY_LEN = 256

ROUTING_TOOL = ToolSpec(
    name="route_memory",
    description=(
        "Route the observed input to the memory components it should update. "
        "targets is the list of component names (episodic, semantic, procedural, "
        "resource, vault, core); payloads maps each target to a list of entry "
        "payloads or patches (a payload with an 'id' field patches that entry). "
        "Use an empty targets list when nothing is worth remembering."
    ),
    params=(
        ParamSpec("targets", "array", required=True, description="component names"),
        ParamSpec("payloads", "object", description="component -> list of payloads"),
        ParamSpec("rationale", "string", description="short reason for the routing"),
    ),
)


def manager_tool(component: ComponentId) -> ToolSpec:
    fields = ", ".join(model.entry_fields(component))
    return ToolSpec(
        name=f"update_{component.value}_memory",
        description=(
            f"Apply entry payloads to the {component.value} component. "
            f"Payload fields: {fields}. A payload carrying an 'id' patches the "
            "existing entry instead of inserting."
        ),
        params=(ParamSpec("entries", "array", required=True),),
    )


MANAGER_TOOLS = tuple(manager_tool(c) for c in ComponentId)

META_PROMPT = """You are the meta memory manager of a six-component memory system \
(core, episodic, semantic, procedural, resource, vault). Decide which components \
the new input should update and extract one payload per new fact, event, \
procedure, resource, or credential. Prefer patching an existing entry (by the id \
shown in the search digest) over inserting a near duplicate. Call route_memory \
exactly once.

Current memory digest:
{digest}"""

REWRITE_PROMPT = """You maintain one block of the agent's always-visible core memory. \
Rewrite the block below so it keeps every critical fact but fits within {limit} \
characters. Reply with the rewritten block text only."""


@dataclass(frozen=True)
class RoutingDecision:
    targets: tuple[ComponentId, ...]
    payloads: Mapping[ComponentId, tuple[Mapping[str, Any], ...]]
    rationale: str = ""

    @staticmethod
    def empty(rationale: str = "") -> "RoutingDecision":
        return RoutingDecision(targets=(), payloads={}, rationale=rationale)


@dataclass(frozen=True)
class UpdateReport:
    component: ComponentId
    inserted_ids: tuple[str, ...] = ()
    updated_ids: tuple[str, ...] = ()
    skipped_duplicates: int = 0
    error: str | None = None


@dataclass(frozen=True)
class UpdateAck:
    cycle_id: str
    reports: tuple[UpdateReport, ...]
    status: str  # complete | partial

    @property
    def complete(self) -> bool:
        return self.status == "complete"


def truncate_oldest(text: str, limit: int) -> str:
    """Drop oldest-listed lines until the text fits, marking the elision."""
    if len(text) <= limit:
        return text
    lines = text.splitlines()
    while lines:
        lines = lines[1:]
        candidate = ELISION_MARKER + "\n" + "\n".join(lines) if lines else ELISION_MARKER
        if len(candidate) <= limit:
            return candidate
    # Single oversized line: keep its tail.
    keep = max(limit - len(ELISION_MARKER) - 1, 0)
    return (ELISION_MARKER + "\n" + text[-keep:])[:limit]


class Orchestrator:
    """Routes inputs to component managers and runs their updates in parallel."""

    def __init__(
        self,
        store: Store,
        retriever: Retriever,
        router_provider: ChatProvider | None = None,
        rewrite_provider: ChatProvider | None = None,
        core_capacity: int = model.DEFAULT_CORE_CAPACITY,
        clock: Callable[[], datetime] | None = None,
    ):
        self.store = store
        self.retriever = retriever
        self.router_provider = router_provider
        self.rewrite_provider = rewrite_provider
        self.core_capacity = core_capacity
        self.clock = clock or (lambda: datetime.now(timezone.utc))

    @property
    def agent_roles(self) -> tuple[str, ...]:
        return ("meta_memory_manager",) + tuple(
            f"{c.value}_memory_manager" for c in ComponentId
        )

    def ensure_core_blocks(self, persona_seed: str = "", human_seed: str = "") -> None:
        seeds = {CoreLabel.PERSONA: persona_seed, CoreLabel.HUMAN: human_seed}
        for label, seed in seeds.items():
            if self.store.get_core_block(label) is None:
                self.store.set_core_block(
                    CoreBlock(label=label, value=seed, capacity=self.core_capacity)
                )

    # -- routing -----------------------------------------------------------

    def route(self, input_text: str, context: CoarseDigest) -> RoutingDecision:
        """One gateway call with the routing tool; empty decision is legal."""
        if not input_text.strip():
            raise ValueError("routing input must be non-empty")
        messages = [
            Message.system(META_PROMPT.format(digest=context.render())),
            Message.user(input_text),
        ]
        reply = gateway.chat(messages, (ROUTING_TOOL,), self.router_provider)
        call = next((c for c in reply.tool_calls if c.name == ROUTING_TOOL.name), None)
        if call is None:
            return RoutingDecision.empty(rationale=reply.content)
        return self._parse_decision(call.arguments)

    def _parse_decision(self, arguments: Mapping[str, Any]) -> RoutingDecision:
        targets: list[ComponentId] = []
        for name in arguments.get("targets", []):
            try:
                targets.append(ComponentId(name))
            except ValueError:
                raise SchemaViolation(f"routing names unknown component {name!r}")
        payloads: dict[ComponentId, tuple[Mapping[str, Any], ...]] = {}
        for name, items in (arguments.get("payloads") or {}).items():
            try:
                component = ComponentId(name)
            except ValueError:
                raise SchemaViolation(f"payload names unknown component {name!r}")
            if component not in targets:
                raise SchemaViolation(
                    f"payload component {name} is outside the target set"
                )
            if not isinstance(items, Sequence) or isinstance(items, (str, bytes)):
                raise SchemaViolation(f"payloads for {name} must be a list")
            payloads[component] = tuple(items)
        return RoutingDecision(
            targets=tuple(targets),
            payloads=payloads,
            rationale=str(arguments.get("rationale", "")),
        )

    # -- managers ------------------------------------------------------------

    def apply_updates(self, decision: RoutingDecision) -> UpdateAck:
        """Run every targeted component's manager concurrently and aggregate.

        A manager failure is captured in its report; siblings always run to
        completion and their writes stay committed.
        """
        cycle_id = uuid.uuid4().hex
        if not decision.targets:
            return UpdateAck(cycle_id=cycle_id, reports=(), status="complete")
        with ThreadPoolExecutor(max_workers=len(decision.targets)) as pool:
            futures = {
                component: pool.submit(
                    self._run_manager, component, decision.payloads.get(component, ())
                )
                for component in decision.targets
            }
            reports = tuple(futures[c].result() for c in decision.targets)
        status = "partial" if any(r.error for r in reports) else "complete"
        return UpdateAck(cycle_id=cycle_id, reports=reports, status=status)

    def _run_manager(
        self, component: ComponentId, payloads: Sequence[Mapping[str, Any]]
    ) -> UpdateReport:
        inserted: list[str] = []
        updated: list[str] = []
        skipped = 0
        errors: list[str] = []
        for payload in payloads:
            try:
                outcome, entry_id = self._apply_payload(component, payload)
                if outcome == "inserted":
                    inserted.append(entry_id)
                elif outcome == "updated":
                    updated.append(entry_id)
                else:
                    skipped += 1
            except EngineError as exc:
                logger.warning("%s manager error: %s", component.value, exc)
                errors.append(str(exc))
        return UpdateReport(
            component=component,
            inserted_ids=tuple(inserted),
            updated_ids=tuple(updated),
            skipped_duplicates=skipped,
            error="; ".join(errors) if errors else None,
        )

    def _apply_payload(
        self, component: ComponentId, payload: Mapping[str, Any]
    ) -> tuple[str, str]:
        if component is ComponentId.CORE:
            return self._apply_core_payload(payload)
        if "id" in payload:
            patch = {k: v for k, v in payload.items() if k != "id"}
            self.store.update(component, payload["id"], patch)
            return "updated", payload["id"]
        entry = model.entry_from_fields(component, payload, default_timestamp=self.clock())
        if self.store.find_duplicate(component, entry) is not None:
            return "skipped", ""
        near_id = self._near_duplicate(component, entry)
        if near_id is not None:
            patch = {
                k: v for k, v in model.encode(entry).items() if k not in ("id", "component")
            }
            self.store.update(component, near_id, patch)
            return "updated", near_id
        return "inserted", self.store.insert(component, entry)

    def _near_duplicate(self, component: ComponentId, entry) -> str | None:
        """Redundancy check: an existing entry whose summary matches the
        candidate's after normalization is updated rather than duplicated."""
        candidate = normalize_ws(model.summary_of(entry))
        if not candidate:
            return None
        digest = self.retriever.coarse_search(model.summary_of(entry))
        for entry_id, summary in digest.sections[component].items:
            if normalize_ws(summary) == candidate:
                return entry_id
        return None

    def _apply_core_payload(self, payload: Mapping[str, Any]) -> tuple[str, str]:
        try:
            label = CoreLabel(payload.get("label", ""))
        except ValueError:
            raise SchemaViolation(f"unknown core label {payload.get('label')!r}")
        text = payload.get("text", payload.get("value", ""))
        if not isinstance(text, str) or not text.strip():
            raise SchemaViolation("core payload requires non-empty text")
        block = self.store.get_core_block(label) or CoreBlock(
            label=label, value="", capacity=self.core_capacity
        )
        value = (block.value + "\n" + text).strip("\n")
        # Oversize is legal only transiently; the rewrite step restores the cap.
        block = replace(block, value=value[: block.capacity * 2])
        if len(block.value) > block.capacity:
            block = self.rewrite_core(block)
        self.store.set_core_block(block)
        return "updated", f"core:{label.value}"

    # -- core rewrite -------------------------------------------------------------

    def rewrite_core(self, block: CoreBlock) -> CoreBlock:
        """Compress a near-full block to at most REWRITE_TARGET of capacity.

        One gateway call does the compression; a non-compliant or failing
        provider falls back to deterministic truncation, so the postcondition
        always holds.
        """
        limit = int(block.capacity * REWRITE_TARGET)
        if self.rewrite_provider is not None:
            try:
                reply = gateway.chat(
                    [
                        Message.system(REWRITE_PROMPT.format(limit=limit)),
                        Message.user(block.value),
                    ],
                    (),
                    self.rewrite_provider,
                )
                if reply.content and 0 < len(reply.content) <= limit:
                    return replace(block, value=reply.content)
                logger.warning(
                    "core rewrite for %s returned %d chars (limit %d); truncating",
                    block.label.value,
                    len(reply.content or ""),
                    limit,
                )
            except GatewayError as exc:
                logger.warning("core rewrite failed (%s); truncating", exc)
        return replace(block, value=truncate_oldest(block.value, limit))

    def enforce_core_capacity(self) -> None:
        for label in CoreLabel:
            block = self.store.get_core_block(label)
            if block is None:
                continue
            if len(block.value) > REWRITE_TRIGGER * block.capacity:
                self.store.set_core_block(self.rewrite_core(block))

    # -- the full cycle --------------------------------------------------------------

    def update_cycle(self, input_text: str) -> UpdateAck:
        """Pre-search, route, apply updates in parallel, check core capacity."""
        if not input_text.strip():
            raise ValueError("update input must be non-empty")
        self.store.log_audit("input", input_text)
        digest = self.retriever.coarse_search(input_text[:PRESEARCH_QUERY_LEN])
        decision = self.route(input_text, digest)
        ack = self.apply_updates(decision)
        self.enforce_core_capacity()
        return ack

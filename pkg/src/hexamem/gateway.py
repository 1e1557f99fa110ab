"""Provider-agnostic LLM chat-with-tools and embedding front.

Two deterministic offline implementations make the whole system testable
without a network: a scripted chat provider that replays canned exchanges in
strict order, and a hashed bag-of-words embedder. HTTP adapters for
OpenAI-compatible and Gemini-compatible endpoints share the same envelope, so
the rest of the system never sees provider-specific shapes.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable, Mapping, Protocol, Sequence

import numpy as np

from .errors import (
    EmbedderUnavailable,
    GatewayError,
    ProviderRefusal,
    ProviderTimeout,
    SchemaViolation,
    ScriptMismatch,
)
from .text import tokenize

logger = logging.getLogger(__name__)

#: Hard cap on tool-call round-trips within one agent turn.
MAX_TOOL_ROUNDS = 8

EMBED_DIM = 256
EMBED_SEED = 0x6865786D  # fixed; changing it invalidates stored vectors

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


# --- envelope types --------------------------------------------------------


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str  # string | integer | number | boolean | array | object
    required: bool = False
    description: str = ""


@dataclass(frozen=True)
class ToolSpec:
    name: str
    description: str = ""
    params: tuple[ParamSpec, ...] = ()

    def schema(self) -> dict[str, Any]:
        """OpenAI-style function schema for publication and HTTP providers."""
        properties = {
            p.name: {"type": p.kind, "description": p.description} for p in self.params
        }
        return {
            "name": self.name,
            "description": self.description,
            "parameters": {
                "type": "object",
                "properties": properties,
                "required": [p.name for p in self.params if p.required],
            },
        }


@dataclass(frozen=True)
class ToolCall:
    name: str
    arguments: Mapping[str, Any]
    call_id: str = ""


@dataclass(frozen=True)
class Message:
    role: str
    content: str = ""
    tool_calls: tuple[ToolCall, ...] = ()
    tool_call_id: str = ""

    @staticmethod
    def system(content: str) -> "Message":
        return Message(role="system", content=content)

    @staticmethod
    def user(content: str) -> "Message":
        return Message(role="user", content=content)

    @staticmethod
    def assistant(content: str = "", tool_calls: Iterable[ToolCall] = ()) -> "Message":
        return Message(role="assistant", content=content, tool_calls=tuple(tool_calls))

    @staticmethod
    def tool(call_id: str, content: str) -> "Message":
        return Message(role="tool", content=content, tool_call_id=call_id)


class ProviderKind(str, Enum):
    SCRIPTED = "scripted"
    OPENAI = "http_openai_compatible"
    GEMINI = "http_gemini_compatible"


@dataclass
class ProviderConfig:
    kind: ProviderKind = ProviderKind.SCRIPTED
    model: str = ""
    endpoint: str = ""
    credentials_env: str = ""
    timeout: float = 30.0
    max_retries: int = 2
    script_path: str = ""

    def __post_init__(self):
        if not isinstance(self.kind, ProviderKind):
            self.kind = ProviderKind(self.kind)

    def check(self) -> None:
        if self.kind is ProviderKind.SCRIPTED:
            if not self.script_path:
                raise GatewayError("scripted provider requires a script path")
        else:
            if not self.endpoint:
                raise GatewayError(f"{self.kind.value} provider requires an endpoint")
            if not self.credentials_env:
                raise GatewayError(
                    f"{self.kind.value} provider requires a credentials env var name"
                )


class ChatProvider(Protocol):
    def chat(self, messages: Sequence[Message], tools: Sequence[ToolSpec]) -> Message: ...


# --- argument validation ----------------------------------------------------

_KIND_CHECKS = {
    "string": lambda v: isinstance(v, str),
    "integer": lambda v: isinstance(v, int) and not isinstance(v, bool),
    "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
    "boolean": lambda v: isinstance(v, bool),
    "array": lambda v: isinstance(v, (list, tuple)),
    "object": lambda v: isinstance(v, Mapping),
}


def validate_tool_args(spec: ToolSpec, arguments: Mapping[str, Any]) -> list[str]:
    """Return schema problems for a tool call's arguments (empty = valid)."""
    problems: list[str] = []
    known = {p.name: p for p in spec.params}
    for name in arguments:
        if name not in known:
            problems.append(f"unknown argument {name!r}")
    for p in spec.params:
        if p.name not in arguments:
            if p.required:
                problems.append(f"missing required argument {p.name!r}")
            continue
        check = _KIND_CHECKS.get(p.kind)
        if check is not None and not check(arguments[p.name]):
            problems.append(f"argument {p.name!r} is not of type {p.kind}")
    return problems


def chat(
    messages: Sequence[Message],
    tools: Sequence[ToolSpec],
    provider: ChatProvider,
) -> Message:
    """One assistant turn through a provider, with schema-checked tool calls."""
    if not messages:
        raise GatewayError("messages must be non-empty")
    names = [t.name for t in tools]
    if len(set(names)) != len(names):
        raise GatewayError("tool names must be unique within one call")
    if provider is None:
        raise ProviderRefusal("no chat provider configured")
    reply = provider.chat(messages, tools)
    by_name = {t.name: t for t in tools}
    for call in reply.tool_calls:
        spec = by_name.get(call.name)
        if spec is None:
            raise SchemaViolation(f"provider called unknown tool {call.name!r}")
        problems = validate_tool_args(spec, call.arguments)
        if problems:
            raise SchemaViolation(f"bad arguments for {call.name}: {'; '.join(problems)}")
    return reply


# --- scripted provider ------------------------------------------------------


@dataclass(frozen=True)
class ScriptedExchange:
    """One canned turn: an optional prompt predicate and the fixed response.

    ``expect`` currently supports ``{"contains": <substring>}`` matched against
    the concatenated message contents. ``None`` matches anything.
    """

    text: str = ""
    tool_calls: tuple[ToolCall, ...] = ()
    expect: Mapping[str, Any] | None = None


class ScriptedProvider:
    """Replays exchanges strictly in order; any deviation fails loudly."""

    def __init__(self, exchanges: Iterable[ScriptedExchange]):
        self._exchanges = list(exchanges)
        self._cursor = 0
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str) -> "ScriptedProvider":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        exchanges = []
        for i, raw in enumerate(doc.get("exchanges", [])):
            calls = tuple(
                ToolCall(
                    name=c["name"],
                    arguments=c.get("arguments", {}),
                    call_id=c.get("call_id", f"call_{i}_{j}"),
                )
                for j, c in enumerate(raw.get("tool_calls", []))
            )
            exchanges.append(
                ScriptedExchange(
                    text=raw.get("text", "") or "",
                    tool_calls=calls,
                    expect=raw.get("expect"),
                )
            )
        return cls(exchanges)

    @property
    def remaining(self) -> int:
        return len(self._exchanges) - self._cursor

    def chat(self, messages: Sequence[Message], tools: Sequence[ToolSpec]) -> Message:
        with self._lock:
            if self._cursor >= len(self._exchanges):
                raise ScriptMismatch(
                    f"script exhausted after {len(self._exchanges)} exchanges"
                )
            exchange = self._exchanges[self._cursor]
            if exchange.expect:
                haystack = "\n".join(m.content for m in messages if m.content)
                needle = exchange.expect.get("contains", "")
                if needle and needle not in haystack:
                    raise ScriptMismatch(
                        f"exchange {self._cursor}: prompt does not contain {needle!r}"
                    )
            self._cursor += 1
            calls = tuple(
                call if call.call_id else ToolCall(call.name, call.arguments, f"call_{self._cursor}_{j}")
                for j, call in enumerate(exchange.tool_calls)
            )
            return Message.assistant(exchange.text, calls)


# --- HTTP providers ---------------------------------------------------------


def to_openai_request(
    messages: Sequence[Message], tools: Sequence[ToolSpec], model: str
) -> dict[str, Any]:
    out_messages: list[dict[str, Any]] = []
    for m in messages:
        doc: dict[str, Any] = {"role": m.role, "content": m.content}
        if m.tool_calls:
            doc["tool_calls"] = [
                {
                    "id": c.call_id,
                    "type": "function",
                    "function": {
                        "name": c.name,
                        "arguments": json.dumps(dict(c.arguments), ensure_ascii=False),
                    },
                }
                for c in m.tool_calls
            ]
        if m.role == "tool":
            doc["tool_call_id"] = m.tool_call_id
        out_messages.append(doc)
    payload: dict[str, Any] = {"model": model, "messages": out_messages}
    if tools:
        payload["tools"] = [{"type": "function", "function": t.schema()} for t in tools]
    return payload


def parse_openai_response(doc: Mapping[str, Any]) -> Message:
    try:
        choice = doc["choices"][0]
        message = choice["message"]
    except (KeyError, IndexError) as exc:
        raise ProviderRefusal(f"malformed provider response: {exc}") from exc
    if choice.get("finish_reason") == "content_filter":
        raise ProviderRefusal("provider refused the request (content filter)")
    calls = []
    for raw in message.get("tool_calls") or []:
        fn = raw.get("function", {})
        try:
            arguments = json.loads(fn.get("arguments") or "{}")
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"unparseable tool arguments: {exc}") from exc
        calls.append(ToolCall(fn.get("name", ""), arguments, raw.get("id", "")))
    return Message.assistant(message.get("content") or "", tuple(calls))


def to_gemini_request(
    messages: Sequence[Message], tools: Sequence[ToolSpec]
) -> dict[str, Any]:
    system_parts = [m.content for m in messages if m.role == "system" and m.content]
    contents = []
    for m in messages:
        if m.role == "system":
            continue
        role = "model" if m.role == "assistant" else "user"
        parts: list[dict[str, Any]] = []
        if m.role == "tool":
            parts.append(
                {"functionResponse": {"name": m.tool_call_id, "response": {"content": m.content}}}
            )
        else:
            if m.content:
                parts.append({"text": m.content})
            for c in m.tool_calls:
                parts.append({"functionCall": {"name": c.name, "args": dict(c.arguments)}})
        contents.append({"role": role, "parts": parts})
    payload: dict[str, Any] = {"contents": contents}
    if system_parts:
        payload["systemInstruction"] = {"parts": [{"text": "\n\n".join(system_parts)}]}
    if tools:
        payload["tools"] = [{"functionDeclarations": [t.schema() for t in tools]}]
    return payload


def parse_gemini_response(doc: Mapping[str, Any]) -> Message:
    try:
        candidate = doc["candidates"][0]
        parts = candidate.get("content", {}).get("parts", [])
    except (KeyError, IndexError) as exc:
        raise ProviderRefusal(f"malformed provider response: {exc}") from exc
    if candidate.get("finishReason") == "SAFETY":
        raise ProviderRefusal("provider refused the request (safety)")
    text_parts: list[str] = []
    calls: list[ToolCall] = []
    for i, part in enumerate(parts):
        if "text" in part:
            text_parts.append(part["text"])
        elif "functionCall" in part:
            fc = part["functionCall"]
            calls.append(ToolCall(fc.get("name", ""), fc.get("args", {}), f"call_{i}"))
    return Message.assistant("".join(text_parts), tuple(calls))


class _HttpProviderBase:
    def __init__(self, config: ProviderConfig):
        config.check()
        self.config = config

    def _credentials(self) -> str:
        # Read lazily so missing credentials only fail at first live use.
        token = os.environ.get(self.config.credentials_env, "")
        if not token:
            raise GatewayError(
                f"credentials env var {self.config.credentials_env!r} is not set"
            )
        return token

    def _post(self, url: str, payload: dict, headers: dict) -> Mapping[str, Any]:
        import httpx

        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            try:
                response = httpx.post(
                    url, json=payload, headers=headers, timeout=self.config.timeout
                )
            except httpx.TimeoutException as exc:
                last_error = exc
                logger.warning("provider timeout (attempt %d): %s", attempt + 1, exc)
                time.sleep(min(2.0**attempt * 0.2, 2.0))
                continue
            if response.status_code in (408, 429, 500, 502, 503, 504):
                last_error = GatewayError(f"provider HTTP {response.status_code}")
                time.sleep(min(2.0**attempt * 0.2, 2.0))
                continue
            if response.status_code >= 400:
                raise ProviderRefusal(
                    f"provider HTTP {response.status_code}: {response.text[:200]}"
                )
            return response.json()
        raise ProviderTimeout(f"provider unreachable after retries: {last_error}")


class OpenAICompatibleProvider(_HttpProviderBase):
    def chat(self, messages: Sequence[Message], tools: Sequence[ToolSpec]) -> Message:
        payload = to_openai_request(messages, tools, self.config.model)
        url = self.config.endpoint.rstrip("/") + "/chat/completions"
        headers = {"Authorization": f"Bearer {self._credentials()}"}
        return parse_openai_response(self._post(url, payload, headers))


class GeminiCompatibleProvider(_HttpProviderBase):
    def chat(self, messages: Sequence[Message], tools: Sequence[ToolSpec]) -> Message:
        payload = to_gemini_request(messages, tools)
        url = (
            self.config.endpoint.rstrip("/")
            + f"/models/{self.config.model}:generateContent"
        )
        headers = {"x-goog-api-key": self._credentials()}
        return parse_gemini_response(self._post(url, payload, headers))


def build_provider(config: ProviderConfig) -> ChatProvider:
    if config.kind is ProviderKind.SCRIPTED:
        config.check()
        return ScriptedProvider.from_file(config.script_path)
    if config.kind is ProviderKind.OPENAI:
        return OpenAICompatibleProvider(config)
    if config.kind is ProviderKind.GEMINI:
        return GeminiCompatibleProvider(config)
    raise GatewayError(f"unknown provider kind {config.kind!r}")


# --- embedders ---------------------------------------------------------------


def fnv1a64(data: bytes, seed: int = EMBED_SEED) -> int:
    """FNV-1a over the seed bytes followed by the payload; 64-bit."""
    h = _FNV_OFFSET
    for b in seed.to_bytes(8, "little") + data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


class HashedBagEmbedder:
    """Deterministic hashed bag-of-words embedding.

    Tokens are FNV-hashed into a fixed number of buckets with a fixed seed and
    counted, then the vector is L2-normalized. Reproducible across runs and
    platforms (integer hashing only); built for determinism, not semantics.
    """

    def __init__(self, dim: int = EMBED_DIM, seed: int = EMBED_SEED):
        self.dim = dim
        self.seed = seed

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        if not texts:
            raise EmbedderUnavailable("embed requires at least one text")
        out = []
        for text in texts:
            vec = np.zeros(self.dim, dtype=np.float64)
            for token in tokenize(text):
                vec[fnv1a64(token.encode("utf-8"), self.seed) % self.dim] += 1.0
            norm = float(np.sqrt(np.sum(vec * vec)))
            if norm > 0.0:
                vec /= norm
            out.append(vec.astype(np.float32))
        return out


class OpenAICompatibleEmbedder(_HttpProviderBase):
    """Embeddings through an OpenAI-compatible ``/embeddings`` endpoint."""

    def __init__(self, config: ProviderConfig, dim: int | None = None):
        super().__init__(config)
        self.dim = dim

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        if not texts:
            raise EmbedderUnavailable("embed requires at least one text")
        url = self.config.endpoint.rstrip("/") + "/embeddings"
        headers = {"Authorization": f"Bearer {self._credentials()}"}
        doc = self._post(url, {"model": self.config.model, "input": list(texts)}, headers)
        try:
            rows = sorted(doc["data"], key=lambda r: r["index"])
            vectors = [np.asarray(r["embedding"], dtype=np.float64) for r in rows]
        except (KeyError, TypeError) as exc:
            raise EmbedderUnavailable(f"malformed embedding response: {exc}") from exc
        out = []
        for vec in vectors:
            norm = float(np.linalg.norm(vec))
            out.append((vec / norm if norm > 0 else vec).astype(np.float32))
        if self.dim is None and out:
            self.dim = len(out[0])
        return out


def build_embedder(config: ProviderConfig | None):
    """Deterministic embedder unless an HTTP embedding provider is configured."""
    if config is None or config.kind is ProviderKind.SCRIPTED:
        return HashedBagEmbedder()
    return OpenAICompatibleEmbedder(config)

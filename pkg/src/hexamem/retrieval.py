"""The three retrieval methods, active retrieval, and the coarse digest.

BM25 uses per-component corpus statistics (components differ wildly in
document length profiles) with k1=1.2, b=0.75 and the nonnegative
log(1 + (N - df + 0.5) / (df + 0.5)) idf. All rankings are deterministic:
ties break on ascending entry id, never randomly.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

import numpy as np

from . import model
from .errors import EmbedderUnavailable, EmptyQuery, RetrievalError
from .model import SCORED_COMPONENTS, ComponentId, CoreLabel
from .store import Store
from .text import snippet, tokenize

BM25_K1 = 1.2
BM25_B = 0.75

DEFAULT_K = 10
COARSE_TOP = 5

TOPIC_MAX_LEN = 256


class RetrievalMethod(str, Enum):
    BM25 = "bm25_match"
    EMBEDDING = "embedding_match"
    STRING = "string_match"


@dataclass(frozen=True)
class ScoredHit:
    component: ComponentId
    entry_id: str
    score: float
    method: RetrievalMethod
    snippet: str


@dataclass(frozen=True)
class Topic:
    """Short query-like phrase inferred from conversational context."""

    text: str

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ValueError("topic must be non-empty")
        if len(self.text) > TOPIC_MAX_LEN:
            raise ValueError(f"topic exceeds {TOPIC_MAX_LEN} characters")


@dataclass(frozen=True)
class TaggedContext:
    """Retrieved memory text grouped per component, renderable as tagged blocks."""

    blocks: Mapping[ComponentId, tuple[tuple[str, str], ...]]  # id, text pairs
    core_text: str = ""

    def render(self) -> str:
        chunks: list[str] = []
        for component in SCORED_COMPONENTS:
            pairs = self.blocks.get(component, ())
            if not pairs:
                continue
            tag = f"{component.value}_memory"
            body = "\n\n".join(text for _, text in pairs)
            chunks.append(f"<{tag}>\n{body}\n</{tag}>")
        if self.core_text:
            chunks.append(f"<core_memory>\n{self.core_text}\n</core_memory>")
        return "\n".join(chunks)

    def sources(self) -> tuple[tuple[ComponentId, str], ...]:
        out: list[tuple[ComponentId, str]] = []
        for component in SCORED_COMPONENTS:
            for entry_id, _ in self.blocks.get(component, ()):
                out.append((component, entry_id))
        return tuple(out)

    def merged(self, other: "TaggedContext") -> "TaggedContext":
        blocks: dict[ComponentId, tuple[tuple[str, str], ...]] = dict(self.blocks)
        for component, pairs in other.blocks.items():
            seen = {entry_id for entry_id, _ in blocks.get(component, ())}
            extra = tuple(p for p in pairs if p[0] not in seen)
            blocks[component] = blocks.get(component, ()) + extra
        return TaggedContext(blocks=blocks, core_text=self.core_text or other.core_text)


_TAG_RE = re.compile(r"</?([a-z_]+)_memory>")
_VALID_TAGS = {c.value for c in ComponentId}


def parse_tagged(text: str) -> dict[str, str]:
    """Parse a rendered TaggedContext back into {component: body}.

    Raises :class:`RetrievalError` on unknown, unbalanced, or nested tags.
    """
    out: dict[str, str] = {}
    open_tag: str | None = None
    open_end = 0
    for match in _TAG_RE.finditer(text):
        name = match.group(1)
        if name not in _VALID_TAGS:
            raise RetrievalError(f"unknown source tag {match.group(0)}")
        closing = match.group(0).startswith("</")
        if closing:
            if open_tag != name:
                raise RetrievalError(f"unbalanced closing tag {match.group(0)}")
            out[name] = text[open_end : match.start()].strip("\n")
            open_tag = None
        else:
            if open_tag is not None:
                raise RetrievalError(f"nested tag {match.group(0)} inside {open_tag}")
            if name in out:
                raise RetrievalError(f"repeated tag {match.group(0)}")
            open_tag = name
            open_end = match.end()
    if open_tag is not None:
        raise RetrievalError(f"unclosed tag <{open_tag}_memory>")
    return out


@dataclass(frozen=True)
class CoarseSection:
    count: int
    items: tuple[tuple[str, str], ...]  # (entry_id, summary)


@dataclass(frozen=True)
class CoarseDigest:
    """Summary-only cross-component view: counts plus top hit summaries."""

    sections: Mapping[ComponentId, CoarseSection]

    def render(self) -> str:
        lines: list[str] = []
        for component in ComponentId:
            section = self.sections[component]
            lines.append(f"[{component.value}] {section.count} entries")
            for entry_id, summary in section.items:
                lines.append(f"  - ({entry_id}) {summary}")
        return "\n".join(lines)


def bm25_idf(n_docs: int, df: int) -> float:
    return math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))


def bm25_term(tf: int, doc_len: int, avgdl: float, k1: float = BM25_K1, b: float = BM25_B) -> float:
    if avgdl <= 0.0:
        return 0.0
    return tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * doc_len / avgdl))


class Retriever:
    """Read-only search over a store snapshot; safe to call during writes."""

    def __init__(self, store: Store, embedder=None, default_k: int = DEFAULT_K):
        self.store = store
        self.embedder = embedder if embedder is not None else store.embedder
        self.default_k = default_k

    # -- the three methods ----------------------------------------------------

    def bm25_match(self, component: ComponentId, query: str, k: int) -> list[ScoredHit]:
        terms = tokenize(query)
        if not terms:
            raise EmptyQuery("query has no searchable tokens")
        n_docs, avgdl = self.store.corpus_stats(component)
        if n_docs == 0:
            return []
        postings = {t: self.store.postings_for(component, t) for t in set(terms)}
        scores: dict[str, float] = {}
        doc_lens: dict[str, int] = {}
        for term in terms:
            rows = postings[term]
            if not rows:
                continue
            idf = bm25_idf(n_docs, len(rows))
            for entry_id, tf, doc_len in rows:
                doc_lens[entry_id] = doc_len
                scores[entry_id] = scores.get(entry_id, 0.0) + idf * bm25_term(
                    tf, doc_len, avgdl
                )
        ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
        return [
            ScoredHit(
                component=component,
                entry_id=entry_id,
                score=score,
                method=RetrievalMethod.BM25,
                snippet=snippet(self.store.get_text(entry_id)),
            )
            for entry_id, score in ranked
        ]

    def embedding_match(self, component: ComponentId, query: str, k: int) -> list[ScoredHit]:
        if self.embedder is None:
            raise EmbedderUnavailable("no embedder configured")
        ids, matrix = self.store.embeddings(component)
        if not ids:
            return []
        qv = np.asarray(self.embedder.embed([query])[0], dtype=np.float64)
        rows = matrix.astype(np.float64)
        qn = float(np.linalg.norm(qv))
        norms = np.linalg.norm(rows, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            cosines = rows @ qv / (norms * qn)
        cosines = np.nan_to_num(cosines, nan=0.0)
        ranked = sorted(zip(ids, cosines.tolist()), key=lambda kv: (-kv[1], kv[0]))[:k]
        return [
            ScoredHit(
                component=component,
                entry_id=entry_id,
                score=score,
                method=RetrievalMethod.EMBEDDING,
                snippet=snippet(self.store.get_text(entry_id)),
            )
            for entry_id, score in ranked
        ]

    def string_match(self, component: ComponentId, query: str, k: int) -> list[ScoredHit]:
        if not query:
            raise EmptyQuery("query must be non-empty")
        needle = query.lower()
        hits: list[tuple[str, int, str]] = []
        for entry_id, text in self.store.texts(component):
            count = text.lower().count(needle)
            if count > 0:
                hits.append((entry_id, count, text))
        hits.sort(key=lambda h: (-h[1], h[0]))
        return [
            ScoredHit(
                component=component,
                entry_id=entry_id,
                score=float(count),
                method=RetrievalMethod.STRING,
                snippet=snippet(text),
            )
            for entry_id, count, text in hits[:k]
        ]

    def search(
        self, component: ComponentId, method: RetrievalMethod, query: str, k: int | None = None
    ) -> list[ScoredHit]:
        k = k or self.default_k
        if method is RetrievalMethod.BM25:
            return self.bm25_match(component, query, k)
        if method is RetrievalMethod.EMBEDDING:
            return self.embedding_match(component, query, k)
        if method is RetrievalMethod.STRING:
            return self.string_match(component, query, k)
        raise RetrievalError(f"unknown retrieval method {method!r}")

    # -- composed surfaces -------------------------------------------------------

    def _default_search(self, component: ComponentId, query: str, k: int) -> list[ScoredHit]:
        """BM25 first; fall back to substring match when the index yields nothing."""
        try:
            hits = self.bm25_match(component, query, k)
        except EmptyQuery:
            hits = []
        if hits:
            return hits
        try:
            return self.string_match(component, query, k)
        except EmptyQuery:
            return []

    def active_retrieve(self, topic: Topic | str, k: int = DEFAULT_K) -> TaggedContext:
        """Per-component top-k for the topic, plus core blocks injected in full."""
        if isinstance(topic, str):
            try:
                topic = Topic(topic)
            except ValueError:
                return TaggedContext(blocks={}, core_text=self._core_text())
        blocks: dict[ComponentId, tuple[tuple[str, str], ...]] = {}
        for component in SCORED_COMPONENTS:
            hits = self._default_search(component, topic.text, k)
            if hits:
                blocks[component] = tuple(
                    (h.entry_id, self.store.get_text(h.entry_id)) for h in hits
                )
        return TaggedContext(blocks=blocks, core_text=self._core_text())

    def _core_text(self) -> str:
        parts = []
        for label in CoreLabel:
            block = self.store.get_core_block(label)
            if block is not None:
                parts.append(f"{label.value}:\n{block.value}")
        return "\n\n".join(parts)

    def coarse_search(self, query: str, per_component: int = COARSE_TOP) -> CoarseDigest:
        """Summary-only digest across all six components.

        Counts always mirror the store's stats; hit summaries never include
        details, content, or secret values.
        """
        counts = self.store.counts()
        sections: dict[ComponentId, CoarseSection] = {}
        for component in ComponentId:
            items: tuple[tuple[str, str], ...] = ()
            if component in SCORED_COMPONENTS and query.strip():
                hits = self._default_search(component, query, per_component)
                items = tuple(
                    (h.entry_id, model.summary_of(self.store.get(component, h.entry_id)))
                    for h in hits
                )
            sections[component] = CoarseSection(
                count=counts[component.value], items=items
            )
        return CoarseDigest(sections=sections)

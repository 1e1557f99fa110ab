"""Independent reference implementations used as test oracles.

These deliberately avoid the package's index/store machinery: BM25 is scored
brute-force from raw document texts, cosine ranking is a plain scan over
exported vectors, and the embedding oracle re-derives hashed bag-of-words
vectors from scratch. They share only the *documented* contracts (token rule,
formula constants), never code paths.
"""

from __future__ import annotations

import math
import re

K1 = 1.2
B = 0.75

_WORD = re.compile(r"\w+", re.UNICODE)


def ref_tokenize(text: str) -> list[str]:
    return [w.lower() for w in _WORD.findall(text)]


def ref_bm25_scores(docs: list[str], query: str) -> list[float]:
    """Brute-force BM25 (k1=1.2, b=0.75) over raw texts; one score per doc.

    idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)), summed over query token
    occurrences.
    """
    tokenized = [ref_tokenize(d) for d in docs]
    n = len(tokenized)
    if n == 0:
        return []
    avgdl = sum(len(d) for d in tokenized) / n
    q_tokens = ref_tokenize(query)
    scores = []
    for doc in tokenized:
        dl = len(doc)
        score = 0.0
        for token in q_tokens:
            tf = doc.count(token)
            if tf == 0:
                continue
            df = sum(1 for other in tokenized if token in other)
            idf = math.log(1.0 + (n - df + 0.5) / (df + 0.5))
            score += idf * tf * (K1 + 1.0) / (tf + K1 * (1.0 - B + B * dl / avgdl))
        scores.append(score)
    return scores


def ref_bm25_ranking(ids: list[str], docs: list[str], query: str, k: int) -> list[str]:
    scores = ref_bm25_scores(docs, query)
    hits = [(i, s) for i, s in zip(ids, scores) if s > 0.0]
    hits.sort(key=lambda pair: (-pair[1], pair[0]))
    return [i for i, _ in hits[:k]]


def ref_cosine(u, v) -> float:
    # plain python floats: exported vectors are scanned at full precision
    u = [float(x) for x in u]
    v = [float(x) for x in v]
    dot = math.fsum(a * b for a, b in zip(u, v))
    nu = math.sqrt(math.fsum(a * a for a in u))
    nv = math.sqrt(math.fsum(b * b for b in v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return dot / (nu * nv)


def ref_cosine_ranking(ids: list[str], vectors, query_vec, k: int) -> list[str]:
    scored = [(i, ref_cosine(v, query_vec)) for i, v in zip(ids, vectors)]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return [i for i, _ in scored[:k]]


# --- hashed bag-of-words oracle -------------------------------------------

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def ref_fnv1a(data: bytes, seed: int) -> int:
    h = _FNV_OFFSET
    for byte in seed.to_bytes(8, "little"):
        h = ((h ^ byte) * _FNV_PRIME) % (1 << 64)
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) % (1 << 64)
    return h


def ref_embed(text: str, dim: int, seed: int) -> list[float]:
    counts = [0.0] * dim
    for token in ref_tokenize(text):
        counts[ref_fnv1a(token.encode("utf-8"), seed) % dim] += 1.0
    norm = math.sqrt(math.fsum(c * c for c in counts))
    if norm == 0.0:
        return counts
    return [c / norm for c in counts]

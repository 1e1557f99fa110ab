"""Tokenization and text normalization used by indexing, dedup, and retrieval."""

from __future__ import annotations

import hashlib
import re

# Unicode-aware word segmentation, lowercased, no stemming. This single rule
# defines the searchable token surface for the full-text index and BM25.
_TOKEN_RE = re.compile(r"\w+", re.UNICODE)

SNIPPET_LEN = 200


def tokenize(text: str) -> list[str]:
    return [t.lower() for t in _TOKEN_RE.findall(text)]


def normalize_ws(text: str) -> str:
    """Lowercase and collapse all whitespace runs to single spaces."""
    return " ".join(text.lower().split())


def fingerprint(text: str) -> str:
    """Dedup fingerprint: hash of the whitespace-normalized lowercased text."""
    return hashlib.sha256(normalize_ws(text).encode("utf-8")).hexdigest()


def snippet(text: str, length: int = SNIPPET_LEN) -> str:
    return text[:length]

"""Single-file embedded persistence for all six memory components.

One sqlite file holds the entry rows, the full-text postings, and the
embedding vectors, so the storage-footprint metric is a single file size.
Row, postings, and vector writes happen in one transaction: a crash between
them can never leave a searchable-but-missing or present-but-unsearchable
entry after recovery.
"""

from __future__ import annotations

import logging
import os
import sqlite3
import threading
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, Callable, Iterable, Mapping

import numpy as np

from . import model
from .errors import (
    CorruptStore,
    DuplicateEntry,
    InvalidEntry,
    InvalidPatch,
    NotFound,
    StorageFull,
    StoreOpenFailure,
)
from .model import ComponentId, CoreBlock, CoreLabel, MemoryEntry
from .text import fingerprint, tokenize

logger = logging.getLogger(__name__)

_SCHEMA = """
CREATE TABLE IF NOT EXISTS meta (
    key   TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS entries (
    seq         INTEGER PRIMARY KEY AUTOINCREMENT,
    id          TEXT NOT NULL UNIQUE,
    component   TEXT NOT NULL,
    doc         TEXT NOT NULL,
    text        TEXT NOT NULL,
    fingerprint TEXT NOT NULL,
    doc_len     INTEGER NOT NULL,
    restricted  INTEGER NOT NULL DEFAULT 0,
    embedding   BLOB,
    created_at  TEXT NOT NULL,
    updated_at  TEXT NOT NULL
);
CREATE UNIQUE INDEX IF NOT EXISTS ux_entries_component_fp
    ON entries(component, fingerprint);
CREATE INDEX IF NOT EXISTS ix_entries_component ON entries(component);
CREATE TABLE IF NOT EXISTS postings (
    token     TEXT NOT NULL,
    seq       INTEGER NOT NULL,
    component TEXT NOT NULL,
    tf        INTEGER NOT NULL,
    PRIMARY KEY (token, seq)
);
CREATE INDEX IF NOT EXISTS ix_postings_seq ON postings(seq);
CREATE TABLE IF NOT EXISTS audit_log (
    seq        INTEGER PRIMARY KEY AUTOINCREMENT,
    kind       TEXT NOT NULL,
    payload    TEXT NOT NULL,
    created_at TEXT NOT NULL
);
"""

#: Redaction marker used in exports that omit vault secrets.
REDACTED = "[REDACTED]"

EXPORT_FORMAT = "hexamem.memory/1"


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(frozen=True)
class StoreStats:
    file_size: int
    counts: dict[str, int]
    index_sizes: dict[str, int]


class Store:
    """Handle on one backing file; safe to share across threads.

    All reads and writes go through one connection guarded by a re-entrant
    lock: readers always observe a committed snapshot, writers are serialized.
    ``fault_hook`` is a crash-injection seam for durability tests; when set it
    is invoked with a stage name at fixed points inside the insert transaction.
    """

    _STAGES = ("pre_row", "post_row", "post_index", "post_commit")

    def __init__(
        self,
        path: str,
        embedder=None,
        mode: str = "read_write",
        audit_enabled: bool = False,
        clock: Callable[[], datetime] = _utcnow,
    ):
        self.path = path
        self.mode = mode
        self.embedder = embedder
        self.audit_enabled = audit_enabled
        self.clock = clock
        self.fault_hook: Callable[[str], None] | None = None
        self._lock = threading.RLock()
        try:
            if mode == "read_only":
                uri = f"file:{path}?mode=ro"
                self._conn = sqlite3.connect(uri, uri=True, check_same_thread=False)
            else:
                self._conn = sqlite3.connect(path, check_same_thread=False)
        except sqlite3.Error as exc:
            raise StoreOpenFailure(f"cannot open store at {path}: {exc}") from exc
        self._conn.isolation_level = None  # explicit BEGIN/COMMIT
        try:
            if mode != "read_only":
                self._conn.executescript(_SCHEMA)
            row = self._conn.execute("PRAGMA quick_check").fetchone()
            if row and row[0] != "ok":
                raise CorruptStore(f"integrity check failed: {row[0]}")
        except sqlite3.DatabaseError as exc:
            raise CorruptStore(f"backing file is not a valid store: {exc}") from exc
        if embedder is not None and mode != "read_only":
            self._pin_embedding_dim(getattr(embedder, "dim", None))

    # -- lifecycle ---------------------------------------------------------

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    def __enter__(self) -> "Store":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _pin_embedding_dim(self, dim: int | None) -> None:
        if dim is None:
            return
        with self._lock:
            row = self._conn.execute(
                "SELECT value FROM meta WHERE key='embedding_dim'"
            ).fetchone()
            if row is None:
                self._conn.execute(
                    "INSERT INTO meta(key, value) VALUES('embedding_dim', ?)", (str(dim),)
                )
            elif int(row[0]) != dim:
                raise StoreOpenFailure(
                    f"store was created with embedding dim {row[0]}, embedder has {dim}"
                )

    def _hook(self, stage: str) -> None:
        if self.fault_hook is not None:
            self.fault_hook(stage)

    # -- derived row data ----------------------------------------------------

    def _row_parts(self, entry: MemoryEntry):
        text = model.canonical_text(entry)
        tf = Counter(tokenize(text))
        restricted = int(
            isinstance(entry, model.VaultEntry)
            and entry.sensitivity is model.Sensitivity.HIGH
        )
        blob = None
        if self.embedder is not None and not restricted:
            vec = self.embedder.embed([text])[0]
            blob = np.asarray(vec, dtype=np.float32).tobytes()
        return text, fingerprint(text), tf, restricted, blob

    @staticmethod
    def _entry_key(entry: MemoryEntry) -> str:
        if isinstance(entry, CoreBlock):
            return f"core:{entry.label.value}"
        return entry.id

    # -- writes ---------------------------------------------------------------

    def insert(self, component: ComponentId, entry: MemoryEntry) -> str:
        return self._insert_locked(component, entry)

    def insert_many(
        self, component: ComponentId, entries: Iterable[MemoryEntry]
    ) -> list[str]:
        """Insert a batch in a single transaction (bulk loads, imports)."""
        entries = list(entries)
        ids: list[str] = []
        with self._lock:
            self._begin()
            try:
                for entry in entries:
                    ids.append(self._insert_in_txn(component, entry))
                self._commit()
            except BaseException:
                self._rollback()
                raise
        return ids

    def _insert_locked(self, component: ComponentId, entry: MemoryEntry) -> str:
        with self._lock:
            self._begin()
            try:
                self._hook("pre_row")
                entry_id = self._insert_in_txn(component, entry, hooks=True)
                self._hook("post_index")
                self._commit()
            except BaseException:
                self._rollback()
                raise
        self._hook("post_commit")
        return entry_id

    def _insert_in_txn(
        self, component: ComponentId, entry: MemoryEntry, hooks: bool = False
    ) -> str:
        if model.component_of(entry) is not component:
            raise InvalidEntry(
                f"entry type {type(entry).__name__} does not belong to {component.value}"
            )
        report = model.validate(entry)
        if not report.ok:
            raise InvalidEntry("; ".join(report.violations))
        text, fp, tf, restricted, blob = self._row_parts(entry)
        dup = self._conn.execute(
            "SELECT id FROM entries WHERE component=? AND fingerprint=?",
            (component.value, fp),
        ).fetchone()
        if dup:
            raise DuplicateEntry(
                f"duplicate {component.value} entry (existing id {dup[0]})",
                existing_id=dup[0],
            )
        now = self.clock().isoformat()
        entry_id = self._entry_key(entry)
        try:
            cur = self._conn.execute(
                "INSERT INTO entries(id, component, doc, text, fingerprint, doc_len,"
                " restricted, embedding, created_at, updated_at)"
                " VALUES(?,?,?,?,?,?,?,?,?,?)",
                (
                    entry_id,
                    component.value,
                    model.encode_json(entry),
                    text,
                    fp,
                    sum(tf.values()),
                    restricted,
                    blob,
                    now,
                    now,
                ),
            )
        except sqlite3.IntegrityError as exc:
            raise DuplicateEntry(f"duplicate {component.value} entry: {exc}") from exc
        except sqlite3.OperationalError as exc:
            if "full" in str(exc).lower():
                raise StorageFull(str(exc)) from exc
            raise
        seq = cur.lastrowid
        if hooks:
            self._hook("post_row")
        if not restricted:
            self._conn.executemany(
                "INSERT INTO postings(token, seq, component, tf) VALUES(?,?,?,?)",
                [(token, seq, component.value, n) for token, n in sorted(tf.items())],
            )
        return entry_id

    def update(
        self, component: ComponentId, entry_id: str, patch: Mapping[str, Any]
    ) -> MemoryEntry:
        if "id" in patch or "component" in patch:
            raise InvalidPatch("id and component cannot be patched")
        with self._lock:
            current = self.get(component, entry_id)
            patched = model.apply_patch(current, patch)
            text, fp, tf, restricted, blob = self._row_parts(patched)
            self._begin()
            try:
                dup = self._conn.execute(
                    "SELECT id FROM entries WHERE component=? AND fingerprint=? AND id<>?",
                    (component.value, fp, entry_id),
                ).fetchone()
                if dup:
                    raise DuplicateEntry(
                        f"patched entry duplicates {dup[0]}", existing_id=dup[0]
                    )
                seq = self._conn.execute(
                    "SELECT seq FROM entries WHERE id=?", (entry_id,)
                ).fetchone()[0]
                self._conn.execute(
                    "UPDATE entries SET doc=?, text=?, fingerprint=?, doc_len=?,"
                    " restricted=?, embedding=?, updated_at=? WHERE seq=?",
                    (
                        model.encode_json(patched),
                        text,
                        fp,
                        sum(tf.values()),
                        restricted,
                        blob,
                        self.clock().isoformat(),
                        seq,
                    ),
                )
                self._conn.execute("DELETE FROM postings WHERE seq=?", (seq,))
                if not restricted:
                    self._conn.executemany(
                        "INSERT INTO postings(token, seq, component, tf) VALUES(?,?,?,?)",
                        [(t, seq, component.value, n) for t, n in sorted(tf.items())],
                    )
                self._commit()
            except BaseException:
                self._rollback()
                raise
        return patched

    def delete(self, component: ComponentId, entry_id: str) -> None:
        with self._lock:
            self._begin()
            try:
                row = self._conn.execute(
                    "SELECT seq FROM entries WHERE component=? AND id=?",
                    (component.value, entry_id),
                ).fetchone()
                if row is None:
                    raise NotFound(f"no {component.value} entry {entry_id}")
                self._conn.execute("DELETE FROM postings WHERE seq=?", (row[0],))
                self._conn.execute("DELETE FROM entries WHERE seq=?", (row[0],))
                self._commit()
            except BaseException:
                self._rollback()
                raise

    # -- core blocks -----------------------------------------------------------

    def set_core_block(self, block: CoreBlock) -> None:
        """Insert or replace the block for its label (one block per label)."""
        report = model.validate(block)
        if not report.ok:
            raise InvalidEntry("; ".join(report.violations))
        key = self._entry_key(block)
        with self._lock:
            exists = self._conn.execute(
                "SELECT 1 FROM entries WHERE id=?", (key,)
            ).fetchone()
            if exists is None:
                self.insert(ComponentId.CORE, block)
                return
            text, fp, tf, _, blob = self._row_parts(block)
            self._begin()
            try:
                seq = self._conn.execute(
                    "SELECT seq FROM entries WHERE id=?", (key,)
                ).fetchone()[0]
                self._conn.execute(
                    "UPDATE entries SET doc=?, text=?, fingerprint=?, doc_len=?,"
                    " embedding=?, updated_at=? WHERE seq=?",
                    (
                        model.encode_json(block),
                        text,
                        fp,
                        sum(tf.values()),
                        blob,
                        self.clock().isoformat(),
                        seq,
                    ),
                )
                self._conn.execute("DELETE FROM postings WHERE seq=?", (seq,))
                self._conn.executemany(
                    "INSERT INTO postings(token, seq, component, tf) VALUES(?,?,?,?)",
                    [(t, seq, "core", n) for t, n in sorted(tf.items())],
                )
                self._commit()
            except BaseException:
                self._rollback()
                raise

    def get_core_block(self, label: CoreLabel) -> CoreBlock | None:
        try:
            entry = self.get(ComponentId.CORE, f"core:{label.value}")
        except NotFound:
            return None
        return entry  # type: ignore[return-value]

    def core_blocks(self) -> dict[CoreLabel, CoreBlock]:
        out: dict[CoreLabel, CoreBlock] = {}
        for label in CoreLabel:
            block = self.get_core_block(label)
            if block is not None:
                out[label] = block
        return out

    # -- reads -----------------------------------------------------------------

    def get(self, component: ComponentId, entry_id: str) -> MemoryEntry:
        with self._lock:
            row = self._conn.execute(
                "SELECT doc FROM entries WHERE component=? AND id=?",
                (component.value, entry_id),
            ).fetchone()
        if row is None:
            raise NotFound(f"no {component.value} entry {entry_id}")
        return model.decode_json(row[0])

    def list_entries(
        self, component: ComponentId, limit: int | None = None, offset: int = 0
    ) -> list[MemoryEntry]:
        sql = "SELECT doc FROM entries WHERE component=? ORDER BY seq"
        args: list[Any] = [component.value]
        if limit is not None:
            sql += " LIMIT ? OFFSET ?"
            args += [limit, offset]
        with self._lock:
            rows = self._conn.execute(sql, args).fetchall()
        return [model.decode_json(r[0]) for r in rows]

    def count(self, component: ComponentId) -> int:
        with self._lock:
            row = self._conn.execute(
                "SELECT COUNT(*) FROM entries WHERE component=?", (component.value,)
            ).fetchone()
        return int(row[0])

    def counts(self) -> dict[str, int]:
        out = {c.value: 0 for c in ComponentId}
        with self._lock:
            rows = self._conn.execute(
                "SELECT component, COUNT(*) FROM entries GROUP BY component"
            ).fetchall()
        for component, n in rows:
            out[component] = int(n)
        return out

    def find_duplicate(self, component: ComponentId, entry: MemoryEntry) -> str | None:
        """Id of an existing entry with the same dedup fingerprint, if any."""
        text = model.canonical_text(entry)
        with self._lock:
            row = self._conn.execute(
                "SELECT id FROM entries WHERE component=? AND fingerprint=?",
                (component.value, fingerprint(text)),
            ).fetchone()
        return row[0] if row else None

    # -- retrieval support -------------------------------------------------------

    def corpus_stats(self, component: ComponentId) -> tuple[int, float]:
        """(document count, average token length) over searchable rows."""
        with self._lock:
            row = self._conn.execute(
                "SELECT COUNT(*), COALESCE(AVG(doc_len), 0.0) FROM entries"
                " WHERE component=? AND restricted=0",
                (component.value,),
            ).fetchone()
        return int(row[0]), float(row[1])

    def postings_for(
        self, component: ComponentId, token: str
    ) -> list[tuple[str, int, int]]:
        """(entry_id, tf, doc_len) for every searchable row containing token."""
        with self._lock:
            rows = self._conn.execute(
                "SELECT e.id, p.tf, e.doc_len FROM postings p"
                " JOIN entries e ON e.seq = p.seq"
                " WHERE p.token=? AND p.component=? AND e.restricted=0",
                (token, component.value),
            ).fetchall()
        return [(r[0], int(r[1]), int(r[2])) for r in rows]

    def texts(
        self, component: ComponentId, include_restricted: bool = False
    ) -> list[tuple[str, str]]:
        sql = "SELECT id, text FROM entries WHERE component=?"
        if not include_restricted:
            sql += " AND restricted=0"
        with self._lock:
            rows = self._conn.execute(sql + " ORDER BY seq", (component.value,)).fetchall()
        return [(r[0], r[1]) for r in rows]

    def get_text(self, entry_id: str) -> str:
        with self._lock:
            row = self._conn.execute(
                "SELECT text FROM entries WHERE id=?", (entry_id,)
            ).fetchone()
        if row is None:
            raise NotFound(f"no entry {entry_id}")
        return row[0]

    def embeddings(self, component: ComponentId) -> tuple[list[str], np.ndarray]:
        """All searchable embeddings of a component as (ids, row matrix)."""
        with self._lock:
            rows = self._conn.execute(
                "SELECT id, embedding FROM entries"
                " WHERE component=? AND restricted=0 AND embedding IS NOT NULL"
                " ORDER BY seq",
                (component.value,),
            ).fetchall()
        ids = [r[0] for r in rows]
        if not ids:
            return [], np.zeros((0, 0), dtype=np.float32)
        matrix = np.vstack([np.frombuffer(r[1], dtype=np.float32) for r in rows])
        return ids, matrix

    def vault_lookup(
        self, query: str, include_high: bool = False, k: int = 10
    ) -> list[MemoryEntry]:
        """Explicit vault lookup; the only path that can return high-sensitivity
        entries, and only when the access flag is set."""
        needle = query.lower()
        hits: list[tuple[int, str, MemoryEntry]] = []
        with self._lock:
            rows = self._conn.execute(
                "SELECT doc FROM entries WHERE component='vault' ORDER BY seq"
            ).fetchall()
        for (doc,) in rows:
            entry = model.decode_json(doc)
            assert isinstance(entry, model.VaultEntry)
            if entry.sensitivity is model.Sensitivity.HIGH and not include_high:
                continue
            surface = model.canonical_text(entry)
            if include_high:
                surface = surface + "\n" + entry.secret_value
            score = surface.lower().count(needle) if needle else 1
            if score > 0:
                hits.append((score, entry.id, entry))
        hits.sort(key=lambda h: (-h[0], h[1]))
        return [entry for _, _, entry in hits[:k]]

    # -- stats / export / audit ---------------------------------------------------

    def stats(self) -> StoreStats:
        with self._lock:
            fulltext = self._conn.execute(
                "SELECT COALESCE(SUM(LENGTH(token)) + 12 * COUNT(*), 0) FROM postings"
            ).fetchone()[0]
            vectors = self._conn.execute(
                "SELECT COALESCE(SUM(LENGTH(embedding)), 0) FROM entries"
            ).fetchone()[0]
        try:
            file_size = os.stat(self.path).st_size
        except OSError:
            file_size = 0  # in-memory store
        return StoreStats(
            file_size=file_size,
            counts=self.counts(),
            index_sizes={"fulltext": int(fulltext), "vector": int(vectors)},
        )

    def export_doc(self, include_secrets: bool = False) -> dict[str, Any]:
        """Full memory as one canonical JSON document.

        Without the access flag, high-sensitivity secret values are replaced
        by a redaction marker.
        """
        components: dict[str, list[dict[str, Any]]] = {c.value: [] for c in ComponentId}
        with self._lock:
            rows = self._conn.execute(
                "SELECT component, doc FROM entries ORDER BY seq"
            ).fetchall()
        for component, doc in rows:
            entry = model.decode_json(doc)
            encoded = model.encode(entry)
            if (
                isinstance(entry, model.VaultEntry)
                and entry.sensitivity is model.Sensitivity.HIGH
                and not include_secrets
            ):
                encoded["secret_value"] = REDACTED
            components[component].append(encoded)
        return {"format": EXPORT_FORMAT, "components": components}

    def import_doc(self, doc: Mapping[str, Any]) -> dict[str, int]:
        """Load an exported document; duplicate entries are skipped."""
        if doc.get("format") != EXPORT_FORMAT:
            raise InvalidEntry(f"unsupported export format {doc.get('format')!r}")
        imported = {c.value: 0 for c in ComponentId}
        for component_name, entries in doc.get("components", {}).items():
            try:
                component = ComponentId(component_name)
            except ValueError:
                raise InvalidEntry(f"unknown component {component_name!r}")
            for encoded in entries:
                entry = model.decode(encoded)
                try:
                    if component is ComponentId.CORE:
                        self.set_core_block(entry)  # type: ignore[arg-type]
                    else:
                        self.insert(component, entry)
                    imported[component.value] += 1
                except DuplicateEntry:
                    logger.info("import: skipping duplicate %s entry", component.value)
        return imported

    def log_audit(self, kind: str, payload: str) -> None:
        """Optional raw-input audit trail; off by default and excluded from counts."""
        if not self.audit_enabled:
            return
        with self._lock:
            self._begin()
            try:
                self._conn.execute(
                    "INSERT INTO audit_log(kind, payload, created_at) VALUES(?,?,?)",
                    (kind, payload, self.clock().isoformat()),
                )
                self._commit()
            except BaseException:
                self._rollback()
                raise

    # -- coherence -------------------------------------------------------------------

    def integrity_report(self) -> list[str]:
        """Cross-check rows against index postings; empty list means coherent."""
        issues: list[str] = []
        with self._lock:
            rows = self._conn.execute(
                "SELECT seq, id, text, restricted, embedding FROM entries"
            ).fetchall()
            posted: dict[int, dict[str, int]] = {}
            for token, seq, _, tf in self._conn.execute(
                "SELECT token, seq, component, tf FROM postings"
            ).fetchall():
                posted.setdefault(seq, {})[token] = tf
            known_seqs = {r[0] for r in rows}
            for seq in posted:
                if seq not in known_seqs:
                    issues.append(f"postings reference missing entry seq {seq}")
        for seq, entry_id, text, restricted, embedding in rows:
            expected = Counter(tokenize(text))
            actual = posted.get(seq, {})
            if restricted:
                if actual:
                    issues.append(f"restricted entry {entry_id} has postings")
                if embedding is not None:
                    issues.append(f"restricted entry {entry_id} has an embedding")
            elif dict(expected) != actual:
                issues.append(f"entry {entry_id} postings do not match its text")
        return issues

    # -- transaction helpers ------------------------------------------------------------

    def _begin(self) -> None:
        self._conn.execute("BEGIN IMMEDIATE")

    def _commit(self) -> None:
        self._conn.execute("COMMIT")

    def _rollback(self) -> None:
        try:
            if self._conn.in_transaction:
                self._conn.execute("ROLLBACK")
        except sqlite3.Error:
            pass

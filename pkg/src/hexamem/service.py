"""HTTP service exposing the engine; request/response bodies mirror the
canonical JSON encoding so every endpoint is byte-equivalent to the matching
library call."""

from __future__ import annotations

import base64
import logging
from typing import Any, Optional

from fastapi import Depends, FastAPI, Form, Header, HTTPException, Query, Request, UploadFile
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__
from .chat import SEARCH_TOOL, SET_TOPIC_TOOL
from .engine import MemoryEngine
from .errors import (
    DuplicateEntry,
    EmptyQuery,
    EngineError,
    GatewayError,
    InvalidEntry,
    InvalidPatch,
    NotFound,
    SchemaViolation,
    UndecodableImage,
)
from .ingestion import ConversationTurn, load_frame
from .model import ComponentId, SemanticEntry, encode, parse_timestamp
from .orchestrator import MANAGER_TOOLS, ROUTING_TOOL, UpdateAck
from .retrieval import RetrievalMethod, ScoredHit, TaggedContext

logger = logging.getLogger(__name__)

_STATUS = {
    NotFound: 404,
    DuplicateEntry: 409,
    EmptyQuery: 400,
    InvalidEntry: 400,
    InvalidPatch: 400,
    SchemaViolation: 400,
    UndecodableImage: 400,
    GatewayError: 502,
}


class IngestRequest(BaseModel):
    text: str


class FrameRequest(BaseModel):
    image_b64: str = ""
    path: str = ""
    captured_at: str = ""
    text: str = ""


class TurnDoc(BaseModel):
    speaker: str
    timestamp: str
    text: str
    dia_id: str = ""


class ConversationRequest(BaseModel):
    turns: list[TurnDoc]


class ChatRequest(BaseModel):
    conversation_id: str
    message: str


class ActiveRetrieveRequest(BaseModel):
    topic: str
    k: int = Field(default=10, ge=1)


def ack_doc(ack: UpdateAck) -> dict[str, Any]:
    return {
        "cycle_id": ack.cycle_id,
        "status": ack.status,
        "reports": [
            {
                "component": r.component.value,
                "inserted_ids": list(r.inserted_ids),
                "updated_ids": list(r.updated_ids),
                "skipped_duplicates": r.skipped_duplicates,
                "error": r.error,
            }
            for r in ack.reports
        ],
    }


def hit_doc(hit: ScoredHit) -> dict[str, Any]:
    return {
        "component": hit.component.value,
        "entry_id": hit.entry_id,
        "score": hit.score,
        "method": hit.method.value,
        "snippet": hit.snippet,
    }


def context_doc(context: TaggedContext) -> dict[str, Any]:
    return {
        "rendered": context.render(),
        "blocks": {
            component.value: [{"entry_id": i, "text": t} for i, t in pairs]
            for component, pairs in context.blocks.items()
        },
        "core": context.core_text,
    }


def semantic_tree(entries: list[SemanticEntry]) -> dict[str, Any]:
    """Nested category tree from the '/'-delimited name convention."""
    root: dict[str, Any] = {"name": "", "children": {}, "entries": []}
    for entry in entries:
        segments = [s for s in entry.name.split("/") if s]
        node = root
        for segment in segments[:-1]:
            node = node["children"].setdefault(
                segment, {"name": segment, "children": {}, "entries": []}
            )
        leaf_name = segments[-1] if segments else entry.name
        node["entries"].append(
            {"id": entry.id, "name": leaf_name, "summary": entry.summary}
        )

    def finish(node: dict[str, Any]) -> dict[str, Any]:
        return {
            "name": node["name"],
            "entries": sorted(node["entries"], key=lambda e: e["name"]),
            "children": [finish(c) for _, c in sorted(node["children"].items())],
        }

    return finish(root)


def create_app(engine: MemoryEngine) -> FastAPI:
    app = FastAPI(title="hexamem", version=__version__)
    config = engine.config

    async def require_auth(authorization: Optional[str] = Header(default=None)):
        if not config.auth_token:
            return
        if authorization != f"Bearer {config.auth_token}":
            raise HTTPException(status_code=401, detail="missing or bad bearer token")

    guarded = [Depends(require_auth)]

    @app.exception_handler(EngineError)
    async def engine_error_handler(_request: Request, exc: EngineError):
        status = 500
        for klass, code in _STATUS.items():
            if isinstance(exc, klass):
                status = code
                break
        return JSONResponse(
            status_code=status, content={"error": type(exc).__name__, "detail": str(exc)}
        )

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "version": __version__}

    @app.post("/ingest", dependencies=guarded)
    async def ingest(request: IngestRequest):
        return ack_doc(engine.ingest_text(request.text))

    def _frame_outcome(data: bytes, captured_at: str, text: str, source: str):
        when = parse_timestamp(captured_at) if captured_at else None
        frame = load_frame(data, captured_at=when, extracted_text=text, source=source)
        result = engine.ingest_frame(frame)
        return {
            "kept": result.kept,
            "pending": engine.stream.pending_count,
            "kept_total": engine.stream.kept_total,
            "skipped_total": engine.stream.skipped_total,
            "batch_id": result.batch.batch_id if result.batch else None,
            "ack": ack_doc(engine.last_batch_ack) if result.batch else None,
        }

    @app.post("/frames", dependencies=guarded)
    async def frames(request: FrameRequest):
        if request.image_b64:
            data = base64.b64decode(request.image_b64)
        elif request.path:
            with open(request.path, "rb") as fh:
                data = fh.read()
        else:
            raise HTTPException(status_code=400, detail="image_b64 or path required")
        return _frame_outcome(data, request.captured_at, request.text, request.path or "upload")

    @app.post("/frames/upload", dependencies=guarded)
    async def frames_upload(
        image: UploadFile, text: str = Form(default=""), captured_at: str = Form(default="")
    ):
        data = await image.read()
        return _frame_outcome(data, captured_at, text, image.filename or "upload")

    @app.post("/conversations", dependencies=guarded)
    async def conversations(request: ConversationRequest):
        turns = [
            ConversationTurn(
                speaker=t.speaker, timestamp=t.timestamp, text=t.text, dia_id=t.dia_id
            )
            for t in request.turns
        ]
        acks = engine.ingest_conversation(turns)
        return {"acks": [ack_doc(a) for a in acks]}

    @app.post("/chat", dependencies=guarded)
    async def chat(request: ChatRequest):
        turn = engine.chat(request.conversation_id, request.message)
        return {
            "message": turn.content,
            "sources": [
                {"component": c.value, "entry_id": i} for c, i in turn.sources
            ],
        }

    @app.get("/search", dependencies=guarded)
    async def search(
        component: str,
        query: str,
        method: str = "bm25_match",
        k: int = Query(default=10, ge=1),
    ):
        try:
            comp = ComponentId(component)
        except ValueError:
            raise HTTPException(status_code=400, detail=f"unknown component {component!r}")
        try:
            meth = RetrievalMethod(method)
        except ValueError:
            raise HTTPException(status_code=400, detail=f"unknown method {method!r}")
        hits = engine.retriever.search(comp, meth, query, k)
        return {"hits": [hit_doc(h) for h in hits]}

    @app.post("/active_retrieve", dependencies=guarded)
    async def active_retrieve(request: ActiveRetrieveRequest):
        context = engine.retriever.active_retrieve(request.topic, request.k)
        return context_doc(context)

    @app.get("/memory/tree", dependencies=guarded)
    async def memory_tree():
        entries = [
            e
            for e in engine.store.list_entries(ComponentId.SEMANTIC)
            if isinstance(e, SemanticEntry)
        ]
        flat = [
            {
                "id": e.id,
                "segments": [s for s in e.name.split("/") if s],
                "summary": e.summary,
            }
            for e in entries
        ]
        return {"entries": flat, "tree": semantic_tree(entries)}

    @app.get("/memory/{component}", dependencies=guarded)
    async def memory_list(
        component: str,
        limit: int = Query(default=50, ge=1),
        offset: int = Query(default=0, ge=0),
    ):
        try:
            comp = ComponentId(component)
        except ValueError:
            raise HTTPException(status_code=400, detail=f"unknown component {component!r}")
        entries = engine.store.list_entries(comp, limit=limit, offset=offset)
        docs = []
        for entry in entries:
            doc = encode(entry)
            if comp is ComponentId.VAULT and doc.get("sensitivity") == "high":
                doc["secret_value"] = "[REDACTED]"
            docs.append(doc)
        return {"component": comp.value, "count": engine.store.count(comp), "entries": docs}

    @app.get("/memory/{component}/{entry_id}", dependencies=guarded)
    async def memory_get(component: str, entry_id: str):
        try:
            comp = ComponentId(component)
        except ValueError:
            raise HTTPException(status_code=400, detail=f"unknown component {component!r}")
        doc = encode(engine.store.get(comp, entry_id))
        if comp is ComponentId.VAULT and doc.get("sensitivity") == "high":
            doc["secret_value"] = "[REDACTED]"
        return doc

    @app.get("/stats", dependencies=guarded)
    async def stats():
        s = engine.stats()
        return {
            "file_size": s.file_size,
            "counts": s.counts,
            "index_sizes": s.index_sizes,
        }

    @app.get("/export", dependencies=guarded)
    async def export(include_secrets: bool = False):
        return engine.export_doc(include_secrets=include_secrets)

    @app.post("/import", dependencies=guarded)
    async def import_(doc: dict):
        return {"imported": engine.import_doc(doc)}

    @app.get("/tools", dependencies=guarded)
    async def tools():
        specs = (ROUTING_TOOL,) + MANAGER_TOOLS + (SET_TOPIC_TOOL, SEARCH_TOOL)
        return {"tools": [t.schema() for t in specs]}

    if config.webui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=config.webui_dir, html=True), name="ui")

    return app

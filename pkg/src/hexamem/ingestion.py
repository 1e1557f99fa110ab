"""Input adapters: screenshot stream with similarity dedup, and transcripts.

Capture cadence lives in the UI or daemon layer; the engine only sees frames,
which keeps this module clock-free. A frame too similar to the last kept one
is skipped, and every batch of kept frames triggers one memory update cycle.
"""

from __future__ import annotations

import io
import logging
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Iterable, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import UndecodableImage
from .orchestrator import UpdateAck

logger = logging.getLogger(__name__)

SIGNATURE_SIZE = 64  # frames are compared on a 64x64 grayscale downsample
DEFAULT_BATCH_SIZE = 20
DEFAULT_SIMILARITY_THRESHOLD = 0.99


@dataclass
class Frame:
    captured_at: datetime
    signature: np.ndarray = field(repr=False)
    extracted_text: str = ""
    source: str = ""
    byte_size: int = 0


@dataclass(frozen=True)
class Batch:
    batch_id: str
    frames: tuple[Frame, ...]


@dataclass(frozen=True)
class AcceptResult:
    kept: bool
    batch: Batch | None = None


def signature_from_image(image: Image.Image) -> np.ndarray:
    gray = image.convert("L").resize((SIGNATURE_SIZE, SIGNATURE_SIZE))
    return np.asarray(gray, dtype=np.float64).ravel()


def load_frame(
    data: bytes,
    captured_at: datetime | None = None,
    extracted_text: str = "",
    source: str = "",
) -> Frame:
    """Decode image bytes into a frame; the signature is deterministic for
    identical bytes."""
    try:
        image = Image.open(io.BytesIO(data))
        image.load()
    except (UnidentifiedImageError, OSError) as exc:
        raise UndecodableImage(f"cannot decode frame: {exc}") from exc
    return Frame(
        captured_at=captured_at or datetime.now(timezone.utc),
        signature=signature_from_image(image),
        extracted_text=extracted_text,
        source=source,
        byte_size=len(data),
    )


def frame_similarity(a: Frame, b: Frame) -> float:
    """Normalized correlation of the two downsampled signatures.

    Byte-identical frames always score exactly 1.0; constant images (zero
    variance) compare by mean equality.
    """
    sa, sb = a.signature, b.signature
    if sa.shape == sb.shape and np.array_equal(sa, sb):
        return 1.0
    da = sa - sa.mean()
    db = sb - sb.mean()
    na = float(np.sqrt(np.sum(da * da)))
    nb = float(np.sqrt(np.sum(db * db)))
    if na == 0.0 or nb == 0.0:
        if na == 0.0 and nb == 0.0:
            return 1.0 if sa.mean() == sb.mean() else 0.0
        return 0.0
    return float(np.dot(da, db) / (na * nb))


class ScreenshotStream:
    """Per-source stream state: dedup against the last kept frame, batch at N.

    The upload hook fires per kept frame immediately (streaming), not at batch
    emission. Calls for one source are serialized; use one stream per source.
    """

    def __init__(
        self,
        batch_size: int = DEFAULT_BATCH_SIZE,
        similarity_threshold: float = DEFAULT_SIMILARITY_THRESHOLD,
        upload_hook: Callable[[Frame], None] | None = None,
        on_batch: Callable[[Batch], None] | None = None,
    ):
        self.batch_size = batch_size
        self.similarity_threshold = similarity_threshold
        self.upload_hook = upload_hook
        self.on_batch = on_batch
        self.kept_total = 0
        self.skipped_total = 0
        self._pending: list[Frame] = []
        self._last_kept: Frame | None = None
        self._lock = threading.Lock()

    @property
    def pending_count(self) -> int:
        return len(self._pending)

    def accept_frame(self, frame: Frame) -> AcceptResult:
        with self._lock:
            if self._last_kept is not None:
                similarity = frame_similarity(frame, self._last_kept)
                if similarity > self.similarity_threshold:
                    self.skipped_total += 1
                    return AcceptResult(kept=False)
            self._pending.append(frame)
            self._last_kept = frame
            self.kept_total += 1
            if self.upload_hook is not None:
                try:
                    self.upload_hook(frame)
                except Exception:  # hook failures must not stall capture
                    logger.exception("upload hook failed; continuing")
            batch: Batch | None = None
            if len(self._pending) >= self.batch_size:
                batch = Batch(batch_id=uuid.uuid4().hex, frames=tuple(self._pending))
                self._pending = []
        if batch is not None and self.on_batch is not None:
            self.on_batch(batch)
        return AcceptResult(kept=True, batch=batch)


def render_batch_text(batch: Batch) -> str:
    """Flatten a batch's extracted screen content for the update workflow."""
    lines = []
    for frame in batch.frames:
        stamp = frame.captured_at.astimezone(timezone.utc).strftime("%Y-%m-%d %H:%M")
        text = frame.extracted_text.strip() or "(no extracted text)"
        lines.append(f"[{stamp}] {text}")
    return "screen activity batch:\n" + "\n".join(lines)


@dataclass(frozen=True)
class ConversationTurn:
    speaker: str
    timestamp: str
    text: str
    dia_id: str = ""


def render_turns(turns: Sequence[ConversationTurn]) -> str:
    return "\n".join(f"[{t.timestamp}] {t.speaker}: {t.text}" for t in turns)


def ingest_conversation(
    turns: Iterable[ConversationTurn],
    update_cycle: Callable[[str], UpdateAck],
    chunk_turns: int = 10,
) -> list[UpdateAck]:
    """Feed a transcript through the update workflow in capture order.

    Turns are grouped into fixed-size chunks (a chunk boundary never splits a
    turn) and each chunk runs one update cycle.
    """
    turns = list(turns)
    acks: list[UpdateAck] = []
    for start in range(0, len(turns), chunk_turns):
        chunk = turns[start : start + chunk_turns]
        acks.append(update_cycle(render_turns(chunk)))
    return acks

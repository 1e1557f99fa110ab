from __future__ import annotations

import io

import numpy as np
import pytest
from PIL import Image

from hexamem.errors import UndecodableImage
from hexamem.ingestion import (
    Batch,
    ConversationTurn,
    Frame,
    ScreenshotStream,
    frame_similarity,
    ingest_conversation,
    load_frame,
    render_batch_text,
    render_turns,
)
from hexamem.orchestrator import UpdateAck


def png_bytes(seed: int, size=(48, 48)) -> bytes:
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, size=(size[1], size[0], 3), dtype=np.uint8)
    image = Image.fromarray(pixels, "RGB")
    buffer = io.BytesIO()
    image.save(buffer, format="PNG")
    return buffer.getvalue()


def make_frame(seed: int, text: str = "") -> Frame:
    return load_frame(png_bytes(seed), extracted_text=text or f"screen {seed}")


def test_identical_bytes_similarity_exactly_one():
    a = load_frame(png_bytes(7))
    b = load_frame(png_bytes(7))
    assert frame_similarity(a, b) == 1.0
    assert frame_similarity(a, a) == 1.0


def test_distinct_noise_frames_dissimilar():
    a, b = make_frame(1), make_frame(2)
    assert frame_similarity(a, b) < 0.5


def test_constant_images_compare_by_mean():
    white1 = load_frame(_solid_png(255))
    white2 = load_frame(_solid_png(255))
    black = load_frame(_solid_png(0))
    assert frame_similarity(white1, white2) == 1.0
    assert frame_similarity(white1, black) == 0.0


def _solid_png(level: int) -> bytes:
    image = Image.new("L", (32, 32), color=level)
    buffer = io.BytesIO()
    image.save(buffer, format="PNG")
    return buffer.getvalue()


def test_undecodable_bytes_rejected():
    with pytest.raises(UndecodableImage):
        load_frame(b"definitely not an image")


def test_duplicate_consecutive_frame_skipped():
    stream = ScreenshotStream(batch_size=20)
    first = make_frame(3)
    dup = load_frame(png_bytes(3))
    assert stream.accept_frame(first).kept
    result = stream.accept_frame(dup)
    assert not result.kept
    assert stream.skipped_total == 1 and stream.kept_total == 1


def test_twenty_distinct_frames_one_batch_and_reset():
    batches: list[Batch] = []
    stream = ScreenshotStream(batch_size=20, on_batch=batches.append)
    for i in range(20):
        result = stream.accept_frame(make_frame(100 + i))
    assert len(batches) == 1
    assert result.batch is batches[0]
    assert len(batches[0].frames) == 20
    assert stream.pending_count == 0  # counter reset


def test_batch_membership_excludes_skipped_frames():
    stream = ScreenshotStream(batch_size=20)
    kept_frames = []
    batch = None
    for i in range(19):
        frame = make_frame(200 + i)
        stream.accept_frame(frame)
        kept_frames.append(frame)
        if i % 4 == 0:  # sprinkle duplicates of the frame just kept
            assert not stream.accept_frame(load_frame(png_bytes(200 + i))).kept
    final = make_frame(999)
    result = stream.accept_frame(final)
    kept_frames.append(final)
    batch = result.batch
    assert batch is not None and len(batch.frames) == 20
    assert [f.extracted_text for f in batch.frames] == [f.extracted_text for f in kept_frames]
    assert stream.skipped_total == 5


def test_upload_hook_fires_per_kept_frame_immediately():
    uploaded = []
    stream = ScreenshotStream(batch_size=20, upload_hook=uploaded.append)
    kept = make_frame(1)
    stream.accept_frame(kept)
    assert uploaded == [kept]  # before any batch
    stream.accept_frame(load_frame(png_bytes(1)))  # skipped: no upload
    assert len(uploaded) == 1


def test_pairwise_consecutive_similarity_within_batch_below_threshold():
    stream = ScreenshotStream(batch_size=10)
    batch = None
    i = 0
    while batch is None:
        result = stream.accept_frame(make_frame(300 + i))
        batch = result.batch
        i += 1
    frames = batch.frames
    for a, b in zip(frames, frames[1:]):
        assert frame_similarity(a, b) <= 0.99


def test_render_batch_text_keeps_capture_order():
    stream = ScreenshotStream(batch_size=3)
    batch = None
    for i in range(3):
        batch = stream.accept_frame(make_frame(400 + i, text=f"shot {i}")).batch
    text = render_batch_text(batch)
    assert text.index("shot 0") < text.index("shot 1") < text.index("shot 2")


def _fake_cycle_recorder(calls):
    def cycle(text: str) -> UpdateAck:
        calls.append(text)
        return UpdateAck(cycle_id=f"cycle{len(calls)}", reports=(), status="complete")

    return cycle


def test_ingest_conversation_chunking_and_order():
    turns = [
        ConversationTurn(speaker="A" if i % 2 == 0 else "B", timestamp=f"2025-03-05 10:{i:02d}", text=f"turn {i}")
        for i in range(25)
    ]
    calls: list[str] = []
    acks = ingest_conversation(turns, _fake_cycle_recorder(calls), chunk_turns=10)
    assert len(acks) == 3
    assert "turn 0" in calls[0] and "turn 9" in calls[0]
    assert "turn 10" in calls[1] and "turn 19" in calls[1]
    assert "turn 20" in calls[2] and "turn 24" in calls[2]
    # a chunk boundary never splits a turn
    assert "turn 9" not in calls[1] and "turn 10" not in calls[0]


def test_ingest_conversation_sixty_turns_six_cycles():
    turns = [
        ConversationTurn(speaker="A", timestamp="2025-03-05 10:00", text=f"line {i}")
        for i in range(60)
    ]
    calls: list[str] = []
    acks = ingest_conversation(turns, _fake_cycle_recorder(calls), chunk_turns=10)
    assert len(acks) == 6 and len(calls) == 6


def test_ingest_empty_transcript():
    calls: list[str] = []
    assert ingest_conversation([], _fake_cycle_recorder(calls)) == []
    assert calls == []


def test_render_turns_format():
    turns = [ConversationTurn(speaker="Ana", timestamp="2025-03-05 10:15", text="see you at noon")]
    assert render_turns(turns) == "[2025-03-05 10:15] Ana: see you at noon"

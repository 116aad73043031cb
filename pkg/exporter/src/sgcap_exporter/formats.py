"""Writers for the captioning engine's binary file formats.

These are implemented against the published byte layouts, independently of
the engine itself; the contract tests validate the output through the
engine's own CLI.

Bank ("SGCB", little-endian):
    magic 4B, version u32 = 1, N_s u64, d u32, then per record:
    text u32-length + UTF-8, token count u16 with u16-length + UTF-8 each
    (written sorted), d float32 embedding values.

Frames ("SGCF", little-endian):
    magic 4B, version u32 = 1, video-id u32-length + UTF-8,
    N_f u32, d u32, N_f * d float32 values.
"""

from __future__ import annotations

import struct

import numpy as np

BANK_MAGIC = b"SGCB"
FRAMES_MAGIC = b"SGCF"
VERSION = 1


def _check_embedding(arr: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float32)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite values")
    return arr


def write_bank(records, path) -> None:
    """Write (text, token-set, embedding) triples as an SGCB bank file."""
    records = list(records)
    if not records:
        raise ValueError("cannot write an empty bank")
    dim = None
    with open(path, "wb") as fh:
        for text, tokens, embedding in records:
            embedding = _check_embedding(embedding, f"embedding for {text!r}")
            if dim is None:
                dim = embedding.shape[0]
                fh.write(BANK_MAGIC)
                fh.write(struct.pack("<IQI", VERSION, len(records), dim))
            elif embedding.shape[0] != dim:
                raise ValueError("embedding dimensions differ across records")
            raw = text.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            toks = sorted(set(tokens))
            fh.write(struct.pack("<H", len(toks)))
            for tok in toks:
                braw = tok.encode("utf-8")
                fh.write(struct.pack("<H", len(braw)))
                fh.write(braw)
            fh.write(embedding.astype("<f4").tobytes())


def write_frames(video_id: str, frames, path) -> None:
    """Write one video's frame embeddings as an SGCF file."""
    frames = _check_embedding(frames, f"frames for {video_id!r}")
    if frames.ndim != 2 or frames.shape[0] < 1:
        raise ValueError(f"frames must be (N_f >= 1, d), got {frames.shape}")
    vid = video_id.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(FRAMES_MAGIC)
        fh.write(struct.pack("<II", VERSION, len(vid)))
        fh.write(vid)
        fh.write(struct.pack("<II", frames.shape[0], frames.shape[1]))
        fh.write(frames.astype("<f4").tobytes())

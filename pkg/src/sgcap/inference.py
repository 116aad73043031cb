"""Caption generation from precomputed frame embeddings.

Pipeline: average-pool the frames into a global content vector, uniformly
sample k frames as the group, map every one of those k+1 vectors into the
text embedding space (temperature-softmax weighted sum over the bank),
fuse, then run length-normalized beam search over the decoder.  The whole
path is deterministic and read-only over bank and params.

Frame file format ("SGCF", little-endian):

    magic    4 bytes  b"SGCF"
    version  u32      currently 1
    id_len   u32, then UTF-8 video id
    N_f      u32      frame count
    d        u32      embedding dimension
    frames   N_f * d * float32
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .bank import SentenceBank
from .errors import FormatError
from .model import ModelParams, Vocabulary, _decoder_forward_cached, _logsumexp_last, fusion_forward

FRAMES_MAGIC = b"SGCF"
FRAMES_VERSION = 1


@dataclass(frozen=True)
class FrameSet:
    """Per-video sequence of precomputed visual embeddings."""

    video_id: str
    frames: np.ndarray  # (N_f, d) float32

    def __post_init__(self):
        arr = np.asarray(self.frames, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ValueError(f"frames must be (N_f >= 1, d), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("frames contain non-finite values")
        object.__setattr__(self, "frames", arr)

    def __len__(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]


@dataclass(frozen=True)
class CaptionHypothesis:
    """Beam-search output: token ids, cumulative log-probability, EOS flag."""

    tokens: tuple[int, ...]
    log_prob: float
    finished: bool

    @property
    def normalized_score(self) -> float:
        """Cumulative log-probability divided by token count."""
        return self.log_prob / max(1, len(self.tokens))


def save_frames(frames: FrameSet, path) -> None:
    vid = frames.video_id.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(FRAMES_MAGIC)
        fh.write(struct.pack("<II", FRAMES_VERSION, len(vid)))
        fh.write(vid)
        fh.write(struct.pack("<II", len(frames), frames.dim))
        fh.write(frames.frames.astype("<f4").tobytes())


def load_frames(path) -> FrameSet:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != FRAMES_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {FRAMES_MAGIC!r}")
        head = fh.read(8)
        if len(head) != 8:
            raise FormatError("truncated frame file header")
        version, id_len = struct.unpack("<II", head)
        if version != FRAMES_VERSION:
            raise FormatError(f"unsupported frame file version {version}")
        vid = fh.read(id_len)
        if len(vid) != id_len:
            raise FormatError("truncated video id")
        dims = fh.read(8)
        if len(dims) != 8:
            raise FormatError("truncated frame dimensions")
        n_f, d = struct.unpack("<II", dims)
        if n_f < 1 or d < 1:
            raise FormatError(f"invalid frame shape ({n_f}, {d})")
        raw = fh.read(4 * n_f * d)
        if len(raw) != 4 * n_f * d:
            raise FormatError("truncated frame data")
        if fh.read(1):
            raise FormatError("trailing bytes after frame data")
        arr = np.frombuffer(raw, dtype="<f4").reshape(n_f, d)
        if not np.all(np.isfinite(arr)):
            raise FormatError("frame data contains non-finite values")
    return FrameSet(video_id=vid.decode("utf-8"), frames=arr.copy())


def pool_frames(frames: FrameSet) -> np.ndarray:
    """Arithmetic mean of all frame embeddings (the global content vector)."""
    return frames.frames.astype(np.float64).mean(axis=0)


def sample_frame_indices(n_frames: int, k: int) -> list[int]:
    """Endpoint-inclusive uniform sampling grid, rounding half to even.

    k = 1 picks the middle frame; k > n_frames repeats frames per the same
    grid formula.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if n_frames < 1:
        raise ValueError("need at least one frame")
    if k == 1:
        return [int(np.rint((n_frames - 1) / 2.0))]
    return [int(np.rint(j * (n_frames - 1) / (k - 1))) for j in range(k)]


def sample_frames(frames: FrameSet, k: int) -> np.ndarray:
    """(k, d) matrix of uniformly sampled frame embeddings, in time order."""
    idx = sample_frame_indices(len(frames), k)
    return frames.frames.astype(np.float64)[idx]


def domain_transfer(visual, bank: SentenceBank, tau: float) -> np.ndarray:
    """Project a visual vector into the text space via the sentence bank.

    Output is the softmax(cosine/tau)-weighted sum of all bank embeddings,
    so it always lies in their convex hull.  A zero visual vector yields
    uniform weights (the bank mean) with a warning.
    """
    if not tau > 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    v = np.asarray(visual, dtype=np.float64)
    if v.shape != (bank.dim,):
        raise ValueError(f"visual vector must have shape ({bank.dim},), "
                         f"got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("visual vector contains non-finite values")
    mat = bank.matrix.astype(np.float64)
    vn = np.linalg.norm(v)
    if vn == 0.0:
        warnings.warn("zero visual vector: domain transfer falls back to "
                      "uniform weights (bank mean)")
        sims = np.zeros(len(bank))
    else:
        norms = np.linalg.norm(mat, axis=1)
        denom = np.where(norms == 0.0, 1.0, norms * vn)
        sims = np.where(norms == 0.0, 0.0, mat @ v / denom)
    z = sims / tau
    z -= z.max()
    w = np.exp(z)
    w /= w.sum()
    return w @ mat


def _next_token_logprobs(params: ModelParams, prefix, hyps) -> np.ndarray:
    """Log next-token distribution for each active hypothesis (same length)."""
    t = len(hyps[0].tokens)
    tokens = np.full((len(hyps), t + 1), Vocabulary.PAD, dtype=np.int64)
    for i, h in enumerate(hyps):
        tokens[i, :t] = h.tokens
    logits, _ = _decoder_forward_cached(params, prefix, tokens)
    last = logits[:, -1, :]
    return last - _logsumexp_last(last)


def beam_search(prefix, params: ModelParams, beam_size: int, max_len: int,
                min_len: int = 1) -> list[CaptionHypothesis]:
    """Length-normalized beam search over the decoder given a fused prefix.

    Classic shrinking-beam scheme: expansions are ranked by cumulative
    log-probability; an expansion ending in EOS retires its beam slot.
    With beam_size 1 this reduces exactly to greedy decoding.  Hypotheses
    still alive at max_len are returned with finished=False.  The result is
    ranked by normalized score (log-probability per token), best first.

    For beam_size > 1 the greedy rollout is always merged into the
    candidate pool, so widening the beam can never return a hypothesis
    ranked below the greedy one (length normalization could otherwise
    evict it in near-tie regimes).
    """
    if beam_size < 1:
        raise ValueError(f"beam_size must be >= 1, got {beam_size}")
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    baseline: list[CaptionHypothesis] = []
    if beam_size > 1:
        baseline = beam_search(prefix, params, 1, max_len, min_len)
    active = [CaptionHypothesis(tokens=(), log_prob=0.0, finished=False)]
    finished: list[CaptionHypothesis] = []
    width = beam_size
    for step in range(max_len):
        if width == 0 or not active:
            break
        logp = _next_token_logprobs(params, prefix, active)
        if step < min_len:
            logp[:, Vocabulary.EOS] = -np.inf
        logp[:, Vocabulary.PAD] = -np.inf
        logp[:, Vocabulary.BOS] = -np.inf
        scores = np.array([h.log_prob for h in active])[:, None] + logp
        flat = scores.reshape(-1)
        order = np.argsort(-flat, kind="stable")
        vocab_size = logp.shape[1]
        new_active: list[CaptionHypothesis] = []
        for cand in order:
            if len(new_active) >= width:
                break
            hyp = active[cand // vocab_size]
            tok = int(cand % vocab_size)
            score = float(flat[cand])
            if not np.isfinite(score):
                continue
            ext = hyp.tokens + (tok,)
            if tok == Vocabulary.EOS:
                finished.append(CaptionHypothesis(tokens=ext, log_prob=score,
                                                  finished=True))
                width -= 1
                if width == 0:
                    break
            else:
                new_active.append(CaptionHypothesis(tokens=ext, log_prob=score,
                                                    finished=False))
        active = new_active[:width]
    results = finished + active
    seen = {h.tokens for h in results}
    results.extend(h for h in baseline if h.tokens not in seen)
    results.sort(key=lambda h: -h.normalized_score)
    return results


def generate(frames: FrameSet, bank: SentenceBank, params: ModelParams,
             k: int = 5, tau: float = 0.01, beam_size: int = 5,
             max_len: int | None = None, min_len: int = 1) -> list[CaptionHypothesis]:
    """Caption a video: pool, sample, transfer to text space, fuse, decode.

    Both the pooled content vector and each sampled frame vector pass
    through domain transfer before fusion, keeping inference in the same
    embedding space the decoder was trained on.  Returns hypotheses ranked
    by normalized log-probability.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if max_len is None:
        max_len = params.config.max_len
    if max_len > params.config.max_len:
        raise ValueError(f"max_len {max_len} exceeds the model position table "
                         f"({params.config.max_len})")
    pooled = pool_frames(frames)
    group = sample_frames(frames, k)
    content = domain_transfer(pooled, bank, tau)
    transferred = np.stack([domain_transfer(f, bank, tau) for f in group])
    prefix = fusion_forward(content, transferred, params)
    return beam_search(prefix, params, beam_size, max_len, min_len)

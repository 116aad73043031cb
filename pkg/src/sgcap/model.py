"""Fusion module and compact causal transformer decoder, in NumPy.

The fusion module passes the caption/content vector and the k group
vectors through one parameter-shared feed-forward layer and one multi-head
self-attention layer (no mask), producing k+1 prefix vectors.  The decoder
is a pre-norm causal transformer conditioned on those prefix vectors as
context positions 0..k; a BOS slot and the token positions follow.

Forward and backward passes are written by hand so gradients are exact
analytic functions of the loss; the finite-difference tests in the suite
rely on this.  All math runs in float64; checkpoints store float32.

Checkpoint format ("SGCM", little-endian):

    magic    4 bytes  b"SGCM"
    version  u32      currently 1
    cfg_len  u32, then UTF-8 JSON: model config + optional vocabulary words
    n_tensors u32
    per tensor, in declaration order: u32 byte length + float32 data
"""

from __future__ import annotations

import json
import struct
from collections import Counter
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.special import erf

from .errors import FormatError

CHECKPOINT_MAGIC = b"SGCM"
CHECKPOINT_VERSION = 1

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


# -------------------------- vocabulary --------------------------


class Vocabulary:
    """Whitespace word-level vocabulary with reserved PAD/BOS/EOS/UNK ids."""

    PAD = 0
    BOS = 1
    EOS = 2
    UNK = 3
    _RESERVED = ("<pad>", "<bos>", "<eos>", "<unk>")

    def __init__(self, words):
        words = list(words)
        if len(set(words)) != len(words):
            raise ValueError("duplicate words in vocabulary")
        if any(w in self._RESERVED for w in words):
            raise ValueError("reserved token name used as a word")
        self._words = list(self._RESERVED) + words
        self._ids = {w: i for i, w in enumerate(self._words)}

    def __len__(self) -> int:
        return len(self._words)

    @property
    def words(self) -> list[str]:
        """Non-reserved words in id order."""
        return self._words[len(self._RESERVED):]

    @staticmethod
    def tokenize(text: str) -> list[str]:
        return text.lower().split()

    @classmethod
    def from_texts(cls, texts, min_count: int = 1) -> "Vocabulary":
        counts = Counter(w for t in texts for w in cls.tokenize(t))
        words = sorted(w for w, c in counts.items() if c >= min_count)
        return cls(words)

    def encode(self, text: str, max_len: int | None = None) -> list[int]:
        """Token ids of the text plus a trailing EOS, truncated to max_len."""
        ids = [self._ids.get(w, self.UNK) for w in self.tokenize(text)]
        if max_len is not None and len(ids) > max_len - 1:
            ids = ids[:max_len - 1]
        return ids + [self.EOS]

    def decode(self, ids) -> str:
        words = []
        for i in ids:
            if i == self.EOS:
                break
            if i in (self.PAD, self.BOS):
                continue
            if not 0 <= i < len(self._words):
                raise ValueError(f"invalid token id {i}")
            words.append(self._words[i])
        return " ".join(words)


# -------------------------- configuration --------------------------


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters.

    Desk-scale defaults; the full-scale configuration uses d_model=512 and
    4096-wide feed-forward layers.
    """

    vocab_size: int
    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 2
    ffn_dim: int = 256
    fusion_ffn_dim: int = 256
    group_size: int = 5
    max_len: int = 30
    fusion_positions: bool = False
    layer_norm_eps: float = 1e-5

    def __post_init__(self):
        if self.vocab_size < 5:
            raise ValueError("vocab_size must cover the reserved ids plus one word")
        if self.d_model % self.n_heads != 0:
            raise ValueError(
                f"n_heads={self.n_heads} must divide d_model={self.d_model}")
        for name in ("d_model", "n_heads", "n_layers", "ffn_dim",
                     "fusion_ffn_dim", "max_len"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.group_size < 0:
            raise ValueError("group_size must be >= 0")

    @property
    def prefix_slots(self) -> int:
        return self.group_size + 1

    @property
    def max_positions(self) -> int:
        # prefix slots + BOS + token positions
        return self.prefix_slots + 1 + self.max_len

    @classmethod
    def full_scale(cls, vocab_size: int, **overrides) -> "ModelConfig":
        base = dict(vocab_size=vocab_size, d_model=512, n_heads=8, n_layers=12,
                    ffn_dim=4096, fusion_ffn_dim=4096)
        base.update(overrides)
        return cls(**base)


def parameter_spec(config: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Names and shapes of every tensor, in checkpoint declaration order."""
    d, fd = config.d_model, config.ffn_dim
    spec: list[tuple[str, tuple[int, ...]]] = [
        ("fusion.ffn.w1", (d, config.fusion_ffn_dim)),
        ("fusion.ffn.b1", (config.fusion_ffn_dim,)),
        ("fusion.ffn.w2", (config.fusion_ffn_dim, d)),
        ("fusion.ffn.b2", (d,)),
    ]
    for w in ("q", "k", "v", "o"):
        spec.append((f"fusion.attn.w{w}", (d, d)))
        spec.append((f"fusion.attn.b{w}", (d,)))
    if config.fusion_positions:
        spec.append(("fusion.pos", (config.prefix_slots, d)))
    spec.append(("dec.tok_emb", (config.vocab_size, d)))
    spec.append(("dec.pos_emb", (config.max_positions, d)))
    for i in range(config.n_layers):
        p = f"dec.h{i}"
        spec.append((f"{p}.ln1.g", (d,)))
        spec.append((f"{p}.ln1.b", (d,)))
        for w in ("q", "k", "v", "o"):
            spec.append((f"{p}.attn.w{w}", (d, d)))
            spec.append((f"{p}.attn.b{w}", (d,)))
        spec.append((f"{p}.ln2.g", (d,)))
        spec.append((f"{p}.ln2.b", (d,)))
        spec.append((f"{p}.ffn.w1", (d, fd)))
        spec.append((f"{p}.ffn.b1", (fd,)))
        spec.append((f"{p}.ffn.w2", (fd, d)))
        spec.append((f"{p}.ffn.b2", (d,)))
    spec.append(("dec.ln_f.g", (d,)))
    spec.append(("dec.ln_f.b", (d,)))
    spec.append(("dec.w_out", (d, config.vocab_size)))
    spec.append(("dec.b_out", (config.vocab_size,)))
    return spec


@dataclass
class ModelParams:
    """All trainable tensors plus optional AdamW moment estimates."""

    config: ModelConfig
    tensors: dict[str, np.ndarray]
    adam_m: dict[str, np.ndarray] | None = field(default=None, repr=False)
    adam_v: dict[str, np.ndarray] | None = field(default=None, repr=False)
    adam_step: int = 0

    def validate(self) -> None:
        spec = dict(parameter_spec(self.config))
        if set(spec) != set(self.tensors):
            raise ValueError("tensor names do not match the configuration")
        for name, shape in spec.items():
            if self.tensors[name].shape != shape:
                raise ValueError(f"{name} has shape {self.tensors[name].shape}, "
                                 f"expected {shape}")
            if not np.all(np.isfinite(self.tensors[name])):
                raise ValueError(f"{name} contains non-finite values")
        for moments in (self.adam_m, self.adam_v):
            if moments is not None:
                for name, t in self.tensors.items():
                    if moments[name].shape != t.shape:
                        raise ValueError(f"moment for {name} has wrong shape")

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(t) for k, t in self.tensors.items()}


def init_params(config: ModelConfig, seed: int = 0) -> ModelParams:
    """Scaled-random initialization, deterministic per seed.

    Weights and embeddings ~ N(0, 0.02^2); residual output projections are
    further scaled by 1/sqrt(2 * n_layers); biases and layer-norm offsets
    start at zero, layer-norm gains at one.
    """
    rng = np.random.default_rng(seed)
    resid_scale = 1.0 / np.sqrt(2.0 * config.n_layers)
    tensors: dict[str, np.ndarray] = {}
    for name, shape in parameter_spec(config):
        leaf = name.rsplit(".", 1)[-1]
        if leaf in ("b1", "b2", "bq", "bk", "bv", "bo", "b_out", "b"):
            t = np.zeros(shape)
        elif leaf == "g":
            t = np.ones(shape)
        else:
            t = rng.normal(0.0, 0.02, size=shape)
            if leaf in ("wo", "w2") and name.startswith("dec.h"):
                t *= resid_scale
        tensors[name] = t
    params = ModelParams(config=config, tensors=tensors)
    params.validate()
    return params


# -------------------------- primitive layers --------------------------


def _gelu_forward(x):
    phi = 0.5 * (1.0 + erf(x * _INV_SQRT2))
    return x * phi, (x, phi)


def _gelu_backward(dy, cache):
    x, phi = cache
    return dy * (phi + x * np.exp(-0.5 * x * x) * _INV_SQRT_2PI)


def _layernorm_forward(x, g, b, eps):
    mu = x.mean(axis=-1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
    sigma = np.sqrt(var + eps)
    xhat = (x - mu) / sigma
    return xhat * g + b, (xhat, sigma, g)


def _layernorm_backward(dy, cache):
    xhat, sigma, g = cache
    ghat = dy * g
    m1 = ghat.mean(axis=-1, keepdims=True)
    m2 = (ghat * xhat).mean(axis=-1, keepdims=True)
    dx = (ghat - m1 - xhat * m2) / sigma
    axes = tuple(range(dy.ndim - 1))
    return dx, (dy * xhat).sum(axis=axes), dy.sum(axis=axes)


def _softmax_last(z):
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _attention_forward(t, pfx, x, n_heads, causal):
    """Multi-head self-attention over x of shape (B, L, d)."""
    B, L, d = x.shape
    dh = d // n_heads
    q = x @ t[f"{pfx}.wq"] + t[f"{pfx}.bq"]
    k = x @ t[f"{pfx}.wk"] + t[f"{pfx}.bk"]
    v = x @ t[f"{pfx}.wv"] + t[f"{pfx}.bv"]

    def split(z):
        return z.reshape(B, L, n_heads, dh).transpose(0, 2, 1, 3)

    qh, kh, vh = split(q), split(k), split(v)
    scores = qh @ kh.transpose(0, 1, 3, 2) / np.sqrt(dh)
    if causal:
        mask = np.tril(np.ones((L, L), dtype=bool))
        scores = np.where(mask, scores, -np.inf)
    attn = _softmax_last(scores)
    ctx = attn @ vh                                   # (B, H, L, dh)
    merged = ctx.transpose(0, 2, 1, 3).reshape(B, L, d)
    y = merged @ t[f"{pfx}.wo"] + t[f"{pfx}.bo"]
    cache = (x, qh, kh, vh, attn, merged, n_heads)
    return y, cache


def _attention_backward(t, pfx, dy, cache, grads):
    x, qh, kh, vh, attn, merged, n_heads = cache
    B, L, d = x.shape
    dh = d // n_heads

    grads[f"{pfx}.wo"] += merged.reshape(-1, d).T @ dy.reshape(-1, d)
    grads[f"{pfx}.bo"] += dy.sum(axis=(0, 1))
    dmerged = dy @ t[f"{pfx}.wo"].T
    dctx = dmerged.reshape(B, L, n_heads, dh).transpose(0, 2, 1, 3)

    dattn = dctx @ vh.transpose(0, 1, 3, 2)
    dvh = attn.transpose(0, 1, 3, 2) @ dctx
    # softmax backward; rows masked to -inf have attn == 0 there, so the
    # masked entries of dscores vanish automatically
    dscores = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True))
    dscores /= np.sqrt(dh)
    dqh = dscores @ kh
    dkh = dscores.transpose(0, 1, 3, 2) @ qh

    def merge(z):
        return z.transpose(0, 2, 1, 3).reshape(B, L, d)

    dq, dk, dv = merge(dqh), merge(dkh), merge(dvh)
    x2 = x.reshape(-1, d)
    dx = np.zeros_like(x)
    for name, dz in (("q", dq), ("k", dk), ("v", dv)):
        grads[f"{pfx}.w{name}"] += x2.T @ dz.reshape(-1, d)
        grads[f"{pfx}.b{name}"] += dz.sum(axis=(0, 1))
        dx += dz @ t[f"{pfx}.w{name}"].T
    return dx


def _ffn_forward(t, pfx, x):
    u = x @ t[f"{pfx}.w1"] + t[f"{pfx}.b1"]
    a, gcache = _gelu_forward(u)
    y = a @ t[f"{pfx}.w2"] + t[f"{pfx}.b2"]
    return y, (x, a, gcache)


def _ffn_backward(t, pfx, dy, cache, grads):
    x, a, gcache = cache
    d_in = x.shape[-1]
    d_mid = a.shape[-1]
    grads[f"{pfx}.w2"] += a.reshape(-1, d_mid).T @ dy.reshape(-1, dy.shape[-1])
    grads[f"{pfx}.b2"] += dy.sum(axis=tuple(range(dy.ndim - 1)))
    da = dy @ t[f"{pfx}.w2"].T
    du = _gelu_backward(da, gcache)
    grads[f"{pfx}.w1"] += x.reshape(-1, d_in).T @ du.reshape(-1, d_mid)
    grads[f"{pfx}.b1"] += du.sum(axis=tuple(range(du.ndim - 1)))
    return du @ t[f"{pfx}.w1"].T


# -------------------------- fusion module --------------------------


def _fusion_forward_cached(params: ModelParams, caption_embedding, group_embeddings):
    cfg = params.config
    t = params.tensors
    caption = np.asarray(caption_embedding, dtype=np.float64)
    group = np.asarray(group_embeddings, dtype=np.float64)
    if group.size == 0:
        group = group.reshape(0, cfg.d_model)
    if caption.shape != (cfg.d_model,):
        raise ValueError(f"caption embedding must have shape ({cfg.d_model},), "
                         f"got {caption.shape}")
    if group.ndim != 2 or group.shape[1] != cfg.d_model:
        raise ValueError(f"group embeddings must be (k, {cfg.d_model}), "
                         f"got {group.shape}")
    x = np.concatenate([caption[None, :], group], axis=0)[None]  # (1, S, d)
    if cfg.fusion_positions:
        if x.shape[1] != cfg.prefix_slots:
            raise ValueError(
                f"fusion positions are enabled for {cfg.prefix_slots} slots, "
                f"got {x.shape[1]} inputs")
        x = x + t["fusion.pos"][None]
    f_out, f_cache = _ffn_forward(t, "fusion.ffn", x)
    h = x + f_out
    a_out, a_cache = _attention_forward(t, "fusion.attn", h, cfg.n_heads,
                                        causal=False)
    y = h + a_out
    return y[0], (f_cache, a_cache)


def _fusion_backward(params: ModelParams, dprefix, cache, grads):
    cfg = params.config
    t = params.tensors
    f_cache, a_cache = cache
    dy = dprefix[None]
    dh = dy + _attention_backward(t, "fusion.attn", dy, a_cache, grads)
    dx = dh + _ffn_backward(t, "fusion.ffn", dh, f_cache, grads)
    if cfg.fusion_positions:
        grads["fusion.pos"] += dx[0]


def fusion_forward(caption_embedding, group_embeddings, params: ModelParams) -> np.ndarray:
    """Fuse the caption/content vector with its k group vectors.

    Each of the k+1 inputs passes the shared feed-forward layer, then one
    unmasked self-attention layer mixes the slots.  Output row order
    matches input order (caption first).  Residual paths mean all-zero
    weights act as the identity.
    """
    prefix, _ = _fusion_forward_cached(params, caption_embedding, group_embeddings)
    return prefix


# -------------------------- decoder --------------------------


def _decoder_forward_cached(params: ModelParams, prefix, tokens_batch):
    """Causal forward over [prefix, BOS, tokens[:-1]] per batch row.

    tokens_batch is (B, T) int padded with PAD.  Returns logits
    (B, T, vocab) where row t predicts tokens_batch[:, t].
    """
    cfg = params.config
    t = params.tensors
    prefix = np.asarray(prefix, dtype=np.float64)
    S = prefix.shape[0]
    B, T = tokens_batch.shape
    if T < 1:
        raise ValueError("need at least one token position")
    total = S + 1 + (T - 1)
    if total > cfg.max_positions:
        raise ValueError(f"sequence length {total} exceeds the position table "
                         f"({cfg.max_positions})")
    ids_in = np.concatenate(
        [np.full((B, 1), Vocabulary.BOS, dtype=np.int64), tokens_batch[:, :-1]],
        axis=1)
    if ids_in.min() < 0 or ids_in.max() >= cfg.vocab_size:
        raise ValueError("token id out of vocabulary range")
    x = np.empty((B, total, cfg.d_model))
    x[:, :S] = prefix[None]
    x[:, S:] = t["dec.tok_emb"][ids_in]
    x = x + t["dec.pos_emb"][None, :total]

    block_caches = []
    for i in range(cfg.n_layers):
        p = f"dec.h{i}"
        n1, c_ln1 = _layernorm_forward(x, t[f"{p}.ln1.g"], t[f"{p}.ln1.b"],
                                       cfg.layer_norm_eps)
        a_out, c_attn = _attention_forward(t, f"{p}.attn", n1, cfg.n_heads,
                                           causal=True)
        xa = x + a_out
        n2, c_ln2 = _layernorm_forward(xa, t[f"{p}.ln2.g"], t[f"{p}.ln2.b"],
                                       cfg.layer_norm_eps)
        f_out, c_ffn = _ffn_forward(t, f"{p}.ffn", n2)
        x = xa + f_out
        block_caches.append((c_ln1, c_attn, c_ln2, c_ffn))

    hf, c_lnf = _layernorm_forward(x, t["dec.ln_f.g"], t["dec.ln_f.b"],
                                   cfg.layer_norm_eps)
    logits = hf[:, S:] @ t["dec.w_out"] + t["dec.b_out"]
    cache = (S, ids_in, block_caches, c_lnf, hf)
    return logits, cache


def _decoder_backward(params: ModelParams, dlogits, cache, grads):
    cfg = params.config
    t = params.tensors
    S, ids_in, block_caches, c_lnf, hf = cache
    B, T, v = dlogits.shape
    d = cfg.d_model

    grads["dec.w_out"] += hf[:, S:].reshape(-1, d).T @ dlogits.reshape(-1, v)
    grads["dec.b_out"] += dlogits.sum(axis=(0, 1))
    dhf = np.zeros_like(hf)
    dhf[:, S:] = dlogits @ t["dec.w_out"].T
    dx, dg, db = _layernorm_backward(dhf, c_lnf)
    grads["dec.ln_f.g"] += dg
    grads["dec.ln_f.b"] += db

    for i in reversed(range(cfg.n_layers)):
        p = f"dec.h{i}"
        c_ln1, c_attn, c_ln2, c_ffn = block_caches[i]
        dn2 = _ffn_backward(t, f"{p}.ffn", dx, c_ffn, grads)
        dxa, dg, db = _layernorm_backward(dn2, c_ln2)
        grads[f"{p}.ln2.g"] += dg
        grads[f"{p}.ln2.b"] += db
        dxa = dxa + dx
        dn1 = _attention_backward(t, f"{p}.attn", dxa, c_attn, grads)
        dx0, dg, db = _layernorm_backward(dn1, c_ln1)
        grads[f"{p}.ln1.g"] += dg
        grads[f"{p}.ln1.b"] += db
        dx = dxa + dx0

    grads["dec.pos_emb"][:S + T] += dx.sum(axis=0)
    np.add.at(grads["dec.tok_emb"], ids_in.reshape(-1),
              dx[:, S:].reshape(-1, d))
    return dx[:, :S].sum(axis=0)  # gradient w.r.t. the prefix rows


def decoder_forward(prefix, tokens, params: ModelParams) -> np.ndarray:
    """Logits (T, vocab) for one token sequence under the given prefix.

    Row t is the next-token distribution after [prefix, BOS, tokens[:t]],
    i.e. the prediction for tokens[t]; causality guarantees it ignores
    tokens[t:].
    """
    tokens = np.asarray(tokens, dtype=np.int64)
    if tokens.ndim != 1 or tokens.shape[0] < 1:
        raise ValueError("tokens must be a nonempty 1-D id sequence")
    if tokens.min() < 0 or tokens.max() >= params.config.vocab_size:
        raise ValueError("token id out of vocabulary range")
    logits, _ = _decoder_forward_cached(params, prefix, tokens[None, :])
    return logits[0]


def teacher_forced_ce(prefix, candidate_tokens, params: ModelParams) -> float:
    """Mean per-token negative log-likelihood of one candidate sequence."""
    tokens = np.asarray(candidate_tokens, dtype=np.int64)
    if tokens.size == 0:
        raise ValueError("candidate must be nonempty")
    if tokens[-1] != Vocabulary.EOS:
        raise ValueError("candidate must end with EOS")
    logits = decoder_forward(prefix, tokens, params)
    logp = logits - _logsumexp_last(logits)
    nll = -logp[np.arange(tokens.shape[0]), tokens]
    return float(nll.mean())


def _logsumexp_last(z):
    m = z.max(axis=-1, keepdims=True)
    return m + np.log(np.exp(z - m).sum(axis=-1, keepdims=True))


# -------------------------- combined loss + backward --------------------------


def pss_forward_backward(params: ModelParams, caption_embedding, group_embeddings,
                         candidates, weights):
    """Weighted teacher-forced loss and exact gradients in one pass.

    candidates is a list of token-id sequences (each ending with EOS);
    weights is one nonnegative coefficient per candidate.  The loss is
    sum_i weights[i] * CE_i with CE_i the mean per-token cross-entropy of
    candidate i, all candidates sharing the fused prefix.  Returns
    (loss, per-candidate CE array, gradient dict keyed like the tensors).
    """
    cfg = params.config
    weights = np.asarray(weights, dtype=np.float64)
    if len(candidates) != weights.shape[0]:
        raise ValueError("one weight per candidate required")
    lengths = np.array([len(c) for c in candidates], dtype=np.int64)
    if np.any(lengths == 0):
        raise ValueError("candidates must be nonempty")
    for c in candidates:
        if c[-1] != Vocabulary.EOS:
            raise ValueError("every candidate must end with EOS")
    B = len(candidates)
    T = int(lengths.max())
    tokens = np.full((B, T), Vocabulary.PAD, dtype=np.int64)
    for i, c in enumerate(candidates):
        tokens[i, :lengths[i]] = c

    prefix, f_cache = _fusion_forward_cached(params, caption_embedding,
                                             group_embeddings)
    logits, d_cache = _decoder_forward_cached(params, prefix, tokens)

    logp = logits - _logsumexp_last(logits)
    valid = np.arange(T)[None, :] < lengths[:, None]
    nll = -np.take_along_axis(logp, tokens[:, :, None], axis=2)[:, :, 0]
    nll = np.where(valid, nll, 0.0)
    ce = nll.sum(axis=1) / lengths
    loss = float(np.dot(weights, ce))

    # d loss / d logits = w_i / T_i * (softmax - onehot) at valid positions
    pos_w = np.where(valid, (weights / lengths)[:, None], 0.0)
    dlogits = np.exp(logp) * pos_w[:, :, None]
    np.subtract.at(dlogits.reshape(-1, cfg.vocab_size),
                   (np.arange(B * T), tokens.reshape(-1)),
                   pos_w.reshape(-1))

    grads = params.zero_grads()
    dprefix = _decoder_backward(params, dlogits, d_cache, grads)
    _fusion_backward(params, dprefix, f_cache, grads)
    return loss, ce, grads


# -------------------------- checkpoint io --------------------------


def save_checkpoint(path, params: ModelParams, vocab: Vocabulary | None = None) -> None:
    """Write config (+ vocabulary words, if given) and tensors as float32."""
    params.validate()
    cfg_dict = asdict(params.config)
    payload = {"config": cfg_dict}
    if vocab is not None:
        if len(vocab) != params.config.vocab_size:
            raise ValueError("vocabulary size does not match the model config")
        payload["vocab_words"] = vocab.words
    blob = json.dumps(payload, sort_keys=True).encode("utf-8")
    spec = parameter_spec(params.config)
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(blob)))
        fh.write(blob)
        fh.write(struct.pack("<I", len(spec)))
        for name, _ in spec:
            data = params.tensors[name].astype("<f4").tobytes()
            fh.write(struct.pack("<I", len(data)))
            fh.write(data)


def load_checkpoint(path) -> tuple[ModelParams, Vocabulary | None]:
    """Read an SGCM file; returns the params and the stored vocabulary, if any."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}")
        header = fh.read(8)
        if len(header) != 8:
            raise FormatError("truncated checkpoint header")
        version, cfg_len = struct.unpack("<II", header)
        if version != CHECKPOINT_VERSION:
            raise FormatError(f"unsupported checkpoint version {version}")
        blob = fh.read(cfg_len)
        if len(blob) != cfg_len:
            raise FormatError("truncated checkpoint config block")
        try:
            payload = json.loads(blob.decode("utf-8"))
            config = ModelConfig(**payload["config"])
        except (ValueError, KeyError, TypeError) as exc:
            raise FormatError(f"invalid checkpoint config block: {exc}") from exc
        count_raw = fh.read(4)
        if len(count_raw) != 4:
            raise FormatError("truncated checkpoint tensor count")
        (n_tensors,) = struct.unpack("<I", count_raw)
        spec = parameter_spec(config)
        if n_tensors != len(spec):
            raise FormatError(f"checkpoint holds {n_tensors} tensors, "
                              f"config implies {len(spec)}")
        tensors = {}
        for name, shape in spec:
            len_raw = fh.read(4)
            if len(len_raw) != 4:
                raise FormatError(f"truncated checkpoint before tensor {name}")
            (nbytes,) = struct.unpack("<I", len_raw)
            expected = 4 * int(np.prod(shape))
            if nbytes != expected:
                raise FormatError(f"tensor {name} has {nbytes} bytes, "
                                  f"expected {expected}")
            data = fh.read(nbytes)
            if len(data) != nbytes:
                raise FormatError(f"truncated checkpoint in tensor {name}")
            arr = np.frombuffer(data, dtype="<f4").astype(np.float64)
            tensors[name] = arr.reshape(shape)
        if fh.read(1):
            raise FormatError("trailing bytes after final tensor")
    params = ModelParams(config=config, tensors=tensors)
    params.validate()
    vocab = None
    if "vocab_words" in payload:
        vocab = Vocabulary(payload["vocab_words"])
        if len(vocab) != config.vocab_size:
            raise FormatError("stored vocabulary does not match config size")
    return params, vocab

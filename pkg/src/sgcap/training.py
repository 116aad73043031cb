"""Training loop: retrieval, noise, fusion, supervised decoding, AdamW.

One run is fully determined by the config seed: the held-out split, the
parameter init, epoch shuffles, per-caption noise draws, and sampled-mode
candidate draws all derive their streams from it.  Divergence to a
non-finite loss aborts with a diagnostic rather than training through NaN.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bank import SentenceBank, compute_stats
from .errors import NumericalError
from .model import (ModelConfig, ModelParams, Vocabulary, init_params,
                    pss_forward_backward)
from .noise import NoiseMode, perturb_group
from .similarity import SemanticGroup, select_group
from .supervision import SupervisionTarget, build_target, sample_target

# seed-stream tags (mixed into per-purpose generator seeds)
_SPLIT, _INIT, _SHUFFLE, _NOISE, _SAMPLE = range(5)


@dataclass
class TrainConfig:
    """Hyperparameters for one training run.

    The similarity weight, caption score, group size, learning rate, and
    batch size default to the canonical full-scale settings; architecture
    fields default to desk scale.
    """

    sigma: float = 0.5
    lam: float = 1.0
    k: int = 5
    noise_mode: NoiseMode = NoiseMode.ELEMENT_WISE
    loss_mode: str = "mixture"
    learning_rate: float = 1e-4
    batch_size: int = 256
    max_epochs: int = 50
    early_stop_patience: int = 5
    seed: int = 0

    d_model: int | None = None
    n_layers: int = 2
    n_heads: int = 4
    ffn_dim: int = 256
    fusion_ffn_dim: int = 256
    max_len: int = 30
    fusion_positions: bool = False
    vocab_min_count: int = 1
    holdout_frac: float = 0.05
    exclude_self: bool = True
    redraw_noise: bool = True
    grad_clip: float | None = None
    weight_decay: float = 0.01
    betas: tuple[float, float] = (0.9, 0.999)

    def __post_init__(self):
        if isinstance(self.noise_mode, str):
            self.noise_mode = NoiseMode.parse(self.noise_mode)
        if not 0.0 <= self.sigma <= 1.0:
            raise ValueError(f"sigma must be in [0, 1], got {self.sigma}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be > 0, got {self.lam}")
        if self.k < 0:
            raise ValueError(f"k must be >= 0, got {self.k}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch_size and max_epochs must be >= 1")
        if self.loss_mode not in ("mixture", "sampled"):
            raise ValueError(f"loss_mode must be 'mixture' or 'sampled', "
                             f"got {self.loss_mode!r}")
        if not 0.0 <= self.holdout_frac < 1.0:
            raise ValueError("holdout_frac must be in [0, 1)")

    def model_config(self, vocab_size: int, embedding_dim: int) -> ModelConfig:
        d_model = self.d_model if self.d_model is not None else embedding_dim
        if d_model != embedding_dim:
            raise ValueError(
                f"d_model={d_model} must equal the bank embedding dimension "
                f"{embedding_dim} (the fusion and decoder share that space)")
        return ModelConfig(
            vocab_size=vocab_size, d_model=d_model, n_heads=self.n_heads,
            n_layers=self.n_layers, ffn_dim=self.ffn_dim,
            fusion_ffn_dim=self.fusion_ffn_dim, group_size=self.k,
            max_len=self.max_len, fusion_positions=self.fusion_positions)


@dataclass
class TrainResult:
    params: ModelParams
    vocab: Vocabulary
    log: list[dict] = field(default_factory=list)
    initial_loss: float = math.nan
    final_loss: float = math.nan
    best_held_out: float = math.nan
    epochs_run: int = 0


def adamw_update(tensors, grads, m, v, step_count, lr,
                 betas=(0.9, 0.999), weight_decay=0.01, eps=1e-8) -> None:
    """One decoupled-weight-decay Adam step, in place.

    step_count is 1-based and drives the bias correction.  Weight decay is
    applied directly to the parameter, not through the gradient.
    """
    if step_count < 1:
        raise ValueError("step_count must be >= 1")
    b1, b2 = betas
    c1 = 1.0 - b1 ** step_count
    c2 = 1.0 - b2 ** step_count
    for name, p in tensors.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"gradient for {name} has shape {g.shape}, "
                             f"expected {p.shape}")
        m[name] = b1 * m[name] + (1.0 - b1) * g
        v[name] = b2 * v[name] + (1.0 - b2) * g * g
        mhat = m[name] / c1
        vhat = v[name] / c2
        p -= lr * (mhat / (np.sqrt(vhat) + eps) + weight_decay * p)


def adamw_step(params: ModelParams, grads, lr, betas=(0.9, 0.999),
               weight_decay=0.01, eps=1e-8) -> ModelParams:
    """Apply one AdamW step to a ModelParams, creating moments on first use."""
    if params.adam_m is None:
        params.adam_m = {k: np.zeros_like(t) for k, t in params.tensors.items()}
        params.adam_v = {k: np.zeros_like(t) for k, t in params.tensors.items()}
    params.adam_step += 1
    adamw_update(params.tensors, grads, params.adam_m, params.adam_v,
                 params.adam_step, lr, betas, weight_decay, eps)
    return params


def clip_gradients(grads, max_norm: float) -> float:
    """Scale gradients in place to a global L2 norm cap; returns the raw norm."""
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > max_norm > 0:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return total


@dataclass(frozen=True)
class _Example:
    """Precomputed per-caption training material."""

    index: int
    caption_embedding: np.ndarray
    group_indices: tuple[int, ...]
    group_scores: tuple[float, ...]
    candidates: tuple[tuple[int, ...], ...]
    target: SupervisionTarget


def _prepare_examples(bank: SentenceBank, config: TrainConfig,
                      vocab: Vocabulary) -> list[_Example]:
    """Retrieval and supervision targets are score-determined, so they are
    computed once up front; only the noise draws change between epochs."""
    examples = []
    for i, rec in enumerate(bank.records):
        if config.k > 0:
            group = select_group(rec, bank, config.sigma, config.k,
                                 exclude_self=config.exclude_self, query_index=i)
            indices = tuple(group.indices)
            scores = tuple(group.scores)
        else:
            indices, scores = (), ()
        caption_ids = tuple(vocab.encode(rec.text, max_len=config.max_len))
        group_ids = tuple(tuple(vocab.encode(bank.records[j].text,
                                             max_len=config.max_len))
                          for j in indices)
        target = build_target(caption_ids, group_ids, scores, config.lam)
        examples.append(_Example(
            index=i, caption_embedding=rec.embedding.astype(np.float64),
            group_indices=indices, group_scores=scores,
            candidates=(caption_ids,) + group_ids, target=target))
    return examples


def _group_embeddings(example: _Example, bank: SentenceBank, config: TrainConfig,
                      stats, noise_seed) -> np.ndarray:
    if not example.group_indices:
        return np.zeros((0, bank.dim))
    base = bank.matrix[list(example.group_indices)].astype(np.float64)
    if config.noise_mode is NoiseMode.NONE:
        return base
    group = SemanticGroup(members=tuple(
        (idx, emb, score) for idx, emb, score in
        zip(example.group_indices, base, example.group_scores)))
    return perturb_group(group, config.noise_mode, stats, noise_seed).embeddings


def _example_loss(params, example, group_emb, weights):
    loss, ce, grads = pss_forward_backward(
        params, example.caption_embedding, group_emb, list(example.candidates),
        weights)
    return loss, ce, grads


def _held_out_loss(params, examples, bank, config) -> float:
    """Mixture loss on noise-free groups: the deterministic validation signal."""
    if not examples:
        return math.nan
    total = 0.0
    for ex in examples:
        if ex.group_indices:
            group_emb = bank.matrix[list(ex.group_indices)].astype(np.float64)
        else:
            group_emb = np.zeros((0, bank.dim))
        loss, _, _ = _example_loss(params, ex, group_emb, ex.target.probs)
        total += loss
    return total / len(examples)


def train(bank: SentenceBank, config: TrainConfig) -> TrainResult:
    """Run the full training procedure over a sentence bank.

    Per caption and batch: retrieve the semantic group (self-excluded),
    perturb it, fuse, teacher-force every candidate, combine the
    cross-entropies per the configured loss mode, and take an AdamW step on
    the batch-mean gradients.  Early stopping watches the held-out split
    with the configured patience and restores the best parameters.
    """
    n = len(bank)
    if config.k > 0 and config.k > n - (1 if config.exclude_self else 0):
        raise ValueError(f"k={config.k} too large for a bank of {n} sentences")

    vocab = Vocabulary.from_texts(bank.texts(), min_count=config.vocab_min_count)
    stats = compute_stats(bank)
    examples = _prepare_examples(bank, config, vocab)

    split_rng = np.random.default_rng([config.seed, _SPLIT])
    order = split_rng.permutation(n)
    n_holdout = int(round(config.holdout_frac * n))
    n_holdout = min(n_holdout, n - 1)
    holdout = [examples[i] for i in order[:n_holdout]]
    train_set = [examples[i] for i in order[n_holdout:]]

    params = init_params(config.model_config(len(vocab), bank.dim),
                         seed=[config.seed, _INIT])

    result = TrainResult(params=params, vocab=vocab)
    best_held = math.inf
    best_tensors = None
    stale_epochs = 0

    for epoch in range(1, config.max_epochs + 1):
        shuffle_rng = np.random.default_rng([config.seed, _SHUFFLE, epoch])
        epoch_order = shuffle_rng.permutation(len(train_set))
        epoch_losses = []
        for batch_no, start in enumerate(range(0, len(train_set), config.batch_size)):
            batch = [train_set[j] for j in epoch_order[start:start + config.batch_size]]
            grad_sum = params.zero_grads()
            loss_sum = 0.0
            for ex in batch:
                noise_epoch = epoch if config.redraw_noise else 0
                group_emb = _group_embeddings(
                    ex, bank, config, stats,
                    noise_seed=[config.seed, _NOISE, noise_epoch, ex.index])
                if config.loss_mode == "sampled":
                    pick = sample_target(
                        ex.target, rng=[config.seed, _SAMPLE, epoch, ex.index])
                    loss, _, grads = pss_forward_backward(
                        params, ex.caption_embedding, group_emb,
                        [list(ex.candidates[pick])], np.array([1.0]))
                else:
                    loss, _, grads = _example_loss(params, ex, group_emb,
                                                   ex.target.probs)
                if not math.isfinite(loss):
                    raise NumericalError(
                        f"non-finite loss at epoch {epoch} batch {batch_no} "
                        f"caption {ex.index}: {loss}")
                loss_sum += loss
                for name, g in grads.items():
                    grad_sum[name] += g
            inv = 1.0 / len(batch)
            for g in grad_sum.values():
                g *= inv
            if config.grad_clip is not None:
                clip_gradients(grad_sum, config.grad_clip)
            adamw_step(params, grad_sum, config.learning_rate, config.betas,
                       config.weight_decay)
            batch_loss = loss_sum / len(batch)
            epoch_losses.append(batch_loss)
            result.log.append({"epoch": epoch, "batch": batch_no,
                               "loss": batch_loss, "held_out": None})

        held = _held_out_loss(params, holdout, bank, config)
        result.log[-1]["held_out"] = None if math.isnan(held) else held
        if epoch == 1:
            result.initial_loss = epoch_losses[0]
        result.final_loss = epoch_losses[-1]
        result.epochs_run = epoch

        monitor = held if not math.isnan(held) else float(np.mean(epoch_losses))
        if monitor < best_held - 1e-12:
            best_held = monitor
            best_tensors = {k: t.copy() for k, t in params.tensors.items()}
            stale_epochs = 0
        else:
            stale_epochs += 1
            if stale_epochs > config.early_stop_patience:
                break

    if best_tensors is not None:
        params.tensors = best_tensors
    result.best_held_out = best_held
    params.validate()
    return result

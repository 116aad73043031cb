"""Probability-sampled supervision over the caption and its semantic group.

A supervision target holds k+1 candidate token sequences: the training
caption first (raw score lambda), then the k group sentences (raw scores =
their hybrid retrieval scores).  A softmax over the raw scores gives the
selection distribution.  The loss over per-candidate cross-entropies comes
in two modes:

    mixture  sum_i probs[i] * CE_i         (the printed formula)
    sampled  CE of one candidate drawn from probs

Both are shipped because the two readings genuinely differ; mixture is the
default.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def softmax(scores) -> np.ndarray:
    """Numerically stable softmax of a 1-D score vector."""
    s = np.asarray(scores, dtype=np.float64)
    shifted = s - s.max()
    e = np.exp(shifted)
    return e / e.sum()


@dataclass(frozen=True)
class SupervisionTarget:
    """Candidate sentences plus their normalized selection probabilities.

    candidates[0] is always the training caption and raw_scores[0] is
    lambda; probs = softmax(raw_scores) and sums to 1.
    """

    candidates: tuple[tuple[str, ...], ...]
    raw_scores: np.ndarray
    probs: np.ndarray

    def __len__(self) -> int:
        return len(self.candidates)


def build_target(training_caption_tokens, group_sentences_tokens,
                 group_hybrid_scores, lam: float) -> SupervisionTarget:
    """Assemble the k+1 candidate list and its softmax distribution.

    lam (> 0) is the raw score of the training caption itself.
    """
    if not (np.isfinite(lam) and lam > 0):
        raise ValueError(f"lambda must be > 0, got {lam}")
    group_sentences_tokens = [tuple(t) for t in group_sentences_tokens]
    scores = np.asarray(group_hybrid_scores, dtype=np.float64)
    if scores.shape != (len(group_sentences_tokens),):
        raise ValueError("one hybrid score per group sentence required")
    if not np.all(np.isfinite(scores)):
        raise ValueError("group scores must be finite")
    raw = np.concatenate(([lam], scores))
    candidates = (tuple(training_caption_tokens),) + tuple(group_sentences_tokens)
    return SupervisionTarget(candidates=candidates, raw_scores=raw,
                             probs=softmax(raw))


def sample_target(target: SupervisionTarget, rng=None) -> int:
    """Draw a candidate index with probability probs[index]."""
    gen = np.random.default_rng(rng)
    return int(gen.choice(len(target.probs), p=target.probs))


def pss_loss(per_candidate_ce, target: SupervisionTarget,
             mode: str = "mixture", rng=None) -> float:
    """Combine per-candidate cross-entropies into the training loss.

    per_candidate_ce[i] is the mean per-token cross-entropy of candidate i
    under teacher forcing.  mode is "mixture" (probability-weighted sum)
    or "sampled" (CE of one drawn candidate).
    """
    ce = np.asarray(per_candidate_ce, dtype=np.float64)
    if ce.shape != target.probs.shape:
        raise ValueError(
            f"expected {target.probs.shape[0]} cross-entropies, got {ce.shape}")
    if np.any(ce < 0):
        raise ValueError("cross-entropies must be nonnegative")
    if mode == "mixture":
        return float(np.dot(target.probs, ce))
    if mode == "sampled":
        return float(ce[sample_target(target, rng)])
    raise ValueError(f"unknown loss mode {mode!r}; expected 'mixture' or 'sampled'")

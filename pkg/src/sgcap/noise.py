"""Gaussian perturbation of semantic-group embeddings.

Four modes, matching the ablation grid:

    NONE              identity
    STANDARD_GAUSSIAN x + eps, eps ~ N(0, I)
    SCALAR_SIGMA      x + eps, eps ~ N(0, sigma_s^2 I), sigma_s = mean of
                      the per-dimension standard deviations of the bank
    ELEMENT_WISE      x + eps, eps_j ~ N(0, variance_j) independently,
                      variance_j the bank's per-dimension variance

Noise is applied only to group members, never to the training caption
embedding, and only at training time.  Every function takes an explicit
seed (or numpy Generator), so fixed seed means bit-reproducible output.
"""

from __future__ import annotations

import enum

import numpy as np

from .bank import BankStats
from .similarity import SemanticGroup


class NoiseMode(enum.Enum):
    NONE = "none"
    STANDARD_GAUSSIAN = "standard"
    SCALAR_SIGMA = "scalar"
    ELEMENT_WISE = "element"

    @classmethod
    def parse(cls, name: str) -> "NoiseMode":
        for mode in cls:
            if mode.value == name:
                return mode
        raise ValueError(f"unknown noise mode {name!r}; "
                         f"expected one of {[m.value for m in cls]}")


def scalar_sigma(stats: BankStats) -> float:
    """Mean of the per-dimension standard deviations."""
    return float(np.mean(np.sqrt(stats.variance)))


def perturb(embedding, mode: NoiseMode, stats: BankStats | None = None,
            rng=None) -> np.ndarray:
    """Return a noise-perturbed copy of one embedding vector."""
    x = np.asarray(embedding, dtype=np.float64)
    if mode is NoiseMode.NONE:
        return x.copy()
    gen = np.random.default_rng(rng)
    if mode is NoiseMode.STANDARD_GAUSSIAN:
        return x + gen.standard_normal(x.shape)
    if stats is None:
        raise ValueError(f"noise mode {mode.value!r} requires bank stats")
    if stats.variance.shape != x.shape:
        raise ValueError(
            f"stats dimension {stats.variance.shape[0]} does not match "
            f"embedding dimension {x.shape[0]}")
    if mode is NoiseMode.SCALAR_SIGMA:
        return x + gen.standard_normal(x.shape) * scalar_sigma(stats)
    if mode is NoiseMode.ELEMENT_WISE:
        return x + gen.standard_normal(x.shape) * np.sqrt(stats.variance)
    raise ValueError(f"unhandled noise mode {mode!r}")


def perturb_group(group: SemanticGroup, mode: NoiseMode,
                  stats: BankStats | None = None, rng=None) -> SemanticGroup:
    """Independently perturb each member embedding; indices and scores unchanged."""
    if mode is NoiseMode.NONE:
        return group
    gen = np.random.default_rng(rng)
    perturbed = [perturb(emb, mode, stats, gen) for _, emb, _ in group.members]
    return group.with_embeddings(np.asarray(perturbed))

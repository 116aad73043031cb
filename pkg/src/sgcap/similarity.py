"""Hybrid cosine/Jaccard scoring and Top-K semantic group selection.

All scoring runs in double precision over the float32 bank matrix so that
retrieval order is stable under accumulation error.  Functions here are
pure and safe to call concurrently over a shared bank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bank import SentenceBank, SentenceRecord


@dataclass(frozen=True)
class ScoredCandidate:
    """Bank entry with its cosine, Jaccard, and blended retrieval scores."""

    index: int
    cosine: float
    jaccard: float
    hybrid: float


@dataclass(frozen=True)
class SemanticGroup:
    """Top-k retrieved bank entries, best first.

    members are (bank index, embedding, hybrid score) triples sorted by
    nonincreasing score; ties broken by ascending bank index.
    """

    members: tuple[tuple[int, np.ndarray, float], ...]

    def __len__(self) -> int:
        return len(self.members)

    @property
    def indices(self) -> list[int]:
        return [m[0] for m in self.members]

    @property
    def embeddings(self) -> np.ndarray:
        """(k, d) float matrix of member embeddings in rank order."""
        return np.stack([m[1] for m in self.members])

    @property
    def scores(self) -> list[float]:
        return [m[2] for m in self.members]

    def with_embeddings(self, embeddings: np.ndarray) -> "SemanticGroup":
        """Copy of the group with member embeddings replaced (indices/scores kept)."""
        if len(embeddings) != len(self.members):
            raise ValueError("embedding count does not match group size")
        members = tuple((idx, np.asarray(e), score)
                        for (idx, _, score), e in zip(self.members, embeddings))
        return SemanticGroup(members=members)


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two finite vectors.

    A zero-norm vector is treated as uninformative and scores 0 rather
    than propagating NaN.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("cosine_similarity requires finite inputs")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def jaccard_similarity(a, b) -> float:
    """|A intersect B| / |A union B|, with 0/0 defined as 0."""
    a = set(a)
    b = set(b)
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


def hybrid_score(cosine: float, jaccard: float, sigma: float) -> float:
    """Blend of the two scores: sigma * cosine + (1 - sigma) * jaccard."""
    if not 0.0 <= sigma <= 1.0:
        raise ValueError(f"sigma must be in [0, 1], got {sigma}")
    return sigma * cosine + (1.0 - sigma) * jaccard


def score_all(query: SentenceRecord, bank: SentenceBank, sigma: float) -> list[ScoredCandidate]:
    """Score the query against every bank entry."""
    if not 0.0 <= sigma <= 1.0:
        raise ValueError(f"sigma must be in [0, 1], got {sigma}")
    q = np.asarray(query.embedding, dtype=np.float64)
    if not np.all(np.isfinite(q)):
        raise ValueError("query embedding contains non-finite values")
    mat = bank.matrix.astype(np.float64)
    norms = np.linalg.norm(mat, axis=1)
    qn = np.linalg.norm(q)
    if qn == 0.0:
        cosines = np.zeros(len(bank))
    else:
        denom = np.where(norms == 0.0, 1.0, norms * qn)
        cosines = np.where(norms == 0.0, 0.0, mat @ q / denom)
    out = []
    q_tokens = query.tokens
    for i, rec in enumerate(bank.records):
        j = jaccard_similarity(q_tokens, rec.tokens)
        c = float(cosines[i])
        out.append(ScoredCandidate(index=i, cosine=c, jaccard=j,
                                   hybrid=sigma * c + (1.0 - sigma) * j))
    return out


def select_group(query: SentenceRecord, bank: SentenceBank, sigma: float, k: int,
                 exclude_self: bool = True, query_index: int | None = None) -> SemanticGroup:
    """Top-k bank entries by hybrid score.

    When exclude_self is set and query_index names the query's own bank
    position, that entry is never selected (during training the caption is
    itself in the bank and would trivially top-rank).  Ties are broken by
    ascending bank index so the result matches a full sort exactly.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    excluded = query_index if (exclude_self and query_index is not None) else None
    available = len(bank) - (1 if excluded is not None else 0)
    if k > available:
        raise ValueError(f"k={k} exceeds the {available} available bank entries")
    scored = score_all(query, bank, sigma)
    if excluded is not None:
        scored = [s for s in scored if s.index != excluded]
    scored.sort(key=lambda s: (-s.hybrid, s.index))
    members = tuple((s.index, bank.records[s.index].embedding, s.hybrid)
                    for s in scored[:k])
    return SemanticGroup(members=members)

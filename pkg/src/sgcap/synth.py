"""Deterministic synthetic corpora for end-to-end runs without real encoders.

Sentences are rendered from subject-verb-object templates.  Each template
owns a random unit latent vector; a sentence embedding is its template
latent plus seeded noise, and each "video" is a stack of noisy copies of
its ground-truth sentence embedding.  By construction a video's pooled
frames are closer to their own sentence than to almost every other bank
entry, which is what the retrieval-quality checks rely on.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .inference import FrameSet

SUBJECTS = [
    "a man", "a woman", "a dog", "a cat", "a chef", "a girl", "a boy",
    "a band", "a robot", "a clown", "an athlete", "a teacher", "a farmer",
    "a pilot", "a monkey",
]
VERBS = [
    "plays", "rides", "throws", "catches", "paints", "cleans", "drives",
    "kicks", "builds", "cooks", "holds", "pushes", "spins", "lifts", "draws",
]
OBJECTS = [
    "a guitar", "a bicycle", "a ball", "a drum", "a fence", "a car", "a box",
    "a kite", "a piano", "a sandwich", "a ladder", "a wheel", "a table",
    "a flag", "a rope",
]
MODIFIERS = [
    "", "slowly", "quickly", "outside", "indoors", "carefully", "happily",
    "on stage", "in the park", "at night",
]

_STOPWORDS = frozenset(
    "a an the in on at of to is are and or with for by its his her their "
    "this that".split())
_PUNCT_RE = re.compile(r"[^\w\s]")


def lemma(word: str) -> str:
    """Cheap suffix lemmatizer good enough for the synthetic vocabulary."""
    if len(word) > 3 and word.endswith("ies"):
        return word[:-3] + "y"
    if len(word) > 4 and word.endswith(("ches", "shes", "xes", "ses", "zes")):
        return word[:-2]
    if len(word) > 3 and word.endswith("s") and not word.endswith("ss"):
        return word[:-1]
    return word


def heuristic_token_set(text: str) -> frozenset[str]:
    """Stopword-stripped lowercase lemma set.

    This is the synthetic-corpus fallback for the noun/verb token sets; real
    corpora get tagged sets from the export tooling instead.
    """
    words = _PUNCT_RE.sub(" ", text.lower()).split()
    return frozenset(lemma(w) for w in words if w not in _STOPWORDS)


@dataclass(frozen=True)
class SynthCorpus:
    """Sentences with embeddings plus one synthetic video per sentence."""

    records: tuple[tuple[str, frozenset[str], np.ndarray], ...]
    videos: tuple[FrameSet, ...]
    references: dict[str, list[str]]


def generate_corpus(size: int, dim: int, templates: int = 25, seed: int = 0,
                    n_frames: int = 12, sentence_noise: float = 0.15,
                    frame_noise: float = 0.2,
                    frame_drift: float = 0.4) -> SynthCorpus:
    """Build a deterministic synthetic corpus.

    size sentences are spread round-robin over the requested number of
    templates so no template dominates; same seed, same corpus.

    Video frames perturb the ground-truth sentence embedding two ways:
    i.i.d. noise per frame (frame_noise) plus a random-walk drift across
    the sequence (frame_drift), so the pooled mean carries a bias that
    averaging cannot remove while individual frames stay informative.
    """
    if size < 1:
        raise ValueError(f"size must be >= 1, got {size}")
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    max_templates = len(SUBJECTS) * len(VERBS) * len(OBJECTS)
    if not 1 <= templates <= max_templates:
        raise ValueError(f"templates must be in 1..{max_templates}")
    rng = np.random.default_rng([seed, 0xC0])

    triple_ids = rng.choice(max_templates, size=templates, replace=False)
    triples = []
    for t in triple_ids:
        s, rest = divmod(int(t), len(VERBS) * len(OBJECTS))
        v, o = divmod(rest, len(OBJECTS))
        triples.append((SUBJECTS[s], VERBS[v], OBJECTS[o]))
    latents = rng.normal(size=(templates, dim))
    latents /= np.linalg.norm(latents, axis=1, keepdims=True)

    records = []
    videos = []
    references: dict[str, list[str]] = {}
    for i in range(size):
        t = i % templates
        subj, verb, obj = triples[t]
        modifier = MODIFIERS[rng.integers(len(MODIFIERS))]
        text = f"{subj} {verb} {obj}" + (f" {modifier}" if modifier else "")
        embedding = latents[t] + sentence_noise * rng.normal(size=dim)
        records.append((text, heuristic_token_set(text),
                        embedding.astype(np.float32)))
        video_id = f"vid{i:05d}"
        steps = rng.normal(size=(n_frames, dim)) * frame_drift / np.sqrt(n_frames)
        frames = (embedding[None, :] + np.cumsum(steps, axis=0)
                  + frame_noise * rng.normal(size=(n_frames, dim)))
        videos.append(FrameSet(video_id=video_id,
                               frames=frames.astype(np.float32)))
        references[video_id] = [text]
    return SynthCorpus(records=tuple(records), videos=tuple(videos),
                       references=references)

import numpy as np
import pytest

from sgcap.bank import build_bank

WORDS = ["man", "woman", "dog", "cat", "guitar", "ball", "car", "ride",
         "play", "throw", "jump", "cook", "paint", "drum", "kite"]


def random_bank(rng, n, dim, max_tokens=4):
    """Synthetic bank with random embeddings and random small token sets."""
    corpus = []
    for i in range(n):
        n_tok = int(rng.integers(0, max_tokens + 1))
        tokens = set(rng.choice(WORDS, size=n_tok, replace=False)) if n_tok else set()
        emb = rng.normal(size=dim).astype(np.float32)
        corpus.append((f"sentence {i} " + " ".join(sorted(tokens)), tokens, emb))
    return build_bank(corpus)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sgcap.similarity import (cosine_similarity, hybrid_score,
                              jaccard_similarity, select_group)
from conftest import random_bank


class TestCosine:
    def test_self_similarity(self):
        v = np.array([1.0, 2.0, -3.0])
        assert cosine_similarity(v, v) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_closed_form_45_degrees(self):
        # (1,0) . (1,1) / (1 * sqrt(2)) = 1/sqrt(2)
        got = cosine_similarity([1.0, 0.0], [1.0, 1.0])
        assert got == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-9)

    def test_zero_norm_scores_zero(self):
        assert cosine_similarity([0.0, 0.0], [1.0, 2.0]) == 0.0
        assert cosine_similarity([1.0, 2.0], [0.0, 0.0]) == 0.0

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            cosine_similarity([np.inf, 0.0], [1.0, 0.0])

    def test_scale_invariance(self, rng):
        for _ in range(50):
            a = rng.normal(size=6)
            b = rng.normal(size=6)
            c = float(rng.uniform(0.01, 100.0))
            assert cosine_similarity(c * a, b) == pytest.approx(
                cosine_similarity(a, b), abs=1e-12)


class TestJaccard:
    def test_identical_nonempty(self):
        s = {"man", "play", "guitar"}
        assert jaccard_similarity(s, s) == 1.0

    def test_disjoint(self):
        assert jaccard_similarity({"a", "b"}, {"c"}) == 0.0

    def test_half_overlap(self):
        # {man, play, guitar} vs {man, play, piano}: 2 shared of 4 total
        a = {"man", "play", "guitar"}
        b = {"man", "play", "piano"}
        assert jaccard_similarity(a, b) == 0.5

    def test_both_empty(self):
        assert jaccard_similarity(set(), set()) == 0.0

    @given(st.sets(st.sampled_from("abcdefgh")), st.sets(st.sampled_from("abcdefgh")))
    def test_symmetric_and_bounded(self, a, b):
        j = jaccard_similarity(a, b)
        assert j == jaccard_similarity(b, a)
        assert 0.0 <= j <= 1.0


class TestHybrid:
    def test_blend(self):
        assert hybrid_score(0.8, 0.4, 0.5) == pytest.approx(0.6)

    def test_extremes(self):
        assert hybrid_score(0.8, 0.4, 1.0) == pytest.approx(0.8)
        assert hybrid_score(0.8, 0.4, 0.0) == pytest.approx(0.4)

    def test_sigma_out_of_range(self):
        for sigma in (-0.1, 1.1):
            with pytest.raises(ValueError):
                hybrid_score(0.5, 0.5, sigma)

    @given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0, 1),
           st.floats(0.01, 0.99))
    def test_monotone_in_both_scores(self, c, delta_c, j, sigma):
        base = hybrid_score(c, j, sigma)
        assert hybrid_score(min(1.0, c + abs(delta_c)), j, sigma) >= base - 1e-12
        assert hybrid_score(c, min(1.0, j + 0.1), sigma) >= base - 1e-12


def brute_force_group(query, query_index, bank, sigma, k, exclude_self):
    """Independent oracle: score everything, full sort, truncate."""
    rows = []
    for i, rec in enumerate(bank.records):
        if exclude_self and query_index is not None and i == query_index:
            continue
        c = cosine_similarity(query.embedding, rec.embedding)
        j = jaccard_similarity(query.tokens, rec.tokens)
        rows.append((i, sigma * c + (1 - sigma) * j))
    rows.sort(key=lambda r: (-r[1], r[0]))
    return [i for i, _ in rows[:k]]


class TestSelectGroup:
    def test_simple_ranking(self, rng):
        # scores engineered via cosine only (sigma=1): 0.9, 0.1, 0.5 pattern
        base = np.array([1.0, 0.0, 0.0], dtype=np.float32)
        mk = lambda ang: np.array([np.cos(ang), np.sin(ang), 0.0], dtype=np.float32)
        bank_corpus = [("a", set(), mk(0.2)), ("b", set(), mk(1.4)),
                       ("c", set(), mk(0.9))]
        from sgcap.bank import build_bank
        from sgcap.bank import SentenceRecord
        bank = build_bank(bank_corpus)
        query = SentenceRecord(text="q", tokens=frozenset(), embedding=base)
        group = select_group(query, bank, sigma=1.0, k=2, exclude_self=False)
        assert group.indices == [0, 2]

    def test_k_equals_bank_size(self, rng):
        bank = random_bank(rng, 8, 4)
        group = select_group(bank.records[0], bank, 0.5, k=8, exclude_self=False)
        assert sorted(group.indices) == list(range(8))

    def test_self_exclusion(self, rng):
        bank = random_bank(rng, 10, 4)
        q = 3
        group = select_group(bank.records[q], bank, 0.5, k=9,
                             exclude_self=True, query_index=q)
        assert q not in group.indices
        # the query scores sigma*1 + (1-sigma)*1 = 1 against itself, so
        # without exclusion it must appear
        group2 = select_group(bank.records[q], bank, 0.5, k=9,
                              exclude_self=False, query_index=q)
        assert q in group2.indices

    def test_k_too_large(self, rng):
        bank = random_bank(rng, 5, 4)
        with pytest.raises(ValueError):
            select_group(bank.records[0], bank, 0.5, k=5,
                         exclude_self=True, query_index=0)
        with pytest.raises(ValueError):
            select_group(bank.records[0], bank, 0.5, k=6, exclude_self=False)

    def test_sorted_nonincreasing_with_index_ties(self, rng):
        bank = random_bank(rng, 40, 6)
        group = select_group(bank.records[0], bank, 0.5, k=20,
                             exclude_self=True, query_index=0)
        scores = group.scores
        assert all(scores[i] >= scores[i + 1] for i in range(len(scores) - 1))
        for i in range(len(scores) - 1):
            if scores[i] == scores[i + 1]:
                assert group.indices[i] < group.indices[i + 1]

    def test_matches_brute_force(self, rng):
        for trial in range(100):
            n = int(rng.integers(2, 40))
            dim = int(rng.integers(2, 10))
            bank = random_bank(rng, n, dim)
            qi = int(rng.integers(n))
            exclude = bool(rng.integers(2))
            k = int(rng.integers(1, n - (1 if exclude else 0) + 1))
            sigma = float(rng.choice([0.0, 0.3, 0.5, 1.0]))
            got = select_group(bank.records[qi], bank, sigma, k,
                               exclude_self=exclude, query_index=qi)
            want = brute_force_group(bank.records[qi], qi, bank, sigma, k, exclude)
            assert got.indices == want

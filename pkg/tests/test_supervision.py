import math

import numpy as np
import pytest

from sgcap.supervision import (build_target, pss_loss, sample_target, softmax)


def softmax_oracle(scores):
    """Independent closed-form softmax used to freeze expected values."""
    exps = [math.exp(s) for s in scores]
    total = sum(exps)
    return [e / total for e in exps]


CAPTION = ("a", "man", "plays", "<eos>")
GROUP = (("a", "man", "plays", "piano", "<eos>"), ("a", "dog", "runs", "<eos>"))


class TestBuildTarget:
    def test_degenerate_group(self):
        target = build_target(CAPTION, [], [], lam=1.0)
        assert len(target) == 1
        assert target.probs.tolist() == [1.0]
        assert target.candidates[0] == CAPTION

    def test_uniform_when_scores_equal_lambda(self):
        target = build_target(CAPTION, GROUP, [1.0, 1.0], lam=1.0)
        assert np.allclose(target.probs, 1.0 / 3.0)

    def test_softmax_closed_form(self):
        # oracle: softmax([1, 0.6, 0.2])
        # = exp(.)/sum = [0.471776.., 0.316236.., 0.211987..]
        expected = softmax_oracle([1.0, 0.6, 0.2])
        target = build_target(CAPTION, GROUP, [0.6, 0.2], lam=1.0)
        assert np.allclose(target.probs, expected, atol=1e-12)
        assert target.probs[0] == pytest.approx(0.4717762, abs=1e-6)
        assert target.probs[1] == pytest.approx(0.3162411, abs=1e-6)
        assert target.probs[2] == pytest.approx(0.2119827, abs=1e-6)

    def test_probs_sum_to_one(self, rng):
        for _ in range(50):
            k = int(rng.integers(0, 8))
            scores = rng.normal(size=k)
            target = build_target(CAPTION, [GROUP[0]] * k, scores,
                                  lam=float(rng.uniform(0.1, 3.0)))
            assert abs(target.probs.sum() - 1.0) <= 1e-9

    def test_caption_first_with_lambda_score(self):
        target = build_target(CAPTION, GROUP, [0.9, 0.1], lam=2.0)
        assert target.candidates[0] == CAPTION
        assert target.raw_scores[0] == 2.0

    def test_invalid_lambda(self):
        for lam in (0.0, -1.0, math.nan):
            with pytest.raises(ValueError):
                build_target(CAPTION, [], [], lam=lam)

    def test_score_count_mismatch(self):
        with pytest.raises(ValueError):
            build_target(CAPTION, GROUP, [0.5], lam=1.0)

    def test_shift_invariance(self, rng):
        scores = rng.normal(size=4)
        base = build_target(CAPTION, [GROUP[0]] * 4, scores, lam=1.0)
        for c in (-3.0, 0.5, 10.0):
            shifted = softmax(np.concatenate(([1.0], scores)) + c)
            assert np.all(np.abs(shifted - base.probs) <= 1e-9)


class TestSampleTarget:
    def test_single_candidate_always_zero(self):
        target = build_target(CAPTION, [], [], lam=1.0)
        assert all(sample_target(target, rng=s) == 0 for s in range(20))

    def test_two_way_frequency(self):
        # raw scores [c, c] give probs [0.5, 0.5] for any c = lambda
        target = build_target(CAPTION, [GROUP[0]], [1.0], lam=1.0)
        gen = np.random.default_rng(5)
        draws = np.array([sample_target(target, gen) for _ in range(100_000)])
        freq = np.bincount(draws, minlength=2) / draws.size
        assert np.all(np.abs(freq - 0.5) <= 0.01)

    def test_deterministic_per_seed(self):
        target = build_target(CAPTION, GROUP, [0.3, 0.8], lam=1.0)
        a = [sample_target(target, rng=99) for _ in range(10)]
        b = [sample_target(target, rng=99) for _ in range(10)]
        assert a == b


class TestPssLoss:
    def test_degenerate_group_both_modes(self):
        target = build_target(CAPTION, [], [], lam=1.0)
        assert pss_loss([2.5], target, "mixture") == 2.5
        assert pss_loss([2.5], target, "sampled", rng=0) == 2.5

    def test_equal_ces_give_that_value(self):
        target = build_target(CAPTION, GROUP, [0.4, 0.9], lam=1.0)
        assert pss_loss([1.3, 1.3, 1.3], target, "mixture") == pytest.approx(1.3)

    def test_mixture_dot_product(self):
        # oracle: dot(probs, ce) with probs forced to [0.5, 0.3, 0.2]
        # softmax(log p) reproduces any target distribution
        lam_scores = np.log([0.5, 0.3, 0.2])
        target = build_target(CAPTION, GROUP, lam_scores[1:] - lam_scores[0] + 1.0,
                              lam=1.0)
        assert np.allclose(target.probs, [0.5, 0.3, 0.2], atol=1e-12)
        assert pss_loss([1.0, 2.0, 3.0], target, "mixture") == pytest.approx(1.7)

    def test_length_mismatch(self):
        target = build_target(CAPTION, GROUP, [0.4, 0.9], lam=1.0)
        with pytest.raises(ValueError):
            pss_loss([1.0, 2.0], target, "mixture")

    def test_mixture_invariant_under_joint_permutation(self, rng):
        scores = rng.normal(size=3)
        ce = rng.uniform(0.5, 4.0, size=4)
        target = build_target(CAPTION, [GROUP[0]] * 3, scores, lam=1.0)
        base = pss_loss(ce, target, "mixture")
        perm = rng.permutation(4)
        # permuting (probs, ce) jointly cannot change the weighted sum
        probs = target.probs[perm]
        assert np.dot(probs, ce[perm]) == pytest.approx(base, abs=1e-12)

    def test_mixture_within_ce_bounds(self, rng):
        for _ in range(30):
            k = int(rng.integers(1, 6))
            ce = rng.uniform(0.0, 5.0, size=k + 1)
            target = build_target(CAPTION, [GROUP[0]] * k, rng.normal(size=k),
                                  lam=1.0)
            loss = pss_loss(ce, target, "mixture")
            assert ce.min() - 1e-12 <= loss <= ce.max() + 1e-12

    def test_sampled_converges_to_mixture(self):
        target = build_target(CAPTION, GROUP, [0.6, 0.2], lam=1.0)
        ce = [1.0, 2.0, 3.0]
        mixture = pss_loss(ce, target, "mixture")
        gen = np.random.default_rng(17)
        draws = [pss_loss(ce, target, "sampled", gen) for _ in range(10_000)]
        assert abs(np.mean(draws) - mixture) <= 0.02 * mixture

    def test_unknown_mode(self):
        target = build_target(CAPTION, [], [], lam=1.0)
        with pytest.raises(ValueError):
            pss_loss([1.0], target, "maximum")

import numpy as np
import pytest
from sklearn.base import clone

from sgcap.bank import build_bank
from sgcap.estimator import SemanticGroupCaptioner
from sgcap.inference import FrameSet
from sgcap.synth import generate_corpus


def fitted_captioner(size=20, dim=8, **overrides):
    corpus = generate_corpus(size=size, dim=dim, templates=5, seed=1)
    opts = dict(k=2, max_epochs=2, batch_size=8, n_layers=1, n_heads=2,
                ffn_dim=16, fusion_ffn_dim=16, learning_rate=1e-3,
                beam_size=2, random_state=0)
    opts.update(overrides)
    est = SemanticGroupCaptioner(**opts)
    est.fit(build_bank(corpus.records))
    return est, corpus


def test_get_set_params_round_trip():
    est = SemanticGroupCaptioner(sigma=0.3, k=7)
    params = est.get_params()
    assert params["sigma"] == 0.3
    assert params["k"] == 7
    est.set_params(sigma=0.9)
    assert est.sigma == 0.9


def test_clone_preserves_params():
    est = SemanticGroupCaptioner(k=3, tau=0.1, lam=2.0)
    cloned = clone(est)
    assert cloned.get_params() == est.get_params()


def test_fit_accepts_corpus_triples():
    corpus = generate_corpus(size=12, dim=6, templates=4, seed=2)
    est = SemanticGroupCaptioner(k=1, max_epochs=1, batch_size=4, n_layers=1,
                                 n_heads=2, ffn_dim=8, fusion_ffn_dim=8)
    est.fit(list(corpus.records))
    assert hasattr(est, "params_")
    assert est.bank_.dim == 6


def test_predict_before_fit_raises():
    est = SemanticGroupCaptioner()
    with pytest.raises(RuntimeError, match="not fitted"):
        est.predict([np.zeros((3, 8))])


def test_predict_returns_captions():
    est, corpus = fitted_captioner()
    captions = est.predict(corpus.videos[:3])
    assert len(captions) == 3
    assert all(isinstance(c, str) for c in captions)


def test_predict_accepts_plain_arrays():
    est, corpus = fitted_captioner()
    arrays = [v.frames for v in corpus.videos[:2]]
    assert len(est.predict(arrays)) == 2


def test_predict_rejects_wrong_dim():
    est, _ = fitted_captioner(dim=8)
    with pytest.raises(ValueError, match="columns"):
        est.predict([np.zeros((3, 5))])


def test_predict_hypotheses_ranked():
    est, corpus = fitted_captioner()
    hyps = est.predict_hypotheses(corpus.videos[:1])[0]
    scores = [h.normalized_score for h in hyps]
    assert scores == sorted(scores, reverse=True)


def test_score_is_bleu1():
    est, corpus = fitted_captioner()
    videos = list(corpus.videos[:4])
    refs = [corpus.references[v.video_id] for v in videos]
    value = est.score(videos, refs)
    assert 0.0 <= value <= 1.0


def test_refit_is_deterministic():
    est1, corpus = fitted_captioner()
    est2 = clone(est1)
    est2.fit(est1.bank_)
    a = est1.predict(corpus.videos[:2])
    b = est2.predict(corpus.videos[:2])
    assert a == b


def test_frame_set_passthrough():
    est, corpus = fitted_captioner()
    fs = FrameSet("custom", corpus.videos[0].frames)
    assert est.predict([fs])[0] == est.predict([corpus.videos[0]])[0]

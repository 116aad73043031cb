"""Scikit-learn style front door: fit on a sentence bank, predict captions.

The estimator wraps the training and generation pipelines so the engine
composes with sklearn tooling (get_params/set_params, clone, search).  Fit
consumes text-side data only; predict consumes per-video frame embeddings.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .bank import SentenceBank, build_bank
from .inference import FrameSet, generate
from .metrics import EvalPair, bleu
from .training import TrainConfig, train
from .validation import as_matrix


class SemanticGroupCaptioner(BaseEstimator):
    """Caption generator trained from sentence embeddings alone.

    Parameters mirror TrainConfig plus the generation knobs.  After fit,
    the trained tensors live in params_, the token table in vocab_, and the
    retrieval bank in bank_.
    """

    def __init__(self, sigma=0.5, lam=1.0, k=5, tau=0.01,
                 noise_mode="element", loss_mode="mixture",
                 learning_rate=1e-4, batch_size=256, max_epochs=50,
                 early_stop_patience=5, d_model=None, n_layers=2, n_heads=4,
                 ffn_dim=256, fusion_ffn_dim=256, max_len=30,
                 beam_size=5, random_state=0):
        self.sigma = sigma
        self.lam = lam
        self.k = k
        self.tau = tau
        self.noise_mode = noise_mode
        self.loss_mode = loss_mode
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.early_stop_patience = early_stop_patience
        self.d_model = d_model
        self.n_layers = n_layers
        self.n_heads = n_heads
        self.ffn_dim = ffn_dim
        self.fusion_ffn_dim = fusion_ffn_dim
        self.max_len = max_len
        self.beam_size = beam_size
        self.random_state = random_state

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            sigma=self.sigma, lam=self.lam, k=self.k,
            noise_mode=self.noise_mode, loss_mode=self.loss_mode,
            learning_rate=self.learning_rate, batch_size=self.batch_size,
            max_epochs=self.max_epochs,
            early_stop_patience=self.early_stop_patience,
            seed=self.random_state, d_model=self.d_model,
            n_layers=self.n_layers, n_heads=self.n_heads,
            ffn_dim=self.ffn_dim, fusion_ffn_dim=self.fusion_ffn_dim,
            max_len=self.max_len)

    def fit(self, X, y=None):
        """Train on a SentenceBank or an iterable of
        (text, token-set, embedding) triples.  Returns self."""
        bank = X if isinstance(X, SentenceBank) else build_bank(X)
        result = train(bank, self._train_config())
        self.bank_ = bank
        self.params_ = result.params
        self.vocab_ = result.vocab
        self.training_log_ = result.log
        return self

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise RuntimeError("this SemanticGroupCaptioner is not fitted yet")

    def _as_frame_set(self, item, i: int) -> FrameSet:
        if isinstance(item, FrameSet):
            return item
        frames = as_matrix(item, cols=self.bank_.dim, name=f"X[{i}]")
        return FrameSet(video_id=f"video{i}", frames=frames.astype(np.float32))

    def predict(self, X) -> list[str]:
        """Caption each element of X (FrameSet or (N_f, d) array)."""
        self._check_fitted()
        captions = []
        for i, item in enumerate(X):
            frames = self._as_frame_set(item, i)
            hyps = generate(frames, self.bank_, self.params_, k=self.k,
                            tau=self.tau, beam_size=self.beam_size,
                            max_len=self.max_len)
            captions.append(self.vocab_.decode(hyps[0].tokens))
        return captions

    def predict_hypotheses(self, X):
        """Full ranked hypothesis lists instead of the top caption text."""
        self._check_fitted()
        return [generate(self._as_frame_set(item, i), self.bank_, self.params_,
                         k=self.k, tau=self.tau, beam_size=self.beam_size,
                         max_len=self.max_len)
                for i, item in enumerate(X)]

    def score(self, X, y) -> float:
        """Corpus BLEU-1 of the predicted captions against reference lists."""
        captions = self.predict(X)
        y = list(y)
        if len(y) != len(captions):
            raise ValueError("one reference list per video required")
        pairs = [EvalPair.from_texts(c, refs if not isinstance(refs, str) else [refs])
                 for c, refs in zip(captions, y)]
        return bleu(pairs, n=1)

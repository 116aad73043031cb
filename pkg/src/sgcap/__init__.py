"""Text-only-training video captioning on embedding-level data.

Train a fusion + decoder stack from a sentence bank alone, then caption
videos by projecting frame embeddings into the text space and decoding
with beam search.  See the README for the CLI pipeline.
"""

from .bank import (BankStats, SentenceBank, SentenceRecord, build_bank,
                   compute_stats, effective_dimension, load_bank, save_bank)
from .errors import ConfigError, FormatError, NumericalError, SGCapError
from .estimator import SemanticGroupCaptioner
from .inference import (CaptionHypothesis, FrameSet, beam_search,
                        domain_transfer, generate, load_frames, pool_frames,
                        sample_frames, save_frames)
from .metrics import EvalPair, bleu, cider_d, rouge_l
from .model import (ModelConfig, ModelParams, Vocabulary, decoder_forward,
                    fusion_forward, init_params, load_checkpoint,
                    pss_forward_backward, save_checkpoint, teacher_forced_ce)
from .noise import NoiseMode, perturb, perturb_group
from .similarity import (ScoredCandidate, SemanticGroup, cosine_similarity,
                         hybrid_score, jaccard_similarity, select_group)
from .supervision import (SupervisionTarget, build_target, pss_loss,
                          sample_target)
from .training import TrainConfig, TrainResult, adamw_step, adamw_update, train

__version__ = "0.1.0"

__all__ = [
    "BankStats", "CaptionHypothesis", "ConfigError", "EvalPair", "FormatError",
    "FrameSet", "ModelConfig", "ModelParams", "NoiseMode", "NumericalError",
    "SGCapError", "ScoredCandidate", "SemanticGroup", "SemanticGroupCaptioner",
    "SentenceBank", "SentenceRecord", "SupervisionTarget", "TrainConfig",
    "TrainResult", "Vocabulary", "adamw_step", "adamw_update", "beam_search",
    "bleu", "build_bank", "build_target", "cider_d", "compute_stats",
    "cosine_similarity", "decoder_forward", "domain_transfer",
    "effective_dimension", "fusion_forward", "generate", "hybrid_score",
    "init_params", "jaccard_similarity", "load_bank", "load_checkpoint",
    "load_frames", "perturb", "perturb_group", "pool_frames", "pss_loss",
    "pss_forward_backward", "rouge_l", "sample_frames", "sample_target",
    "save_bank", "save_checkpoint", "save_frames", "select_group",
    "teacher_forced_ce", "train",
]

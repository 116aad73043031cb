"""Embedding export tooling for the semantic-group captioning engine."""

from .encoders import (ClipEncoder, EncoderLoadError, HashedImageEncoder,
                       HashedTextEncoder, make_encoder)
from .formats import write_bank, write_frames
from .frames import DecodeError, extract_frames
from .tagging import NltkTagger, RuleBasedTagger, TaggerLoadError, make_tagger

__version__ = "0.1.0"

__all__ = [
    "ClipEncoder", "DecodeError", "EncoderLoadError", "HashedImageEncoder",
    "HashedTextEncoder", "NltkTagger", "RuleBasedTagger", "TaggerLoadError",
    "extract_frames", "make_encoder", "make_tagger", "write_bank",
    "write_frames",
]

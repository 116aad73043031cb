"""Text and image encoders producing the embeddings the engine consumes.

The canonical choice is a pretrained dual encoder (the 512-dimensional
CLIP ViT-B/32); it needs downloaded weights, so environments without them
get a clear load failure.  The "hashed" backend is a deterministic,
dependency-free stand-in: it has no semantics to speak of, but it is
stable across runs and machines, which is all the format contract and the
pipeline plumbing need.
"""

from __future__ import annotations

import hashlib

import numpy as np


class EncoderLoadError(RuntimeError):
    """An encoder backend could not be initialized."""


def _feature_vector(feature: bytes, dim: int) -> np.ndarray:
    """Deterministic unit-variance pseudo-random vector for one feature.

    Seeded from a BLAKE2 digest so results do not depend on Python's
    per-process string hashing.
    """
    digest = hashlib.blake2b(feature, digest_size=8).digest()
    seed = int.from_bytes(digest, "little")
    return np.random.default_rng(seed).standard_normal(dim)


class HashedTextEncoder:
    """Bag of hashed unigram+bigram features under a random projection."""

    def __init__(self, dim: int = 512):
        if dim < 2:
            raise ValueError(f"dim must be >= 2, got {dim}")
        self.dim = dim

    def _features(self, text: str) -> list[bytes]:
        words = text.lower().split()
        feats = [w.encode("utf-8") for w in words]
        feats += [f"{a} {b}".encode("utf-8") for a, b in zip(words, words[1:])]
        return feats or [b"<empty>"]

    def encode_texts(self, texts) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            for feat in self._features(text):
                out[i] += _feature_vector(b"txt:" + feat, self.dim)
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        out /= np.where(norms == 0.0, 1.0, norms)
        return out.astype(np.float32)


class HashedImageEncoder:
    """Coarse pixel-statistics features under a fixed random projection.

    Frames are resized to an 8x8 RGB thumbnail; the flattened values are
    projected to the target dimension with a seeded Gaussian matrix.
    Identical frames map to identical embeddings.
    """

    _THUMB = 8

    def __init__(self, dim: int = 512):
        if dim < 2:
            raise ValueError(f"dim must be >= 2, got {dim}")
        self.dim = dim
        rng = np.random.default_rng(
            int.from_bytes(hashlib.blake2b(b"img-proj", digest_size=8).digest(),
                           "little"))
        n_features = self._THUMB * self._THUMB * 3
        self._proj = rng.standard_normal((n_features, dim)) / np.sqrt(n_features)

    def encode_images(self, images) -> np.ndarray:
        import cv2

        rows = []
        for img in images:
            arr = np.asarray(img)
            if arr.ndim == 2:
                arr = np.stack([arr] * 3, axis=-1)
            thumb = cv2.resize(arr.astype(np.float32),
                               (self._THUMB, self._THUMB),
                               interpolation=cv2.INTER_AREA)
            feats = thumb.reshape(-1) / 255.0 - 0.5
            rows.append(feats @ self._proj)
        out = np.asarray(rows, dtype=np.float64)
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        out /= np.where(norms == 0.0, 1.0, norms)
        return out.astype(np.float32)


class ClipEncoder:
    """Pretrained dual encoder (512-dimensional ViT-B/32 by default).

    Wraps the transformers implementation for both text and images.
    Raises EncoderLoadError when the package or the weights are missing.
    """

    def __init__(self, model: str = "openai/clip-vit-base-patch32"):
        try:
            import torch  # noqa: F401
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise EncoderLoadError(
                f"transformers/torch not installed: {exc}") from exc
        try:
            self._model = CLIPModel.from_pretrained(model)
            self._processor = CLIPProcessor.from_pretrained(model)
        except Exception as exc:
            raise EncoderLoadError(
                f"cannot load dual-encoder weights {model!r}: {exc}") from exc
        self._model.eval()
        self.dim = int(self._model.config.projection_dim)

    def encode_texts(self, texts) -> np.ndarray:
        import torch

        with torch.no_grad():
            inputs = self._processor(text=list(texts), return_tensors="pt",
                                     padding=True, truncation=True)
            feats = self._model.get_text_features(**inputs)
        return feats.cpu().numpy().astype(np.float32)

    def encode_images(self, images) -> np.ndarray:
        import torch
        from PIL import Image

        pil = [Image.fromarray(np.asarray(img)) for img in images]
        with torch.no_grad():
            inputs = self._processor(images=pil, return_tensors="pt")
            feats = self._model.get_image_features(**inputs)
        return feats.cpu().numpy().astype(np.float32)


def make_encoder(name: str, dim: int = 512, clip_model: str | None = None):
    """Encoder factory: 'hashed' or 'clip-vit-b32' (optionally a local path)."""
    if name == "hashed":
        return HashedTextEncoder(dim), HashedImageEncoder(dim)
    if name == "clip-vit-b32":
        enc = ClipEncoder(clip_model or "openai/clip-vit-base-patch32")
        return enc, enc
    raise ValueError(f"unknown encoder {name!r}; expected 'hashed' or "
                     f"'clip-vit-b32'")

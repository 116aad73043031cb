"""Sentence bank: texts, noun/verb token sets, embeddings, and corpus statistics.

The bank is the retrieval substrate for group selection, the noise model,
and visual-to-text domain transfer.  It is immutable after construction and
safe to share across concurrent readers.

On-disk format ("SGCB", little-endian):

    magic    4 bytes  b"SGCB"
    version  u32      currently 1
    N_s      u64      number of records
    d        u32      embedding dimension
    per record:
        text_len   u32, then UTF-8 bytes
        n_tokens   u16, then per token: u16 length + UTF-8 bytes
        embedding  d * float32

Token sets are written sorted so that save -> load -> save is byte-identical.
Statistics are always recomputed from the embeddings, never stored.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError

BANK_MAGIC = b"SGCB"
BANK_VERSION = 1

# small relative slack for eigenvalues of a PSD covariance matrix
_EIG_TOL = 1e-8


@dataclass(frozen=True)
class SentenceRecord:
    """One bank entry: caption text, its noun/verb token set, its embedding."""

    text: str
    tokens: frozenset[str]
    embedding: np.ndarray  # (d,) float32

    def __post_init__(self):
        emb = np.asarray(self.embedding, dtype=np.float32)
        if emb.ndim != 1:
            raise ValueError(f"embedding must be 1-D, got shape {emb.shape}")
        if not np.all(np.isfinite(emb)):
            raise ValueError("embedding contains non-finite values")
        object.__setattr__(self, "embedding", emb)
        object.__setattr__(self, "tokens", frozenset(self.tokens))


@dataclass(frozen=True)
class SentenceBank:
    """Ordered collection of SentenceRecord sharing one embedding dimension."""

    records: tuple[SentenceRecord, ...]
    dim: int
    _matrix: np.ndarray = field(repr=False, compare=False, default=None)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def matrix(self) -> np.ndarray:
        """(N_s, d) float32 view of all embeddings, row i = record i."""
        return self._matrix

    def texts(self) -> list[str]:
        return [r.text for r in self.records]


def build_bank(corpus) -> SentenceBank:
    """Build a bank from (text, token-set, embedding) triples.

    Corpus order is preserved; record indices are stable identifiers.
    Raises ValueError on an empty corpus or mismatched embedding dimensions.
    """
    corpus = list(corpus)
    if not corpus:
        raise ValueError("corpus is empty")
    records = []
    dim = None
    for i, (text, tokens, embedding) in enumerate(corpus):
        rec = SentenceRecord(text=str(text), tokens=frozenset(tokens),
                             embedding=embedding)
        if dim is None:
            dim = rec.embedding.shape[0]
        elif rec.embedding.shape[0] != dim:
            raise ValueError(
                f"record {i} has dimension {rec.embedding.shape[0]}, "
                f"expected {dim}")
        records.append(rec)
    matrix = np.stack([r.embedding for r in records]).astype(np.float32)
    return SentenceBank(records=tuple(records), dim=dim, _matrix=matrix)


@dataclass(frozen=True)
class BankStats:
    """Per-dimension corpus statistics of the bank embeddings.

    mean and variance are population quantities (divisor N_s).
    covariance_eigenvalues are the eigenvalues of the d x d covariance of
    mean-centered embeddings, sorted nonincreasing, clamped at zero.
    """

    mean: np.ndarray
    variance: np.ndarray
    covariance_eigenvalues: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))
        object.__setattr__(self, "variance",
                           np.asarray(self.variance, dtype=np.float64))
        eig = np.asarray(self.covariance_eigenvalues, dtype=np.float64)
        object.__setattr__(self, "covariance_eigenvalues", eig)
        if np.any(self.variance < 0):
            raise ValueError("variance must be nonnegative")
        if np.any(np.diff(eig) > 0):
            raise ValueError("eigenvalues must be sorted nonincreasing")
        if np.any(eig < 0):
            raise ValueError("eigenvalues must be nonnegative (clamp before use)")


def compute_stats(bank: SentenceBank) -> BankStats:
    """Per-dimension mean/variance and covariance eigenvalues of the bank.

    Variance uses divisor N_s (population form).  Eigenvalues come from the
    symmetric covariance of mean-centered embeddings; tiny negatives from
    round-off are clamped to 0.
    """
    x = bank.matrix.astype(np.float64)
    n = x.shape[0]
    mean = x.mean(axis=0)
    centered = x - mean
    variance = np.mean(centered ** 2, axis=0)
    cov = centered.T @ centered / n
    eig = np.linalg.eigvalsh(cov)[::-1]  # eigvalsh returns ascending
    scale = max(1.0, float(eig[0])) if eig.size else 1.0
    if np.any(eig < -_EIG_TOL * scale):
        raise ValueError("covariance eigenvalue significantly negative; "
                         "input embeddings are numerically unsound")
    eig = np.clip(eig, 0.0, None)
    return BankStats(mean=mean, variance=variance, covariance_eigenvalues=eig)


def effective_dimension(stats: BankStats, gamma: float) -> int:
    """Smallest d' whose leading eigenvalues explain a gamma fraction of variance.

    gamma must lie in (0, 1].  Raises ValueError when all eigenvalues are zero.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must be in (0, 1], got {gamma}")
    eig = stats.covariance_eigenvalues
    cumulative = np.cumsum(eig)
    total = float(cumulative[-1]) if eig.size else 0.0
    if total <= 0.0:
        raise ValueError("all covariance eigenvalues are zero")
    # dividing by cumulative[-1] keeps the final ratio exactly 1.0, so
    # gamma=1.0 resolves to the last nonzero eigenvalue (trailing zeros
    # add nothing to the running sum)
    ratios = cumulative / total
    return int(np.argmax(ratios >= gamma)) + 1


def save_bank(bank: SentenceBank, path) -> None:
    """Write the bank in SGCB format (see module docstring)."""
    with open(path, "wb") as fh:
        fh.write(BANK_MAGIC)
        fh.write(struct.pack("<IQI", BANK_VERSION, len(bank), bank.dim))
        for rec in bank.records:
            text_bytes = rec.text.encode("utf-8")
            fh.write(struct.pack("<I", len(text_bytes)))
            fh.write(text_bytes)
            tokens = sorted(rec.tokens)
            if len(tokens) > 0xFFFF:
                raise ValueError(f"record has {len(tokens)} tokens; limit is 65535")
            fh.write(struct.pack("<H", len(tokens)))
            for tok in tokens:
                tok_bytes = tok.encode("utf-8")
                fh.write(struct.pack("<H", len(tok_bytes)))
                fh.write(tok_bytes)
            fh.write(rec.embedding.astype("<f4").tobytes())


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise FormatError(f"truncated bank file while reading {what}")
    return data


def load_bank(path) -> SentenceBank:
    """Read an SGCB file back into a SentenceBank.

    Raises FormatError on bad magic, unknown version, truncation, or
    non-finite embedding values.
    """
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != BANK_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {BANK_MAGIC!r}")
        version, n_records, dim = struct.unpack("<IQI", _read_exact(fh, 16, "header"))
        if version != BANK_VERSION:
            raise FormatError(f"unsupported bank version {version}")
        if n_records < 1:
            raise FormatError("bank must contain at least one record")
        if dim < 1:
            raise FormatError(f"invalid embedding dimension {dim}")
        corpus = []
        for i in range(n_records):
            (text_len,) = struct.unpack("<I", _read_exact(fh, 4, f"record {i} text length"))
            text = _read_exact(fh, text_len, f"record {i} text").decode("utf-8")
            (n_tokens,) = struct.unpack("<H", _read_exact(fh, 2, f"record {i} token count"))
            tokens = set()
            for j in range(n_tokens):
                (tok_len,) = struct.unpack(
                    "<H", _read_exact(fh, 2, f"record {i} token {j} length"))
                tokens.add(_read_exact(fh, tok_len, f"record {i} token {j}").decode("utf-8"))
            raw = _read_exact(fh, 4 * dim, f"record {i} embedding")
            embedding = np.frombuffer(raw, dtype="<f4").copy()
            if not np.all(np.isfinite(embedding)):
                raise FormatError(f"record {i} embedding contains non-finite values")
            corpus.append((text, tokens, embedding))
        trailing = fh.read(1)
        if trailing:
            raise FormatError("trailing bytes after final record")
    return build_bank(corpus)

"""Corpus-level caption metrics: BLEU-n, ROUGE-L, CIDEr-D.

Metric values are tokenization-sensitive, so one canonical tokenizer is
applied to candidates and references alike: lowercase, strip punctuation,
split on whitespace.  Constants follow the standard formulations:
ROUGE-L uses beta = 1.2, CIDEr-D uses n-grams up to 4, a length-penalty
sigma of 6, and the final x10 scaling.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass

_PUNCT_RE = re.compile(r"[^\w\s]")

ROUGE_BETA = 1.2
CIDER_SIGMA = 6.0
CIDER_MAX_N = 4


def tokenize(text: str) -> tuple[str, ...]:
    """Lowercase, replace punctuation with spaces, split on whitespace."""
    return tuple(_PUNCT_RE.sub(" ", text.lower()).split())


@dataclass(frozen=True)
class EvalPair:
    """One candidate caption with its (nonempty) reference set."""

    candidate: tuple[str, ...]
    references: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if not self.references:
            raise ValueError("references must be nonempty")
        object.__setattr__(self, "candidate", tuple(self.candidate))
        object.__setattr__(self, "references",
                           tuple(tuple(r) for r in self.references))

    @classmethod
    def from_texts(cls, candidate: str, references) -> "EvalPair":
        return cls(candidate=tokenize(candidate),
                   references=tuple(tokenize(r) for r in references))


def _ngrams(tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(pairs, n: int = 4) -> float:
    """Corpus BLEU: clipped n-gram precision, geometric mean over orders
    1..n, times the brevity penalty.  Any zero precision gives 0."""
    if not 1 <= n <= 4:
        raise ValueError(f"n must be in 1..4, got {n}")
    pairs = list(pairs)
    if not pairs:
        raise ValueError("no evaluation pairs")
    matched = [0] * n
    total = [0] * n
    cand_len = 0
    ref_len = 0
    for pair in pairs:
        cand = pair.candidate
        cand_len += len(cand)
        # closest reference length; ties broken toward the shorter one
        ref_len += min((abs(len(r) - len(cand)), len(r))
                       for r in pair.references)[1]
        for m in range(1, n + 1):
            counts = _ngrams(cand, m)
            if not counts:
                continue
            max_ref = Counter()
            for ref in pair.references:
                for g, c in _ngrams(ref, m).items():
                    if c > max_ref[g]:
                        max_ref[g] = c
            matched[m - 1] += sum(min(c, max_ref[g]) for g, c in counts.items())
            total[m - 1] += sum(counts.values())
    if cand_len == 0:
        return 0.0
    log_p = 0.0
    for m in range(n):
        if matched[m] == 0 or total[m] == 0:
            return 0.0
        log_p += math.log(matched[m] / total[m])
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return bp * math.exp(log_p / n)


def _lcs_length(a, b) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(pairs) -> float:
    """Mean over pairs of the best LCS F-measure across references."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("no evaluation pairs")
    beta_sq = ROUGE_BETA ** 2
    scores = []
    for pair in pairs:
        best = 0.0
        for ref in pair.references:
            lcs = _lcs_length(pair.candidate, ref)
            if lcs == 0:
                continue
            prec = lcs / len(pair.candidate)
            rec = lcs / len(ref)
            f = (1 + beta_sq) * prec * rec / (rec + beta_sq * prec)
            best = max(best, f)
        scores.append(best)
    return sum(scores) / len(scores)


def cider_d(pairs) -> float:
    """CIDEr-D: TF-IDF n-gram cosine with count clipping and a Gaussian
    length penalty, averaged over n = 1..4 and scaled by 10."""
    pairs = list(pairs)
    if len(pairs) < 2:
        raise ValueError("CIDEr-D needs a corpus of at least 2 candidates "
                         "(document frequencies come from the references)")
    # document frequency of each n-gram over the reference sets
    doc_freq = [Counter() for _ in range(CIDER_MAX_N)]
    for pair in pairs:
        for m in range(1, CIDER_MAX_N + 1):
            seen = set()
            for ref in pair.references:
                seen.update(_ngrams(ref, m).keys())
            for g in seen:
                doc_freq[m - 1][g] += 1
    log_corpus = math.log(len(pairs))

    def tfidf(tokens, m):
        vec = {}
        norm_sq = 0.0
        for g, c in _ngrams(tokens, m).items():
            idf = log_corpus - math.log(max(1.0, doc_freq[m - 1][g]))
            val = c * idf
            vec[g] = val
            norm_sq += val * val
        return vec, math.sqrt(norm_sq)

    corpus_score = 0.0
    for pair in pairs:
        pair_score = 0.0
        for m in range(1, CIDER_MAX_N + 1):
            cand_vec, cand_norm = tfidf(pair.candidate, m)
            sim_sum = 0.0
            for ref in pair.references:
                ref_vec, ref_norm = tfidf(ref, m)
                if cand_norm == 0.0 or ref_norm == 0.0:
                    continue
                dot = sum(min(val, ref_vec[g]) * ref_vec[g]
                          for g, val in cand_vec.items() if g in ref_vec)
                delta = len(pair.candidate) - len(ref)
                penalty = math.exp(-delta * delta / (2.0 * CIDER_SIGMA ** 2))
                sim_sum += dot / (cand_norm * ref_norm) * penalty
            pair_score += sim_sum / len(pair.references)
        corpus_score += 10.0 * pair_score / CIDER_MAX_N
    return corpus_score / len(pairs)

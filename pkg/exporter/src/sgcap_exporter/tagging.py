"""Noun/verb token-set extraction from captions.

The retrieval side of the engine compares captions by the Jaccard overlap
of their noun/verb lemma sets, so taggers here return one lowercase lemma
set per caption.

Two backends: a dependency-free rule tagger (default, deterministic), and
an NLTK-based tagger for environments that have its models installed.
"""

from __future__ import annotations

import re


class TaggerLoadError(RuntimeError):
    """A tagger backend could not be initialized."""


# closed-class words that are never nouns or verbs worth indexing
_STOPWORDS = frozenset("""
a an the this that these those some any each every no
i you he she it we they me him her us them my your his its our their
and or but nor so yet if while because although when where how why what
in on at by for with about against between into through during before
after above below to from up down out off over under again further
is are was were be been being am do does did doing have has had having
will would shall should may might must can could
not only just very too also there here then than as of s t don now
""".split())

_PUNCT = re.compile(r"[^a-z0-9\s]")

# frequent irregular forms the suffix rules would get wrong
_IRREGULAR = {
    "men": "man", "women": "woman", "children": "child", "people": "person",
    "feet": "foot", "teeth": "tooth", "mice": "mouse", "geese": "goose",
    "ran": "run", "sat": "sit", "stood": "stand", "went": "go", "gone": "go",
    "made": "make", "took": "take", "taken": "take", "got": "get",
    "gave": "give", "given": "give", "held": "hold", "threw": "throw",
    "thrown": "throw", "rode": "ride", "ridden": "ride", "drove": "drive",
    "driven": "drive", "ate": "eat", "eaten": "eat", "spoke": "speak",
    "sang": "sing", "swam": "swim", "flew": "fly", "drew": "draw",
    "wrote": "write", "written": "write", "fell": "fall", "fallen": "fall",
    "said": "say", "saw": "see", "seen": "see", "came": "come",
}

_DOUBLED = re.compile(r"(.+?)([bdfglmnprt])\2(ing|ed)$")


def lemmatize(word: str) -> str:
    """Suffix-rule lemmatizer for inflected English content words."""
    if word in _IRREGULAR:
        return _IRREGULAR[word]
    m = _DOUBLED.match(word)
    if m:
        return m.group(1) + m.group(2)
    for suffix, repl, min_len in (("ies", "y", 5), ("ying", "y", 6),
                                  ("ing", "", 6), ("ied", "y", 5),
                                  ("ed", "", 5), ("ches", "ch", 5),
                                  ("shes", "sh", 5), ("sses", "ss", 5),
                                  ("xes", "x", 4), ("zes", "z", 4),
                                  ("s", "", 4)):
        if word.endswith(suffix) and len(word) >= min_len:
            stem = word[: len(word) - len(suffix)] + repl
            if suffix == "s" and word.endswith("ss"):
                continue
            if suffix == "ing" and len(stem) >= 3 and stem[-1] not in "aeiou":
                # "taking" -> "tak" -> "take" style restoration
                if stem + "e" in _COMMON_E_VERBS:
                    return stem + "e"
            return stem
    return word


_COMMON_E_VERBS = frozenset("""
take make ride drive give come dance smile bake skate race chase wave
slice move use save share leave live love like bike dive note serve
""".split())


class RuleBasedTagger:
    """Deterministic tagger: strip closed-class words, lemmatize the rest.

    Without a learned model the noun/verb distinction is approximated by
    keeping all open-class lemmas, which is what the Jaccard feature needs.
    """

    def token_set(self, text: str) -> frozenset[str]:
        words = _PUNCT.sub(" ", text.lower()).split()
        return frozenset(lemmatize(w) for w in words
                         if w not in _STOPWORDS and not w.isdigit())


class NltkTagger:
    """POS-tag with NLTK and keep noun/verb lemmas only.

    Requires the nltk package plus its tagger and wordnet data; raises
    TaggerLoadError when they are missing.
    """

    def __init__(self):
        try:
            import nltk
            from nltk.stem import WordNetLemmatizer
            self._pos_tag = nltk.pos_tag
            self._lemmatizer = WordNetLemmatizer()
            # fail fast if the data packages are absent
            self._pos_tag(["probe"])
            self._lemmatizer.lemmatize("probe")
        except Exception as exc:
            raise TaggerLoadError(
                f"NLTK tagger unavailable: {exc}") from exc

    def token_set(self, text: str) -> frozenset[str]:
        words = _PUNCT.sub(" ", text.lower()).split()
        out = set()
        for word, tag in self._pos_tag(words):
            if tag.startswith("NN"):
                out.add(self._lemmatizer.lemmatize(word, pos="n"))
            elif tag.startswith("VB"):
                out.add(self._lemmatizer.lemmatize(word, pos="v"))
        return frozenset(out)


def make_tagger(name: str):
    if name == "rule":
        return RuleBasedTagger()
    if name == "nltk":
        return NltkTagger()
    raise ValueError(f"unknown tagger {name!r}; expected 'rule' or 'nltk'")

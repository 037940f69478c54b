"""Vocabularies and sparse TF-IDF feature vectors.

Three tokenization schemes share one Vocabulary container: word
uni/bi-grams, character n-grams (3..5, within or across token
boundaries), and byte-pair subwords. Term weights are raw term frequency
times smoothed inverse document frequency, with optional per-term
scaling to unit variance (never centered, so sparsity is preserved).
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from bridgecraft.textprep.normalize import preprocess
from bridgecraft.textprep.subword import bpe_segment, train_bpe

VOCAB_CAP = 32_000


@dataclass(frozen=True)
class Scheme:
    """Tokenization scheme identifier, JSON-stable."""

    kind: str  # "word" | "char" | "subword"
    max_n: int = 1  # word n-gram order (1 or 2)
    char_min: int = 3
    char_max: int = 5
    cross_token: bool = False
    target_size: int = VOCAB_CAP  # subword unit inventory target

    def __post_init__(self) -> None:
        if self.kind not in ("word", "char", "subword"):
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if self.kind == "word" and self.max_n not in (1, 2):
            raise ValueError("word scheme supports max_n in {1, 2}")
        if self.kind == "char" and not (1 <= self.char_min <= self.char_max):
            raise ValueError("bad char n-gram range")

    @classmethod
    def word(cls, max_n: int = 1) -> "Scheme":
        return cls(kind="word", max_n=max_n)

    @classmethod
    def char(cls, cross_token: bool = False) -> "Scheme":
        return cls(kind="char", cross_token=cross_token)

    @classmethod
    def subword(cls, target_size: int = VOCAB_CAP) -> "Scheme":
        return cls(kind="subword", target_size=target_size)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "max_n": self.max_n,
            "char_min": self.char_min,
            "char_max": self.char_max,
            "cross_token": self.cross_token,
            "target_size": self.target_size,
        }


@dataclass(frozen=True)
class FeatureVector:
    """Sparse (index, weight) pairs with strictly increasing indices."""

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        if len(self.indices) != len(self.values):
            raise ValueError("indices/values length mismatch")
        if len(self.indices) > 1 and not np.all(np.diff(self.indices) > 0):
            raise ValueError("indices must be strictly increasing")
        if len(self.values) and not np.all(np.isfinite(self.values)):
            raise ValueError("weights must be finite")

    def __len__(self) -> int:
        return len(self.indices)


@dataclass
class Vocabulary:
    scheme: Scheme
    terms: list[str]
    idf: np.ndarray | None = None
    scale: np.ndarray | None = None
    merges: list[tuple[str, str]] | None = None
    index: dict[str, int] = field(init=False, repr=False)
    _merge_ranks: dict[tuple[str, str], int] | None = field(init=False, repr=False, default=None)
    _alphabet: set[str] | None = field(init=False, repr=False, default=None)

    def __post_init__(self) -> None:
        self.index = {t: i for i, t in enumerate(self.terms)}
        if len(self.index) != len(self.terms):
            raise ValueError("duplicate terms in vocabulary")
        if self.merges is not None:
            self._merge_ranks = {tuple(p): i for i, p in enumerate(self.merges)}
            self._alphabet = {t for t in self.terms if len(t) == 1}

    def __len__(self) -> int:
        return len(self.terms)

    def analyze(self, text: str) -> list[str]:
        """All candidate terms of this scheme in the text, with repeats."""
        tokens = preprocess(text).split()
        scheme = self.scheme
        if scheme.kind == "word":
            terms = list(tokens)
            if scheme.max_n >= 2:
                terms.extend(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
            return terms
        if scheme.kind == "char":
            if scheme.cross_token:
                sources = [" ".join(tokens)] if tokens else []
            else:
                sources = tokens
            grams = []
            for s in sources:
                for n in range(scheme.char_min, scheme.char_max + 1):
                    grams.extend(s[i : i + n] for i in range(len(s) - n + 1))
            return grams
        pieces = []
        for tok in tokens:
            pieces.extend(bpe_segment(tok, self._merge_ranks or {}, self._alphabet or set()))
        return pieces

    def segment_words(self, text: str) -> list[tuple[str, list[str]]]:
        """Per-word subunit lists, for rolling subunit values up to words."""
        tokens = preprocess(text).split()
        scheme = self.scheme
        if scheme.kind == "word":
            return [(tok, [tok]) for tok in tokens]
        if scheme.kind == "subword":
            return [
                (tok, bpe_segment(tok, self._merge_ranks or {}, self._alphabet or set()))
                for tok in tokens
            ]
        if scheme.kind == "char" and not scheme.cross_token:
            out = []
            for tok in tokens:
                grams = []
                for n in range(scheme.char_min, scheme.char_max + 1):
                    grams.extend(tok[i : i + n] for i in range(len(tok) - n + 1))
                out.append((tok, grams))
            return out
        raise ValueError("cross-token char n-grams have no per-word segmentation")

    def token_ids(self, text: str) -> list[int]:
        """In-vocabulary term indices for the text, order preserved."""
        return [self.index[t] for t in self.analyze(text) if t in self.index]


def build_vocab(texts: Sequence[str], scheme: Scheme, cap: int = VOCAB_CAP) -> Vocabulary:
    """Collect the most frequent terms up to the cap.

    Frequency ties break lexicographically for reproducibility. Subword
    schemes instead run byte-pair merge training to the target size.
    """
    texts = list(texts)
    if not any(preprocess(t) for t in texts):
        raise ValueError("corpus has no non-empty documents")
    if scheme.kind == "subword":
        units, merges = train_bpe(texts, min(scheme.target_size, cap))
        return Vocabulary(scheme=scheme, terms=units[:cap], merges=merges)
    counts: Counter[str] = Counter()
    probe = Vocabulary(scheme=scheme, terms=[])
    for text in texts:
        counts.update(probe.analyze(text))
    if not counts:
        raise ValueError("corpus produced no terms under this scheme")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary(scheme=scheme, terms=[t for t, _ in ranked[:cap]])


def fit_idf(texts: Sequence[str], vocab: Vocabulary) -> np.ndarray:
    """Smoothed inverse document frequency: ln((1+N)/(1+df)) + 1."""
    n_docs = len(texts)
    if n_docs == 0:
        raise ValueError("cannot fit idf on an empty corpus")
    df = np.zeros(len(vocab), dtype=np.int64)
    for text in texts:
        present = {vocab.index[t] for t in vocab.analyze(text) if t in vocab.index}
        for i in present:
            df[i] += 1
    vocab.idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
    return vocab.idf


def tfidf_encode(text: str, vocab: Vocabulary) -> FeatureVector:
    """Encode one document; rawTF * IDF, then optional per-term scaling."""
    if vocab.idf is None:
        raise ValueError("vocabulary has no idf weights; call fit_idf first")
    counts: Counter[int] = Counter()
    for term in vocab.analyze(text):
        idx = vocab.index.get(term)
        if idx is not None:
            counts[idx] += 1
    if not counts:
        return FeatureVector(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))
    indices = np.array(sorted(counts), dtype=np.int64)
    values = np.array([counts[i] for i in indices], dtype=np.float64) * vocab.idf[indices]
    if vocab.scale is not None:
        values = values * vocab.scale[indices]
    return FeatureVector(indices, values)


def fit_scaler(vectors: Sequence[FeatureVector], vocab: Vocabulary) -> np.ndarray:
    """Per-term inverse standard deviation over the training vectors.

    Standard deviation uses the population convention with implicit
    zeros included; zero-variance terms keep scale 1 so scaling never
    breaks the sparsity pattern.
    """
    n = len(vectors)
    if n < 2:
        raise ValueError("need at least two training vectors to fit a scaler")
    total = np.zeros(len(vocab))
    total_sq = np.zeros(len(vocab))
    for vec in vectors:
        total[vec.indices] += vec.values
        total_sq[vec.indices] += vec.values**2
    mean = total / n
    var = np.maximum(total_sq / n - mean**2, 0.0)
    std = np.sqrt(var)
    scale = np.ones(len(vocab))
    nonzero = std > 1e-12
    scale[nonzero] = 1.0 / std[nonzero]
    vocab.scale = scale
    return scale


def encode_corpus(texts: Sequence[str], vocab: Vocabulary) -> sp.csr_matrix:
    """Stack document encodings into a CSR matrix (rows = documents)."""
    data, indices, indptr = [], [], [0]
    for text in texts:
        vec = tfidf_encode(text, vocab)
        data.append(vec.values)
        indices.append(vec.indices)
        indptr.append(indptr[-1] + len(vec))
    if not texts:
        return sp.csr_matrix((0, len(vocab)))
    return sp.csr_matrix(
        (np.concatenate(data), np.concatenate(indices), np.array(indptr)),
        shape=(len(texts), len(vocab)),
    )


def fit_pipeline(
    train_texts: Sequence[str], scheme: Scheme, *, scale: bool = True, cap: int = VOCAB_CAP
) -> Vocabulary:
    """Build vocabulary, fit idf, and optionally fit the unit-variance scaler."""
    vocab = build_vocab(train_texts, scheme, cap)
    fit_idf(train_texts, vocab)
    if scale:
        vectors = [tfidf_encode(t, vocab) for t in train_texts]
        fit_scaler(vectors, vocab)
    return vocab


# ---------------------------------------------------------------------------
# Serialization (JSON, golden-file stable)

def vocab_to_json(vocab: Vocabulary) -> str:
    payload = {
        "format_version": 1,
        "scheme": vocab.scheme.to_dict(),
        "terms": vocab.terms,
        "idf": None if vocab.idf is None else vocab.idf.tolist(),
        "scale": None if vocab.scale is None else vocab.scale.tolist(),
        "merges": None if vocab.merges is None else [list(p) for p in vocab.merges],
    }
    return json.dumps(payload, sort_keys=True, ensure_ascii=False)


def vocab_from_json(text: str) -> Vocabulary:
    payload = json.loads(text)
    if payload.get("format_version") != 1:
        raise ValueError(f"unsupported vocabulary format {payload.get('format_version')!r}")
    vocab = Vocabulary(
        scheme=Scheme(**payload["scheme"]),
        terms=list(payload["terms"]),
        merges=None
        if payload["merges"] is None
        else [tuple(p) for p in payload["merges"]],
    )
    if payload["idf"] is not None:
        vocab.idf = np.asarray(payload["idf"], dtype=np.float64)
    if payload["scale"] is not None:
        vocab.scale = np.asarray(payload["scale"], dtype=np.float64)
    return vocab


def save_vocab(vocab: Vocabulary, path: str | Path) -> None:
    Path(path).write_text(vocab_to_json(vocab) + "\n", encoding="utf-8")


def load_vocab(path: str | Path) -> Vocabulary:
    return vocab_from_json(Path(path).read_text(encoding="utf-8"))


def vocab_hash(vocab: Vocabulary) -> str:
    """Stable identifier for the tokenizer configuration + fitted weights."""
    return hashlib.sha256(vocab_to_json(vocab).encode("utf-8")).hexdigest()

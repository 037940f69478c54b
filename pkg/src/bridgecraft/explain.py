"""Journalist-facing explanations: partisan word statistics, similar
historical posts by embedding nearest neighbors, and transcript scoring.

Word statistics weight each post's words by its left/right retweet
counts; probabilities are raw per-side frequencies (they sum to one over
the observed side vocabulary) while the left/right ratio is computed on
add-one-smoothed counts so it stays finite. The neighbor index is an
exact cosine scan; stats and index are built once and read-only after.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from bridgecraft.corpus import TweetRecord
from bridgecraft.textprep.normalize import preprocess

logger = logging.getLogger(__name__)

DEFAULT_K = 10
RATIO_PERCENTILE = 99.0


@dataclass(frozen=True)
class WordStats:
    word: str
    p_left: float
    p_right: float
    ratio: float  # smoothed p(word|left) / p(word|right)
    outlet_counts: Mapping[str, int]


@dataclass
class WordStatsTable:
    stats: dict[str, WordStats]
    outlets: list[str]
    r_max: float  # 99th-percentile symmetrized ratio, highlight scale cap

    def get(self, word: str) -> WordStats | None:
        return self.stats.get(word)


def compute_word_stats(records: Sequence[TweetRecord]) -> WordStatsTable:
    """Count each post's words n_left/n_right times toward the side totals."""
    if not records:
        raise ValueError("cannot compute word statistics on an empty corpus")
    left_counts: dict[str, int] = {}
    right_counts: dict[str, int] = {}
    outlet_counts: dict[str, dict[str, int]] = {}
    outlets: list[str] = []
    for rec in records:
        if rec.outlet not in outlets:
            outlets.append(rec.outlet)
        for word in preprocess(rec.text).split():
            left_counts[word] = left_counts.get(word, 0) + rec.n_left
            right_counts[word] = right_counts.get(word, 0) + rec.n_right
            per_word = outlet_counts.setdefault(word, {})
            per_word[rec.outlet] = per_word.get(rec.outlet, 0) + 1

    total_left = sum(left_counts.values())
    total_right = sum(right_counts.values())
    vocab = sorted(set(left_counts) | set(right_counts))
    v = len(vocab)
    if v == 0:
        raise ValueError("corpus text produced no words")

    stats: dict[str, WordStats] = {}
    for word in vocab:
        cl = left_counts.get(word, 0)
        cr = right_counts.get(word, 0)
        p_left = cl / total_left if total_left else 0.0
        p_right = cr / total_right if total_right else 0.0
        smoothed_left = (cl + 1) / (total_left + v)
        smoothed_right = (cr + 1) / (total_right + v)
        stats[word] = WordStats(
            word=word,
            p_left=p_left,
            p_right=p_right,
            ratio=smoothed_left / smoothed_right,
            outlet_counts=dict(sorted(outlet_counts.get(word, {}).items())),
        )

    symmetrized = [max(s.ratio, 1.0 / s.ratio) for s in stats.values()]
    r_max = float(np.percentile(symmetrized, RATIO_PERCENTILE))
    return WordStatsTable(stats=stats, outlets=outlets, r_max=r_max)


@dataclass(frozen=True)
class HighlightSpan:
    word: str
    side: str  # "left" | "right" | "neutral"
    intensity: float  # 0..1


def highlight(text: str, table: WordStatsTable) -> list[HighlightSpan]:
    """Color words by which side retweets them more, scaled by log ratio.

    Intensity is min(1, |log ratio| / log r_max); unseen words and exact
    ratio 1 come back neutral at zero intensity.
    """
    log_cap = math.log(table.r_max) if table.r_max > 1.0 else 0.0
    spans = []
    for word in preprocess(text).split():
        stats = table.get(word)
        if stats is None or stats.ratio == 1.0:
            spans.append(HighlightSpan(word=word, side="neutral", intensity=0.0))
            continue
        side = "left" if stats.ratio > 1.0 else "right"
        log_ratio = abs(math.log(stats.ratio))
        intensity = 1.0 if log_cap == 0.0 else min(1.0, log_ratio / log_cap)
        spans.append(HighlightSpan(word=word, side=side, intensity=intensity))
    return spans


def word_stats_csv(table: WordStatsTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["word", "p_left", "p_right", "ratio"] + [f"outlet:{o}" for o in table.outlets]
    )
    for word in sorted(table.stats):
        s = table.stats[word]
        writer.writerow(
            [word, f"{s.p_left:.10g}", f"{s.p_right:.10g}", f"{s.ratio:.10g}"]
            + [s.outlet_counts.get(o, 0) for o in table.outlets]
        )
    return buf.getvalue()


def word_stats_from_csv(text: str) -> WordStatsTable:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    outlets = [h[len("outlet:") :] for h in header[4:]]
    stats: dict[str, WordStats] = {}
    for row in reader:
        if not row:
            continue
        word = row[0]
        counts = {o: int(c) for o, c in zip(outlets, row[4:]) if int(c)}
        stats[word] = WordStats(
            word=word,
            p_left=float(row[1]),
            p_right=float(row[2]),
            ratio=float(row[3]),
            outlet_counts=counts,
        )
    symmetrized = [max(s.ratio, 1.0 / s.ratio) for s in stats.values()] or [1.0]
    return WordStatsTable(
        stats=stats,
        outlets=outlets,
        r_max=float(np.percentile(symmetrized, RATIO_PERCENTILE)),
    )


# ---------------------------------------------------------------------------
# Exact cosine nearest-neighbor index

@dataclass
class EmbeddingIndex:
    """Exact cosine index over unit-normalized item vectors."""

    ids: list[str]
    vectors: np.ndarray  # (n, d) unit rows
    model_hash: str = ""

    FORMAT_VERSION = 1

    def __post_init__(self) -> None:
        if len(self.ids) != len(set(self.ids)):
            raise ValueError("item ids must be unique")
        if self.vectors.shape[0] != len(self.ids):
            raise ValueError("ids and vectors disagree in length")
        if len(self.ids) and not np.all(np.isfinite(self.vectors)):
            raise ValueError("vectors must be finite")

    @classmethod
    def build(cls, ids: Sequence[str], vectors: np.ndarray, model_hash: str = "") -> "EmbeddingIndex":
        vectors = np.asarray(vectors, dtype=np.float64)
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        return cls(ids=list(ids), vectors=vectors / norms, model_hash=model_hash)

    def query(self, vector: np.ndarray, k: int = DEFAULT_K) -> list[tuple[str, float]]:
        """Top-k items by cosine similarity, descending."""
        if len(self.ids) == 0:
            raise ValueError("index is empty")
        q = np.asarray(vector, dtype=np.float64).ravel()
        norm = np.linalg.norm(q)
        if norm > 0:
            q = q / norm
        sims = self.vectors @ q
        k = min(k, len(self.ids))
        top = np.argpartition(-sims, k - 1)[:k]
        top = top[np.argsort(-sims[top], kind="stable")]
        return [(self.ids[i], float(sims[i])) for i in top]

    def save(self, path: str | Path) -> None:
        meta = json.dumps(
            {"format_version": self.FORMAT_VERSION, "model_hash": self.model_hash,
             "ids": self.ids}
        )
        np.savez(path, vectors=self.vectors, meta=np.frombuffer(meta.encode("utf-8"), dtype=np.uint8))

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingIndex":
        with np.load(path) as data:
            meta = json.loads(bytes(data["meta"]).decode("utf-8"))
            if meta.get("format_version") != cls.FORMAT_VERSION:
                raise ValueError("unsupported index format")
            return cls(ids=meta["ids"], vectors=data["vectors"], model_hash=meta["model_hash"])


def similar_tweets(
    index: EmbeddingIndex,
    records: Mapping[str, TweetRecord],
    query_vector: np.ndarray,
    k: int = DEFAULT_K,
) -> list[dict]:
    """Nearest stored posts with display metadata attached."""
    neighbors = []
    for tweet_id, similarity in index.query(query_vector, k):
        rec = records[tweet_id]
        neighbors.append(
            {
                "tweet_id": tweet_id,
                "text": rec.text,
                "outlet": rec.outlet,
                "timestamp": rec.timestamp,
                "retweets": rec.n_left + rec.n_right,
                "bridginess": rec.diversity,
                "similarity": similarity,
            }
        )
    return neighbors


# ---------------------------------------------------------------------------
# Transcript analysis

@dataclass(frozen=True)
class TranscriptSegment:
    index: int
    speaker: str
    text: str
    bridginess: float
    alignment: float


@dataclass
class TranscriptResult:
    segments: list[TranscriptSegment]
    warnings: list[str] = field(default_factory=list)


def analyze_transcript(
    raw_segments: Iterable[Mapping],
    diversity_predictor,
    alignment_predictor,
) -> TranscriptResult:
    """Score each {speaker, text} segment with both active models.

    Malformed segments are skipped with a warning collected in the
    result; indices stay contiguous over the segments actually scored.
    """
    cleaned: list[tuple[str, str]] = []
    warnings: list[str] = []
    for pos, seg in enumerate(raw_segments):
        try:
            speaker = str(seg["speaker"])
            text = str(seg["text"])
        except (KeyError, TypeError):
            message = f"segment {pos} malformed; skipped"
            logger.warning(message)
            warnings.append(message)
            continue
        cleaned.append((speaker, text))
    if not cleaned:
        return TranscriptResult(segments=[], warnings=warnings)
    texts = [text for _, text in cleaned]
    bridginess = diversity_predictor.predict_texts(texts)
    alignment = alignment_predictor.predict_texts(texts)
    segments = [
        TranscriptSegment(
            index=i,
            speaker=speaker,
            text=text,
            bridginess=float(b),
            alignment=float(a),
        )
        for i, ((speaker, text), b, a) in enumerate(zip(cleaned, bridginess, alignment))
    ]
    return TranscriptResult(segments=segments, warnings=warnings)


def read_transcript_jsonl(path: str | Path) -> list[dict]:
    segments = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                segments.append(json.loads(line))
    return segments


def transcript_csv(result: TranscriptResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["segment", "speaker", "bridginess", "alignment"])
    for seg in result.segments:
        writer.writerow([seg.index, seg.speaker, f"{seg.bridginess:.6f}", f"{seg.alignment:.6f}"])
    return buf.getvalue()

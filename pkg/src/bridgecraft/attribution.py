"""Integrated-gradients attributions and lexicon-category aggregation.

Attributions follow the path integral from an all-padding (zero
embedding) baseline to the input, approximated with a midpoint Riemann
sum: per-dimension attributions are summed within each token, token
values are summed into whole words, and word values are averaged per
lexicon category across the test set with normal-approximation CIs.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from bridgecraft.models.neural import NeuralModel
from bridgecraft.textprep.vocab import Vocabulary

logger = logging.getLogger(__name__)

Z95 = 1.959963984540054

REPORT_STEPS = 128
ACCEPTANCE_STEPS = 512


@dataclass(frozen=True)
class AttributionResult:
    """Per-token attributions for one instance."""

    token_attributions: np.ndarray
    prediction: float
    baseline_value: float
    completeness_gap: float
    steps: int


def integrated_gradients(
    model: NeuralModel,
    E: np.ndarray,
    steps: int = REPORT_STEPS,
    baseline: np.ndarray | None = None,
) -> AttributionResult:
    """Attribute F(E) - F(baseline) across tokens.

    ``E`` is the (tokens x dims) input embedding matrix; the baseline
    defaults to the zero-embedding padding sequence. Midpoint-rule
    averaging keeps the completeness gap shrinking as steps double.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    E = np.asarray(E, dtype=np.float64)
    if E.ndim != 2 or E.shape[0] == 0:
        raise ValueError("input must be a non-empty (tokens, dims) matrix")
    B = np.zeros_like(E) if baseline is None else np.asarray(baseline, dtype=np.float64)
    if B.shape != E.shape:
        raise ValueError("baseline shape must match the input")

    diff = E - B
    alphas = (np.arange(1, steps + 1) - 0.5) / steps
    path = B[None, :, :] + alphas[:, None, None] * diff[None, :, :]
    mask = np.ones((steps, E.shape[0]))
    grads = model.input_gradients(path, mask)
    finite = np.isfinite(grads).all(axis=(1, 2))
    if not finite.all():
        bad = int(np.argmin(finite))
        raise ArithmeticError(f"non-finite gradient at integration step {bad}")
    avg_grad = grads.mean(axis=0)
    attributions = (diff * avg_grad).sum(axis=1)

    ones = np.ones((1, E.shape[0]))
    f_x = float(model.forward_batch(E[None, :, :], ones)[0][0])
    f_b = float(model.forward_batch(B[None, :, :], ones)[0][0])
    gap = abs(float(attributions.sum()) - (f_x - f_b))
    return AttributionResult(
        token_attributions=attributions,
        prediction=f_x,
        baseline_value=f_b,
        completeness_gap=gap,
        steps=steps,
    )


def word_attributions(
    values: Sequence[float],
    segmentation: Sequence[tuple[str, Sequence[int]]],
) -> list[tuple[str, float]]:
    """Sum subunit attribution values into whole-word values.

    The segmentation must partition the subunit indices exactly.
    """
    seen: set[int] = set()
    out = []
    for word, indices in segmentation:
        total = 0.0
        for i in indices:
            if i < 0 or i >= len(values):
                raise ValueError(f"segment index {i} out of range")
            if i in seen:
                raise ValueError(f"subunit {i} assigned to more than one word")
            seen.add(i)
            total += float(values[i])
        out.append((word, total))
    if len(seen) != len(values):
        missing = sorted(set(range(len(values))) - seen)
        raise ValueError(f"subunits not covered by any word: {missing}")
    return out


# ---------------------------------------------------------------------------
# Lexicons

@dataclass(frozen=True)
class Lexicon:
    name: str
    categories: Mapping[str, frozenset[str]]


def load_lexicon(directory: str | Path) -> Lexicon:
    """Read ``<category>.txt`` word lists (one lowercased word per line)."""
    directory = Path(directory)
    categories: dict[str, frozenset[str]] = {}
    for path in sorted(directory.glob("*.txt")):
        words = frozenset(
            line.strip().lower()
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        )
        if words:
            categories[path.stem] = words
    if not categories:
        raise ValueError(f"no category word lists found under {directory}")
    return Lexicon(name=directory.name, categories=categories)


def load_lexicons(root: str | Path) -> list[Lexicon]:
    root = Path(root)
    lexicons = [load_lexicon(d) for d in sorted(root.iterdir()) if d.is_dir()]
    if not lexicons:
        raise ValueError(f"no lexicon directories under {root}")
    return lexicons


@dataclass(frozen=True)
class CategoryStats:
    mean: float | None
    ci_low: float | None
    ci_high: float | None
    n: int


def summarize_occurrences(values: Sequence[float]) -> CategoryStats:
    """Mean and normal-approximation 95% CI over word occurrences."""
    n = len(values)
    if n == 0:
        return CategoryStats(mean=None, ci_low=None, ci_high=None, n=0)
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    half = Z95 * float(arr.std(ddof=0)) / np.sqrt(n)
    return CategoryStats(mean=mean, ci_low=mean - half, ci_high=mean + half, n=n)


# ---------------------------------------------------------------------------
# Test-set sweeps

@dataclass
class InstanceAttribution:
    text: str
    words: list[tuple[str, float]]
    prediction: float
    completeness_gap: float


@dataclass
class AttributionReport:
    steps: int
    instances: list[InstanceAttribution]
    per_word: dict[str, CategoryStats]
    per_category: dict[str, CategoryStats]
    max_completeness_gap: float

    def to_json(self) -> str:
        def stats_dict(s: CategoryStats) -> dict:
            return {"mean": s.mean, "ci_low": s.ci_low, "ci_high": s.ci_high, "n": s.n}

        payload = {
            "steps": self.steps,
            "max_completeness_gap": self.max_completeness_gap,
            "instances": [
                {
                    "text": inst.text,
                    "words": [{"word": w, "value": v} for w, v in inst.words],
                    "prediction": inst.prediction,
                    "completeness_gap": inst.completeness_gap,
                }
                for inst in self.instances
            ],
            "per_word": {w: stats_dict(s) for w, s in sorted(self.per_word.items())},
            "per_category": {c: stats_dict(s) for c, s in sorted(self.per_category.items())},
        }
        return json.dumps(payload, sort_keys=True)

    def category_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["category", "mean", "ci_low", "ci_high", "n"])
        for category in sorted(self.per_category):
            s = self.per_category[category]
            writer.writerow(
                [
                    category,
                    "" if s.mean is None else f"{s.mean:.10g}",
                    "" if s.ci_low is None else f"{s.ci_low:.10g}",
                    "" if s.ci_high is None else f"{s.ci_high:.10g}",
                    s.n,
                ]
            )
        return buf.getvalue()


def attribute_instance(
    model: NeuralModel, vocabulary: Vocabulary, text: str, steps: int = REPORT_STEPS
) -> InstanceAttribution:
    """Word-level attributions for one text under the given model."""
    segments = vocabulary.segment_words(text)
    pieces: list[str] = []
    segmentation: list[tuple[str, list[int]]] = []
    for word, subunits in segments:
        indices = []
        for piece in subunits:
            indices.append(len(pieces))
            pieces.append(piece)
        segmentation.append((word, indices))
    if not pieces:
        pred = float(model.predict([[]])[0])  # padded baseline prediction
        return InstanceAttribution(
            text=text, words=[(w, 0.0) for w, _ in segments],
            prediction=pred, completeness_gap=0.0,
        )
    ids = [vocabulary.index.get(p, model.pad_id) for p in pieces]
    result = integrated_gradients(model, model.embedding[ids], steps=steps)
    words = word_attributions(result.token_attributions, segmentation)
    return InstanceAttribution(
        text=text,
        words=words,
        prediction=result.prediction,
        completeness_gap=result.completeness_gap,
    )


def attribute_corpus(
    model: NeuralModel,
    vocabulary: Vocabulary,
    texts: Sequence[str],
    lexicons: Sequence[Lexicon] = (),
    steps: int = REPORT_STEPS,
) -> AttributionReport:
    """Attribute every text and aggregate per word and per category.

    Category means run over every occurrence of every category word
    across the whole test set, so document order never matters.
    """
    instances = [attribute_instance(model, vocabulary, t, steps) for t in texts]

    word_occurrences: dict[str, list[float]] = {}
    for inst in instances:
        for word, value in inst.words:
            word_occurrences.setdefault(word, []).append(value)
    per_word = {w: summarize_occurrences(vals) for w, vals in word_occurrences.items()}

    per_category: dict[str, CategoryStats] = {}
    for lexicon in lexicons:
        for category, members in lexicon.categories.items():
            occurrences = [
                value
                for inst in instances
                for word, value in inst.words
                if word in members
            ]
            per_category[f"{lexicon.name}/{category}"] = summarize_occurrences(occurrences)

    return AttributionReport(
        steps=steps,
        instances=instances,
        per_word=per_word,
        per_category=per_category,
        max_completeness_gap=max((i.completeness_gap for i in instances), default=0.0),
    )

"""Stratified train/validation/test splits.

Items are allocated 80/10/10 within each outlet by largest-remainder
rounding, so every split's per-outlet count stays within one item of the
outlet's global proportion.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_FRACTIONS = (0.8, 0.1, 0.1)
SMALL_STRATUM = 10


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[int, ...]
    validation: tuple[int, ...]
    test: tuple[int, ...]

    def __post_init__(self) -> None:
        parts = [set(self.train), set(self.validation), set(self.test)]
        total = sum(len(p) for p in parts)
        if len(set().union(*parts)) != total:
            raise ValueError("split parts overlap")


def _largest_remainder(n: int, fractions: Sequence[float]) -> list[int]:
    quotas = [f * n for f in fractions]
    counts = [int(q) for q in quotas]
    leftovers = sorted(
        range(len(fractions)), key=lambda i: (counts[i] - quotas[i], i)
    )
    for i in range(n - sum(counts)):
        counts[leftovers[i]] += 1
    return counts


def split_dataset(
    outlets: Sequence[str],
    seed: int,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
) -> DatasetSplit:
    """Split item indices stratified by outlet, deterministically by seed."""
    if not outlets:
        raise ValueError("cannot split an empty corpus")
    if abs(sum(fractions) - 1.0) > 1e-9 or len(fractions) != 3:
        raise ValueError("fractions must be three values summing to 1")
    rng = np.random.default_rng(seed)
    by_outlet: dict[str, list[int]] = defaultdict(list)
    for i, outlet in enumerate(outlets):
        by_outlet[outlet].append(i)

    parts: tuple[list[int], list[int], list[int]] = ([], [], [])
    for outlet in sorted(by_outlet):
        idx = np.array(by_outlet[outlet])
        if len(idx) < SMALL_STRATUM:
            logger.warning(
                "outlet %r has only %d items; best-effort proportional split",
                outlet,
                len(idx),
            )
        rng.shuffle(idx)
        counts = _largest_remainder(len(idx), fractions)
        start = 0
        for part, count in zip(parts, counts):
            part.extend(int(i) for i in idx[start : start + count])
            start += count
    return DatasetSplit(
        train=tuple(sorted(parts[0])),
        validation=tuple(sorted(parts[1])),
        test=tuple(sorted(parts[2])),
    )

"""Byte-pair-merge subword tokenizer.

Merges are learned greedily from token frequencies: the most frequent
adjacent symbol pair is merged each round, ties broken by the
lexicographically smallest pair, until the unit inventory reaches the
target size or no adjacent pair remains. Any string over the training
alphabet stays encodable; characters never seen in training are dropped.
"""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Sequence

from bridgecraft.textprep.normalize import tokenize

Pair = tuple[str, str]


def train_bpe(
    texts: Iterable[str], target_size: int
) -> tuple[list[str], list[Pair]]:
    """Learn merges over the corpus tokens.

    Returns (units, merges): units is the alphabet (sorted) followed by
    merge products in creation order; merges are the learned pairs.
    """
    if target_size < 1:
        raise ValueError("target_size must be positive")
    token_freq: Counter[str] = Counter()
    for text in texts:
        token_freq.update(tokenize(text))
    if not token_freq:
        raise ValueError("corpus produced no tokens")

    words: dict[str, list[str]] = {tok: list(tok) for tok in token_freq}
    alphabet = sorted({c for tok in token_freq for c in tok})
    units: list[str] = list(alphabet)
    unit_set = set(units)
    merges: list[Pair] = []

    while len(units) < target_size:
        pair_counts: Counter[Pair] = Counter()
        for tok, sym in words.items():
            freq = token_freq[tok]
            for a, b in zip(sym, sym[1:]):
                pair_counts[(a, b)] += freq
        if not pair_counts:
            break
        top = max(pair_counts.values())
        best = min(p for p, c in pair_counts.items() if c == top)
        merges.append(best)
        merged = best[0] + best[1]
        if merged not in unit_set:
            unit_set.add(merged)
            units.append(merged)
        for tok, sym in words.items():
            words[tok] = _merge_pair(sym, best, merged)
    return units, merges


def _merge_pair(symbols: Sequence[str], pair: Pair, merged: str) -> list[str]:
    out: list[str] = []
    i = 0
    while i < len(symbols):
        if i + 1 < len(symbols) and symbols[i] == pair[0] and symbols[i + 1] == pair[1]:
            out.append(merged)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


def bpe_segment(
    token: str, merge_ranks: dict[Pair, int], alphabet: set[str]
) -> list[str]:
    """Segment one token by applying merges in learned priority order."""
    symbols = [c for c in token if c in alphabet]
    while len(symbols) > 1:
        ranked = [
            (merge_ranks[(a, b)], i)
            for i, (a, b) in enumerate(zip(symbols, symbols[1:]))
            if (a, b) in merge_ranks
        ]
        if not ranked:
            break
        _, i = min(ranked)
        pair = (symbols[i], symbols[i + 1])
        symbols = _merge_pair(symbols, pair, pair[0] + pair[1])
    return symbols

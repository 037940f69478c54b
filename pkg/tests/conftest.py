"""Shared fixtures: a small deterministic corpus and trained artifacts."""

import json
from pathlib import Path
from types import SimpleNamespace

import numpy as np
import pytest

from bridgecraft.corpus import TweetRecord, audience_diversity, write_corpus_jsonl

LEFT_WORDS = ["health", "care", "climate", "union", "equity"]
RIGHT_WORDS = ["border", "wall", "tax", "liberty", "tariff"]
NEUTRAL_WORDS = ["report", "today", "watch", "new", "story", "film", "update"]


def synth_corpus(n=60, seed=0) -> list[TweetRecord]:
    """Posts whose engagement counts follow their partisan word mix."""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        n_left_words = int(rng.integers(0, 4))
        n_right_words = int(rng.integers(0, 4))
        words = (
            [LEFT_WORDS[int(k)] for k in rng.integers(0, len(LEFT_WORDS), n_left_words)]
            + [RIGHT_WORDS[int(k)] for k in rng.integers(0, len(RIGHT_WORDS), n_right_words)]
            + [NEUTRAL_WORDS[int(k)] for k in rng.integers(0, len(NEUTRAL_WORDS), 3)]
        )
        rng.shuffle(words)
        n_left = 2 + n_left_words * 3 + int(rng.integers(0, 3))
        n_right = 2 + n_right_words * 3 + int(rng.integers(0, 3))
        records.append(
            TweetRecord(
                tweet_id=f"t{i:03d}",
                outlet="frontline" if i % 2 else "othernews",
                timestamp=1_500_000_000.0 + 3600.0 * i,
                text=" ".join(words),
                n_left=n_left,
                n_right=n_right,
                diversity=audience_diversity(n_left, n_right),
                mean_alignment=float(
                    np.clip((n_right - n_left) / max(n_left + n_right, 1) * 2, -2, 2)
                ),
            )
        )
    return records


def write_embeddings(path: Path, tokens, dim=8, seed=5) -> None:
    rng = np.random.default_rng(seed)
    lines = []
    for token in sorted(set(tokens)):
        vec = rng.normal(size=dim)
        lines.append(token + " " + " ".join(f"{v:.6f}" for v in vec))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


@pytest.fixture(scope="session")
def demo(tmp_path_factory) -> SimpleNamespace:
    """Corpus file plus trained artifacts, stats, and index on disk."""
    from bridgecraft.cli import main

    root = tmp_path_factory.mktemp("demo")
    records = synth_corpus()
    corpus_path = root / "corpus.jsonl"
    write_corpus_jsonl(records, corpus_path)

    tokens = [w for r in records for w in r.text.split()]
    embeddings_path = root / "embeddings.txt"
    write_embeddings(embeddings_path, tokens)

    diversity_path = root / "diversity.model.json"
    assert main(
        [
            "--workdir", str(root),
            "train", "--corpus", "corpus.jsonl", "--model", "ridge",
            "--lambda", "1.0", "--vocab", "word-1gram", "--seed", "7",
            "--target", "diversity", "--out", "diversity.model.json",
        ]
    ) == 0

    alignment_path = root / "alignment.model.json"
    assert main(
        [
            "--workdir", str(root),
            "train", "--corpus", "corpus.jsonl", "--model", "ridge",
            "--lambda", "1.0", "--vocab", "word-1gram", "--seed", "7",
            "--target", "alignment", "--out", "alignment.model.json",
        ]
    ) == 0

    neural_path = root / "neural.model.json"
    assert main(
        [
            "--workdir", str(root),
            "train", "--corpus", "corpus.jsonl", "--model", "neural-attention",
            "--vocab", "word-1gram", "--seed", "7", "--target", "diversity",
            "--embeddings", "embeddings.txt", "--attention-hidden", "8",
            "--lr", "0.01", "--epochs", "8", "--out", "neural.model.json",
        ]
    ) == 0

    stats_path = root / "word_stats.csv"
    assert main(
        ["--workdir", str(root), "stats", "--corpus", "corpus.jsonl",
         "--out", "word_stats.csv"]
    ) == 0

    index_path = root / "index.npz"
    assert main(
        ["--workdir", str(root), "index", "--model", "neural.model.json",
         "--corpus", "corpus.jsonl", "--out", "index.npz"]
    ) == 0

    return SimpleNamespace(
        root=root,
        records=records,
        corpus=corpus_path,
        embeddings=embeddings_path,
        diversity_model=diversity_path,
        alignment_model=alignment_path,
        neural_model=neural_path,
        word_stats=stats_path,
        index=index_path,
    )


def write_users_jsonl(path: Path, n_left=60, n_right=60, seed=3) -> None:
    """User records whose domains imply their leaning."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n_left + n_right):
        left = i < n_left
        domain = "leftnews.com" if left else "rightnews.com"
        rows.append(
            {
                "user_id": f"{'l' if left else 'r'}{i:04d}",
                "domains": [domain] * 3,
                "posts": int(rng.integers(1, 5000)),
                "likes": int(rng.integers(0, 20000)),
                "followers": int(rng.integers(0, 50000)),
                "friends": int(rng.integers(0, 3000)),
                "tenure_days": int(rng.integers(30, 4000)),
                "tier": "direct_follower" if rng.random() < 0.5 else "follower_of_follower",
            }
        )
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")


def write_domains_csv(path: Path) -> None:
    path.write_text(
        "domain,score\nleftnews.com,-1.4\nrightnews.com,1.2\ncenterish.com,0.1\n",
        encoding="utf-8",
    )

"""Trained-model artifacts: a versioned JSON file and a scoring facade.

Weights are base64-encoded little-endian float64 blocks, so an artifact
written twice from the same training run is bit-identical; no timestamps
or environment data enter the file.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from bridgecraft.models.linear import LinearModel
from bridgecraft.models.neural import NeuralConfig, NeuralModel
from bridgecraft.storage import atomic_write_text, sha256_bytes
from bridgecraft.textprep.vocab import (
    Vocabulary,
    encode_corpus,
    vocab_from_json,
    vocab_hash,
    vocab_to_json,
)

FORMAT_VERSION = 1
LINEAR_KINDS = ("ols", "ridge", "lasso", "elasticnet", "svr")
TARGETS = ("diversity", "alignment")


def _encode_array(arr: np.ndarray) -> dict:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    return {
        "shape": list(arr.shape),
        "data": base64.b64encode(arr.astype("<f8").tobytes()).decode("ascii"),
    }


def _decode_array(obj: dict) -> np.ndarray:
    data = np.frombuffer(base64.b64decode(obj["data"]), dtype="<f8")
    return data.reshape(obj["shape"]).copy()


@dataclass
class ModelArtifact:
    kind: str
    target: str
    seed: int
    vocabulary: Vocabulary
    weights: dict[str, np.ndarray]
    config: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in LINEAR_KINDS + ("neural",):
            raise ValueError(f"unknown artifact kind {self.kind!r}")
        if self.target not in TARGETS:
            raise ValueError(f"unknown target {self.target!r}")

    def to_json(self) -> str:
        payload = {
            "format_version": FORMAT_VERSION,
            "kind": self.kind,
            "target": self.target,
            "seed": self.seed,
            "tokenizer_hash": vocab_hash(self.vocabulary),
            "vocabulary": json.loads(vocab_to_json(self.vocabulary)),
            "weights": {k: _encode_array(v) for k, v in sorted(self.weights.items())},
            "config": self.config,
            "metrics": self.metrics,
            "provenance": self.provenance,
        }
        return json.dumps(payload, sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "ModelArtifact":
        payload = json.loads(text)
        if payload.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported artifact format {payload.get('format_version')!r}")
        return cls(
            kind=payload["kind"],
            target=payload["target"],
            seed=payload["seed"],
            vocabulary=vocab_from_json(json.dumps(payload["vocabulary"])),
            weights={k: _decode_array(v) for k, v in payload["weights"].items()},
            config=payload.get("config", {}),
            metrics=payload.get("metrics", {}),
            provenance=payload.get("provenance", {}),
        )

    def hash(self) -> str:
        return sha256_bytes(self.to_json().encode("utf-8"))


def save_artifact(artifact: ModelArtifact, path: str | Path) -> None:
    atomic_write_text(path, artifact.to_json() + "\n")


def load_artifact(path: str | Path) -> ModelArtifact:
    return ModelArtifact.from_json(Path(path).read_text(encoding="utf-8"))


def artifact_from_linear(
    model: LinearModel, target: str, seed: int, vocabulary: Vocabulary, **extra
) -> ModelArtifact:
    return ModelArtifact(
        kind=model.kind,
        target=target,
        seed=seed,
        vocabulary=vocabulary,
        weights={"weights": model.weights, "intercept": np.array([model.intercept])},
        config={"lam": model.lam, "l1_ratio": model.l1_ratio, "epsilon": model.epsilon},
        **extra,
    )


def artifact_from_neural(
    model: NeuralModel, target: str, seed: int, vocabulary: Vocabulary, **extra
) -> ModelArtifact:
    weights = {f"param:{k}": v for k, v in model.params.items()}
    weights["embedding"] = model.embedding
    cfg = model.config
    return ModelArtifact(
        kind="neural",
        target=target,
        seed=seed,
        vocabulary=vocabulary,
        weights=weights,
        config={
            "embedding_dim": cfg.embedding_dim,
            "pooling": cfg.pooling,
            "attention_hidden": cfg.attention_hidden,
            "head_widths": list(cfg.head_widths),
            "dropout": cfg.dropout,
            "freeze_embeddings": cfg.freeze_embeddings,
            "learning_rate": cfg.learning_rate,
            "batch_size": cfg.batch_size,
            "max_epochs": cfg.max_epochs,
            "patience": cfg.patience,
            "weight_decay": cfg.weight_decay,
            "clip_norm": cfg.clip_norm,
            "seed": cfg.seed,
        },
        **extra,
    )


class Predictor:
    """Text-in, score-out facade over a loaded artifact."""

    def __init__(self, artifact: ModelArtifact):
        self.artifact = artifact
        self.vocabulary = artifact.vocabulary
        if artifact.kind == "neural":
            cfg_dict = dict(artifact.config)
            cfg_dict["head_widths"] = tuple(cfg_dict.get("head_widths", ()))
            config = NeuralConfig(**cfg_dict)
            params = {
                k[len("param:") :]: v
                for k, v in artifact.weights.items()
                if k.startswith("param:")
            }
            self._neural = NeuralModel(config, artifact.weights["embedding"], params)
            self._linear = None
        else:
            self._neural = None
            self._linear = LinearModel(
                kind=artifact.kind,
                weights=artifact.weights["weights"],
                intercept=float(artifact.weights["intercept"][0]),
                lam=float(artifact.config.get("lam", 0.0)),
                l1_ratio=float(artifact.config.get("l1_ratio", 0.0)),
                epsilon=float(artifact.config.get("epsilon", 0.0)),
            )

    @classmethod
    def load(cls, path: str | Path) -> "Predictor":
        return cls(load_artifact(path))

    @property
    def target(self) -> str:
        return self.artifact.target

    @property
    def hash(self) -> str:
        return self.artifact.hash()

    @property
    def neural_model(self) -> NeuralModel | None:
        return self._neural

    def predict_texts(self, texts: Sequence[str]) -> np.ndarray:
        """Raw (unclamped) scores, one per text."""
        if self._linear is not None:
            X = encode_corpus(list(texts), self.vocabulary)
            return self._linear.predict(X)
        sequences = [self.vocabulary.token_ids(t) for t in texts]
        return self._neural.predict(sequences)

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        """Pooled representations; only differentiable models embed."""
        if self._neural is None:
            raise ValueError("only neural artifacts provide embeddings")
        sequences = [self.vocabulary.token_ids(t) for t in texts]
        return self._neural.embed(sequences)

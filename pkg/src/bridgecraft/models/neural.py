"""Embedding models with mean or self-attention pooling and an MLP head.

The network embeds tokens (table frozen or trainable), reduces them to
one vector (plain mean, or a softmax-weighted mean whose scores come
from a two-layer tanh network), and feeds that through 0-2 ReLU layers
to a scalar. Forward and backward passes are hand-written in numpy over
padded batches; gradients flow to the parameters and to the input
embeddings, which the attribution module reuses.

Training follows Adam (beta1=0.9, beta2=0.999) with L2 weight decay
0.01 on non-bias parameters, global gradient clipping to unit L2 norm
after every mini-batch, MSE loss, and early stopping on validation MSE.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
NEG_INF = -1e30


class TrainingDiverged(RuntimeError):
    """Non-finite loss encountered; carries the trace up to the failure."""

    def __init__(self, message: str, trace: "TrainingTrace"):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class NeuralConfig:
    embedding_dim: int
    pooling: str = "attention"  # "mean" | "attention"
    attention_hidden: int = 64
    head_widths: tuple[int, ...] = ()
    dropout: float = 0.0
    freeze_embeddings: bool = True
    learning_rate: float = 1e-3
    batch_size: int = 64
    max_epochs: int = 100
    patience: int = 10
    weight_decay: float = 0.01
    clip_norm: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.pooling not in ("mean", "attention"):
            raise ValueError(f"unknown pooling {self.pooling!r}")
        if len(self.head_widths) > 2:
            raise ValueError("at most two fully-connected layers")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")


@dataclass
class EpochStats:
    epoch: int
    train_mse: float
    val_mse: float


@dataclass
class TrainingTrace:
    epochs: list[EpochStats] = field(default_factory=list)
    best_epoch: int = -1
    best_val_mse: float = float("inf")
    max_clipped_grad_norm: float = 0.0

    def rows(self) -> list[tuple[int, float, float]]:
        return [(e.epoch, e.train_mse, e.val_mse) for e in self.epochs]


def attention_pool(
    E: np.ndarray, W: np.ndarray, b: np.ndarray, v: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Convex combination of token embeddings by learned softmax scores.

    Returns (pooled vector, attention weights). Raises on zero tokens;
    callers pad empty inputs instead.
    """
    E = np.asarray(E, dtype=np.float64)
    if E.ndim != 2 or E.shape[0] == 0:
        raise ValueError("attention_pool needs at least one token embedding")
    scores = np.tanh(E @ W.T + b) @ v
    scores = scores - scores.max()
    weights = np.exp(scores)
    weights /= weights.sum()
    return weights @ E, weights


class NeuralModel:
    """Pooled-embedding regressor with explicit parameter arrays.

    ``embedding`` has one extra final row: the all-zero padding vector,
    which doubles as the attribution baseline and never receives
    gradient updates.
    """

    def __init__(self, config: NeuralConfig, embedding: np.ndarray, params: dict[str, np.ndarray]):
        self.config = config
        self.embedding = embedding  # (V+1, d), last row zero padding
        self.params = params

    # -- construction -----------------------------------------------------

    @classmethod
    def initialize(cls, config: NeuralConfig, embedding_table: np.ndarray, rng=None) -> "NeuralModel":
        rng = rng or np.random.default_rng(config.seed)
        table = np.asarray(embedding_table, dtype=np.float64)
        if table.ndim != 2 or table.shape[1] != config.embedding_dim:
            raise ValueError("embedding table shape does not match config")
        embedding = np.vstack([table, np.zeros((1, table.shape[1]))])

        def glorot(shape):
            limit = np.sqrt(6.0 / sum(shape)) if len(shape) > 1 else np.sqrt(6.0 / shape[0])
            return rng.uniform(-limit, limit, size=shape)

        params: dict[str, np.ndarray] = {}
        d = config.embedding_dim
        if config.pooling == "attention":
            h = config.attention_hidden
            params["att_W"] = glorot((h, d))
            params["att_b"] = np.zeros(h)
            params["att_v"] = glorot((h,))
        prev = d
        for i, width in enumerate(config.head_widths):
            params[f"head_W{i}"] = glorot((width, prev))
            params[f"head_b{i}"] = np.zeros(width)
            prev = width
        params["out_w"] = glorot((prev,))
        params["out_b"] = np.zeros(1)
        return cls(config, embedding, params)

    @property
    def pad_id(self) -> int:
        return self.embedding.shape[0] - 1

    def copy(self) -> "NeuralModel":
        return NeuralModel(
            self.config, self.embedding.copy(), {k: v.copy() for k, v in self.params.items()}
        )

    # -- forward / backward ------------------------------------------------

    def forward_batch(
        self,
        E: np.ndarray,
        mask: np.ndarray,
        *,
        train: bool = False,
        rng=None,
    ) -> tuple[np.ndarray, dict]:
        """Score a padded batch. E is (B, T, d); mask is (B, T) in {0, 1}."""
        p = self.params
        cache: dict = {"E": E, "mask": mask, "train": train}
        if self.config.pooling == "attention":
            pre = E @ p["att_W"].T + p["att_b"]
            s = np.tanh(pre)
            u = s @ p["att_v"]
            u = np.where(mask > 0, u, NEG_INF)
            ex = np.exp(u - u.max(axis=1, keepdims=True))
            ex *= mask
            a = ex / ex.sum(axis=1, keepdims=True)
            pooled = np.einsum("bt,btd->bd", a, E)
            cache.update(s=s, a=a)
        else:
            denom = mask.sum(axis=1, keepdims=True)
            pooled = np.einsum("bt,btd->bd", mask, E) / denom
            cache.update(denom=denom)

        hidden = pooled
        zs, acts, drops = [], [], []
        for i in range(len(self.config.head_widths)):
            z = hidden @ p[f"head_W{i}"].T + p[f"head_b{i}"]
            zs.append(z)
            hidden = np.maximum(z, 0.0)
            if train and self.config.dropout > 0.0:
                keep = (rng.random(hidden.shape) >= self.config.dropout) / (
                    1.0 - self.config.dropout
                )
                hidden = hidden * keep
                drops.append(keep)
            else:
                drops.append(None)
            acts.append(hidden)
        y = hidden @ p["out_w"] + p["out_b"][0]
        cache.update(pooled=pooled, zs=zs, acts=acts, drops=drops, hidden=hidden)
        return y, cache

    def backward_batch(
        self, cache: dict, dy: np.ndarray
    ) -> tuple[dict[str, np.ndarray], np.ndarray]:
        """Gradients of sum(dy * y) w.r.t. parameters and input embeddings."""
        p = self.params
        E, mask = cache["E"], cache["mask"]
        grads: dict[str, np.ndarray] = {}

        grads["out_w"] = cache["hidden"].T @ dy
        grads["out_b"] = np.array([dy.sum()])
        dh = np.outer(dy, p["out_w"])
        for i in reversed(range(len(self.config.head_widths))):
            keep = cache["drops"][i]
            if keep is not None:
                dh = dh * keep
            dz = dh * (cache["zs"][i] > 0)
            prev = cache["pooled"] if i == 0 else cache["acts"][i - 1]
            grads[f"head_W{i}"] = dz.T @ prev
            grads[f"head_b{i}"] = dz.sum(axis=0)
            dh = dz @ p[f"head_W{i}"]
        dpool = dh

        if self.config.pooling == "attention":
            a, s = cache["a"], cache["s"]
            da = np.einsum("bd,btd->bt", dpool, E)
            dE = a[..., None] * dpool[:, None, :]
            du = a * (da - np.einsum("bt,bt->b", a, da)[:, None])
            grads["att_v"] = np.einsum("bth,bt->h", s, du)
            ds = du[..., None] * p["att_v"]
            dpre = ds * (1.0 - s**2)
            dpre = dpre * mask[..., None]
            grads["att_W"] = np.einsum("bth,btd->hd", dpre, E)
            grads["att_b"] = dpre.sum(axis=(0, 1))
            dE = dE + dpre @ p["att_W"]
        else:
            dE = (mask / cache["denom"])[..., None] * dpool[:, None, :]
        return grads, dE

    # -- inference ---------------------------------------------------------

    def _pad_batch(self, sequences: Sequence[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
        seqs = [list(s) if len(s) else [self.pad_id] for s in sequences]
        T = max(len(s) for s in seqs)
        ids = np.full((len(seqs), T), self.pad_id, dtype=np.int64)
        mask = np.zeros((len(seqs), T))
        for i, s in enumerate(seqs):
            ids[i, : len(s)] = s
            mask[i, : len(s)] = 1.0
        return ids, mask

    def predict(self, sequences: Sequence[Sequence[int]]) -> np.ndarray:
        if not sequences:
            return np.empty(0)
        ids, mask = self._pad_batch(sequences)
        y, _ = self.forward_batch(self.embedding[ids], mask)
        return y

    def embed(self, sequences: Sequence[Sequence[int]]) -> np.ndarray:
        """Pooled representations (the layer fed to the head)."""
        if not sequences:
            return np.empty((0, self.config.embedding_dim))
        ids, mask = self._pad_batch(sequences)
        _, cache = self.forward_batch(self.embedding[ids], mask)
        return cache["pooled"]

    def input_gradients(self, E: np.ndarray, mask: np.ndarray) -> np.ndarray:
        """dF/dE for each batch row (outputs are row-independent)."""
        y, cache = self.forward_batch(E, mask)
        _, dE = self.backward_batch(cache, np.ones_like(y))
        return dE


# ---------------------------------------------------------------------------
# Training

def _decayed(name: str) -> bool:
    return not name.endswith("_b") and not name.startswith("head_b") and name != "att_b"


def _mse(model: NeuralModel, ids: np.ndarray, mask: np.ndarray, y: np.ndarray) -> float:
    pred, _ = model.forward_batch(model.embedding[ids], mask)
    with np.errstate(over="ignore", invalid="ignore"):
        return float(np.mean((pred - y) ** 2))


def train_neural(
    config: NeuralConfig,
    embedding_table: np.ndarray,
    sequences: Sequence[Sequence[int]],
    targets: Sequence[float],
    train_idx: Sequence[int],
    val_idx: Sequence[int],
) -> tuple[NeuralModel, TrainingTrace]:
    """Train with Adam + weight decay, unit-norm clipping, early stopping.

    Returns the parameters of the validation-best epoch and the
    per-epoch trace. Raises TrainingDiverged on a non-finite loss.
    """
    rng = np.random.default_rng(config.seed)
    model = NeuralModel.initialize(config, embedding_table, rng)
    y = np.asarray(targets, dtype=np.float64)
    ids_all, mask_all = model._pad_batch(sequences)
    train_idx = np.asarray(train_idx, dtype=np.int64)
    val_idx = np.asarray(val_idx, dtype=np.int64)
    if len(train_idx) == 0 or len(val_idx) == 0:
        raise ValueError("both train and validation splits must be non-empty")

    trainable = dict(model.params)
    if not config.freeze_embeddings:
        trainable["emb"] = model.embedding
    adam_m = {k: np.zeros_like(v) for k, v in trainable.items()}
    adam_v = {k: np.zeros_like(v) for k, v in trainable.items()}
    step = 0

    trace = TrainingTrace()
    best_params: dict[str, np.ndarray] | None = None
    best_embedding: np.ndarray | None = None
    since_best = 0

    for epoch in range(config.max_epochs):
        order = train_idx.copy()
        rng.shuffle(order)
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            ids, mask = ids_all[batch], mask_all[batch]
            E = model.embedding[ids]
            pred, cache = model.forward_batch(E, mask, train=True, rng=rng)
            err = pred - y[batch]
            with np.errstate(over="ignore", invalid="ignore"):
                loss = float(np.mean(err**2))
            if not np.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}", trace)
            dy = 2.0 * err / len(batch)
            grads, dE = model.backward_batch(cache, dy)
            if not config.freeze_embeddings:
                demb = np.zeros_like(model.embedding)
                np.add.at(demb, ids.ravel(), dE.reshape(-1, dE.shape[-1]))
                grads["emb"] = demb

            for name, grad in grads.items():
                if config.weight_decay > 0.0 and _decayed(name):
                    grad += config.weight_decay * trainable[name]
            if "emb" in grads:
                grads["emb"][model.pad_id] = 0.0

            total = np.sqrt(sum(float((g**2).sum()) for g in grads.values()))
            if total > config.clip_norm:
                scale = config.clip_norm / total
                for g in grads.values():
                    g *= scale
                clipped_norm = config.clip_norm
            else:
                clipped_norm = total
            trace.max_clipped_grad_norm = max(trace.max_clipped_grad_norm, clipped_norm)

            step += 1
            for name, grad in grads.items():
                adam_m[name] = ADAM_BETA1 * adam_m[name] + (1 - ADAM_BETA1) * grad
                adam_v[name] = ADAM_BETA2 * adam_v[name] + (1 - ADAM_BETA2) * grad**2
                m_hat = adam_m[name] / (1 - ADAM_BETA1**step)
                v_hat = adam_v[name] / (1 - ADAM_BETA2**step)
                trainable[name] -= config.learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
            if "emb" in trainable:
                model.embedding[model.pad_id] = 0.0

        train_mse = _mse(model, ids_all[train_idx], mask_all[train_idx], y[train_idx])
        val_mse = _mse(model, ids_all[val_idx], mask_all[val_idx], y[val_idx])
        if not (np.isfinite(train_mse) and np.isfinite(val_mse)):
            raise TrainingDiverged(f"non-finite epoch metrics at epoch {epoch}", trace)
        trace.epochs.append(EpochStats(epoch, train_mse, val_mse))
        if val_mse < trace.best_val_mse:
            trace.best_val_mse = val_mse
            trace.best_epoch = epoch
            best_params = {k: v.copy() for k, v in model.params.items()}
            best_embedding = model.embedding.copy()
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                break

    assert best_params is not None and best_embedding is not None
    model.params = best_params
    model.embedding = best_embedding
    return model, trace


# ---------------------------------------------------------------------------
# Pretrained embedding tables

def load_embedding_text(path) -> tuple[dict[str, np.ndarray], int]:
    """Parse a ``token dim1..dimd`` whitespace table."""
    vectors: dict[str, np.ndarray] = {}
    dim = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            if dim == 0:
                dim = len(vec)
            elif len(vec) != dim:
                raise ValueError(f"inconsistent embedding width for {parts[0]!r}")
            vectors[parts[0]] = vec
    if not vectors:
        raise ValueError(f"no embeddings found in {path}")
    return vectors, dim


def embedding_matrix(terms: Sequence[str], vectors: dict[str, np.ndarray], dim: int) -> np.ndarray:
    """Stack per-term vectors; absent tokens map to the zero vector."""
    out = np.zeros((len(terms), dim))
    for i, term in enumerate(terms):
        vec = vectors.get(term)
        if vec is not None:
            out[i] = vec
    return out

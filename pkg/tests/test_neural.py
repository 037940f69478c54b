"""Neural model tests: gradient correctness, pooling, training contracts."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bridgecraft.models import (
    NeuralConfig,
    NeuralModel,
    TrainingDiverged,
    attention_pool,
    train_neural,
)


def finite_difference_grads(model, E, mask, y_true, h=1e-6):
    """Central-difference loss gradients for every parameter array."""

    def loss():
        pred, _ = model.forward_batch(E, mask)
        return float(np.mean((pred - y_true) ** 2))

    numeric = {}
    for name, arr in model.params.items():
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = arr[idx]
            arr[idx] = old + h
            up = loss()
            arr[idx] = old - h
            down = loss()
            arr[idx] = old
            g[idx] = (up - down) / (2 * h)
        numeric[name] = g
    return numeric


def small_instance(rng, pooling="attention"):
    cfg = NeuralConfig(
        embedding_dim=8,
        pooling=pooling,
        attention_hidden=6,
        head_widths=(5,),
        seed=int(rng.integers(0, 2**31)),
    )
    model = NeuralModel.initialize(cfg, rng.normal(size=(12, 8)))
    ids = rng.integers(0, 12, size=(4, 3))
    mask = np.ones((4, 3))
    mask[1, 2] = 0.0
    E = model.embedding[ids] * mask[..., None]
    y = rng.normal(size=4)
    return model, E, mask, y


class TestGradients:
    def test_backprop_matches_central_differences(self):
        rng = np.random.default_rng(2024)
        for _ in range(5):
            model, E, mask, y = small_instance(rng)
            pred, cache = model.forward_batch(E, mask)
            dy = 2.0 * (pred - y) / len(y)
            grads, _ = model.backward_batch(cache, dy)
            numeric = finite_difference_grads(model, E, mask, y)
            for name in grads:
                denom = max(np.abs(numeric[name]).max(), np.abs(grads[name]).max(), 1e-10)
                rel = np.abs(grads[name] - numeric[name]).max() / denom
                assert rel < 1e-4, f"{name}: rel err {rel}"

    def test_input_gradients_match_central_differences(self):
        rng = np.random.default_rng(7)
        model, E, mask, y = small_instance(rng)

        def loss():
            pred, _ = model.forward_batch(E, mask)
            return float(np.mean((pred - y) ** 2))

        pred, cache = model.forward_batch(E, mask)
        grads, dE = model.backward_batch(cache, 2.0 * (pred - y) / len(y))
        h = 1e-6
        numeric = np.zeros_like(E)
        it = np.nditer(E, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = E[idx]
            E[idx] = old + h
            up = loss()
            E[idx] = old - h
            down = loss()
            E[idx] = old
            numeric[idx] = (up - down) / (2 * h)
        rel = np.abs(dE - numeric).max() / max(np.abs(numeric).max(), 1e-10)
        assert rel < 1e-4


class TestAttentionPool:
    def test_single_token_identity(self):
        rng = np.random.default_rng(0)
        W, b, v = rng.normal(size=(4, 6)), rng.normal(size=4), rng.normal(size=4)
        e = rng.normal(size=(1, 6))
        pooled, weights = attention_pool(e, W, b, v)
        assert np.allclose(pooled, e[0])
        assert weights.tolist() == [1.0]

    def test_identical_tokens_uniform(self):
        rng = np.random.default_rng(1)
        W, b, v = rng.normal(size=(4, 6)), rng.normal(size=4), rng.normal(size=4)
        e = np.tile(rng.normal(size=(1, 6)), (5, 1))
        pooled, weights = attention_pool(e, W, b, v)
        assert np.allclose(weights, 0.2)
        assert np.allclose(pooled, e[0])

    @given(st.integers(1, 12), st.integers(0, 1000))
    @settings(max_examples=30, deadline=None)
    def test_weights_form_convex_combination(self, n_tokens, seed):
        rng = np.random.default_rng(seed)
        W, b, v = rng.normal(size=(4, 6)), rng.normal(size=4), rng.normal(size=4)
        e = rng.normal(size=(n_tokens, 6))
        _, weights = attention_pool(e, W, b, v)
        assert np.all(weights >= 0)
        assert abs(weights.sum() - 1.0) < 1e-9

    def test_zero_tokens_rejected(self):
        W, b, v = np.zeros((4, 6)), np.zeros(4), np.zeros(4)
        with pytest.raises(ValueError):
            attention_pool(np.empty((0, 6)), W, b, v)


def toy_data(rng, n=200, vocab=30, dim=8):
    table = rng.normal(size=(vocab, dim))
    seqs = [list(rng.integers(0, vocab, size=rng.integers(2, 8))) for _ in range(n)]
    return table, seqs


class TestTraining:
    def test_planted_linear_target_reaches_low_mse(self):
        rng = np.random.default_rng(5)
        table, seqs = toy_data(rng)
        w = rng.normal(size=8)
        targets = [float(table[s].mean(axis=0) @ w) for s in seqs]
        cfg = NeuralConfig(
            embedding_dim=8,
            pooling="mean",
            head_widths=(),
            learning_rate=0.05,
            weight_decay=0.0,
            max_epochs=100,
            patience=100,
            seed=0,
        )
        idx = np.arange(len(seqs))
        model, trace = train_neural(cfg, table, seqs, targets, idx[:160], idx[160:])
        assert trace.epochs[-1].train_mse < 1e-3

    def test_frozen_embeddings_bit_identical(self):
        rng = np.random.default_rng(6)
        table, seqs = toy_data(rng, n=60)
        targets = list(rng.normal(size=60))
        cfg = NeuralConfig(
            embedding_dim=8, pooling="attention", attention_hidden=4,
            freeze_embeddings=True, max_epochs=3, seed=1,
        )
        before = table.copy()
        model, _ = train_neural(cfg, table, seqs, targets, range(50), range(50, 60))
        assert model.embedding[:-1].tobytes() == before.tobytes()

    def test_trainable_embeddings_change(self):
        rng = np.random.default_rng(6)
        table, seqs = toy_data(rng, n=60)
        targets = list(rng.normal(size=60))
        cfg = NeuralConfig(
            embedding_dim=8, pooling="mean", freeze_embeddings=False,
            max_epochs=3, seed=1,
        )
        before = table.copy()
        model, _ = train_neural(cfg, table, seqs, targets, range(50), range(50, 60))
        assert model.embedding[:-1].tobytes() != before.tobytes()
        assert np.all(model.embedding[-1] == 0.0)  # pad row pinned

    def test_clipped_gradient_norm_bounded(self):
        rng = np.random.default_rng(7)
        table, seqs = toy_data(rng, n=80)
        targets = list(10.0 * rng.normal(size=80))  # big targets force clipping
        cfg = NeuralConfig(
            embedding_dim=8, pooling="attention", attention_hidden=4,
            max_epochs=5, seed=2,
        )
        _, trace = train_neural(cfg, table, seqs, targets, range(60), range(60, 80))
        assert trace.max_clipped_grad_norm <= 1.0 + 1e-9

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(8)
        table, seqs = toy_data(rng, n=50)
        targets = list(rng.normal(size=50))
        cfg = NeuralConfig(embedding_dim=8, pooling="mean", max_epochs=4, seed=3, dropout=0.3, head_widths=(6,))
        m1, _ = train_neural(cfg, table, seqs, targets, range(40), range(40, 50))
        m2, _ = train_neural(cfg, table, seqs, targets, range(40), range(40, 50))
        for k in m1.params:
            assert m1.params[k].tobytes() == m2.params[k].tobytes()

    def test_divergence_raises_with_trace(self):
        rng = np.random.default_rng(9)
        table, seqs = toy_data(rng, n=40)
        targets = list(1e150 * np.ones(40))
        cfg = NeuralConfig(
            embedding_dim=8, pooling="mean", learning_rate=1e200,
            max_epochs=3, seed=4, weight_decay=0.0,
        )
        with pytest.raises(TrainingDiverged) as err:
            train_neural(cfg, table, seqs, targets, range(30), range(30, 40))
        assert err.value.trace is not None

    def test_returns_validation_best_epoch(self):
        rng = np.random.default_rng(10)
        table, seqs = toy_data(rng, n=80)
        w = rng.normal(size=8)
        targets = [float(table[s].mean(axis=0) @ w) for s in seqs]
        cfg = NeuralConfig(
            embedding_dim=8, pooling="mean", learning_rate=0.05,
            max_epochs=30, patience=5, seed=5, weight_decay=0.0,
        )
        model, trace = train_neural(cfg, table, seqs, targets, range(60), range(60, 80))
        assert trace.best_val_mse == min(e.val_mse for e in trace.epochs)

    def test_inference_deterministic_with_dropout_config(self):
        rng = np.random.default_rng(11)
        table, seqs = toy_data(rng, n=40)
        targets = list(rng.normal(size=40))
        cfg = NeuralConfig(
            embedding_dim=8, pooling="attention", attention_hidden=4,
            head_widths=(6,), dropout=0.3, max_epochs=2, seed=6,
        )
        model, _ = train_neural(cfg, table, seqs, targets, range(30), range(30, 40))
        p1 = model.predict(seqs[:5])
        p2 = model.predict(seqs[:5])
        assert p1.tobytes() == p2.tobytes()

    def test_empty_sequence_padded(self):
        rng = np.random.default_rng(12)
        cfg = NeuralConfig(embedding_dim=4, pooling="attention", attention_hidden=3, seed=0)
        model = NeuralModel.initialize(cfg, rng.normal(size=(5, 4)))
        scores = model.predict([[], [1, 2]])
        assert len(scores) == 2 and np.all(np.isfinite(scores))

"""Acceptance suite: every [PRIMARY] criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS line
per criterion; a failed assertion marks the criterion FAILED.
"""

import numpy as np
import pytest
import scipy.sparse as sp
from scipy import stats as scipy_stats

from bridgecraft.attribution import integrated_gradients
from bridgecraft.corpus import (
    Covariates,
    Leaning,
    Tier,
    UserProfile,
    audience_diversity,
    entropy_of_shares,
)
from bridgecraft.experiment import (
    ArmOutcome,
    balance_permutation,
    click_tradeoff,
    entropy_delta_from_shares,
    randomization_inference,
)
from bridgecraft.explain import EmbeddingIndex
from bridgecraft.models.evaluate import evaluate
from bridgecraft.models.linear import train_linear
from bridgecraft.models.neural import NeuralConfig, NeuralModel, train_neural
from bridgecraft.models.split import split_dataset
from bridgecraft.textprep.vocab import Scheme, encode_corpus, fit_pipeline
from tests.test_linear import ridge_oracle
from tests.test_neural import finite_difference_grads


def ok(name: str) -> None:
    print(f"ACCEPTANCE PASS: {name}")


class TestEntropyFixtures:
    def test_entropy_fixtures(self):
        assert entropy_of_shares(0.45) == pytest.approx(0.9927, abs=5e-4)
        delta = entropy_delta_from_shares(0.536, 0.571)
        assert delta == pytest.approx(0.0108, abs=5e-4)
        ok("entropy fixtures: H(0.45)=0.9927 and Experiment-1 delta=0.0108")


class TestSmoothingFixtures:
    def test_smoothing_fixtures(self):
        assert audience_diversity(3, 0) == pytest.approx(0.7219, abs=1e-4)
        assert audience_diversity(100, 0) == pytest.approx(0.0795, abs=1e-4)
        values = [audience_diversity(n, 0) for n in range(1, 1001)]
        assert all(a > b for a, b in zip(values, values[1:]))
        ok("smoothing fixtures: (3,0)=0.7219, (100,0)=0.0795, strict decrease n=1..1000")


class TestSolverOracles:
    def test_solver_oracles(self):
        rng = np.random.default_rng(123)
        for _ in range(20):
            X = rng.normal(size=(50, 30))
            y = rng.normal(size=50)
            lam = float(10.0 ** rng.uniform(-3, 2))
            model = train_linear("ridge", X, y, lam=lam)
            w_ref, b_ref = ridge_oracle(X, y, lam)
            assert np.abs(model.weights - w_ref).max() < 1e-6
            assert abs(model.intercept - b_ref) < 1e-6

        X = rng.normal(size=(60, 12))
        y = rng.normal(size=60)
        lam_max = float(np.abs(X.T @ y).max()) / len(y)
        zeroed = train_linear("lasso", X, y, lam=lam_max * 1.0001, fit_intercept=False)
        assert np.all(zeroed.weights == 0.0)

        w_true = np.zeros(12)
        w_true[:3] = [1.0, -2.0, 0.5]
        y_sig = X @ w_true + 0.05 * rng.normal(size=60)
        for kind in ("lasso", "elasticnet"):
            model = train_linear(kind, X, y_sig, lam=0.01)
            trace = model.objective_trace
            assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))
        ok("solver oracles: ridge closed form 1e-6 x20, lasso lambda_max zeroing, CD monotone")


class TestGradientCorrectness:
    def test_gradient_correctness(self):
        rng = np.random.default_rng(2024)
        for _ in range(5):
            cfg = NeuralConfig(
                embedding_dim=8, pooling="attention", attention_hidden=6,
                head_widths=(5,), seed=int(rng.integers(0, 2**31)),
            )
            model = NeuralModel.initialize(cfg, rng.normal(size=(12, 8)))
            ids = rng.integers(0, 12, size=(3, 3))
            mask = np.ones((3, 3))
            E = model.embedding[ids]
            y = rng.normal(size=3)
            pred, cache = model.forward_batch(E, mask)
            grads, _ = model.backward_batch(cache, 2.0 * (pred - y) / len(y))
            numeric = finite_difference_grads(model, E, mask, y)
            for name in grads:
                denom = max(np.abs(numeric[name]).max(), np.abs(grads[name]).max(), 1e-10)
                rel = np.abs(grads[name] - numeric[name]).max() / denom
                assert rel < 1e-4, f"{name}: rel err {rel}"
        ok("gradient correctness: attention backprop vs central differences < 1e-4 x5")


class TestIntegratedGradients:
    def test_integrated_gradients(self):
        rng = np.random.default_rng(9)
        # exactness on a linear head
        lin_cfg = NeuralConfig(embedding_dim=6, pooling="mean", head_widths=(), seed=0)
        lin = NeuralModel.initialize(lin_cfg, rng.normal(size=(8, 6)))
        e = rng.normal(size=(1, 6))
        w = lin.params["out_w"]
        for steps in (1, 7, 64):
            result = integrated_gradients(lin, e, steps=steps)
            assert abs(result.token_attributions[0] - float(w @ e[0])) <= 1e-10

        # completeness at m=512 on the attention model (with head layers)
        att_cfg = NeuralConfig(
            embedding_dim=6, pooling="attention", attention_hidden=4,
            head_widths=(5,), seed=1,
        )
        att = NeuralModel.initialize(att_cfg, rng.normal(size=(8, 6)))
        for _ in range(5):
            E = rng.normal(size=(int(rng.integers(2, 8)), 6)) * 2.0
            result = integrated_gradients(att, E, steps=512)
            bound = 0.01 * abs(result.prediction - result.baseline_value) + 1e-6
            assert result.completeness_gap <= bound

        # doubling m never increases the gap on the fixed smooth probes
        smooth_cfg = NeuralConfig(
            embedding_dim=6, pooling="attention", attention_hidden=4,
            head_widths=(), seed=2,
        )
        smooth = NeuralModel.initialize(smooth_cfg, rng.normal(size=(8, 6)))
        for n_tokens in (2, 4, 7):
            E = rng.normal(size=(n_tokens, 6)) * 1.5
            gaps = [
                integrated_gradients(smooth, E, steps=m).completeness_gap
                for m in (32, 64, 128, 256, 512)
            ]
            for a, b in zip(gaps, gaps[1:]):
                assert b <= a + 1e-12
        ok("integrated gradients: linear exactness 1e-10, gap<=1% at m=512, doubling monotone")


class TestPlantedSignalLearning:
    def test_planted_signal_learning(self):
        rng = np.random.default_rng(42)
        n_tokens, dim, n_docs = 200, 16, 5000
        words = [f"w{i:03d}" for i in range(n_tokens)]
        signal = rng.choice(n_tokens, size=n_tokens // 10, replace=False)  # 10%
        beta = np.zeros(n_tokens)
        beta[signal] = rng.normal(0, 1.0, size=len(signal))

        token_docs = [
            rng.integers(0, n_tokens, size=int(rng.integers(5, 16))).tolist()
            for _ in range(n_docs)
        ]
        texts = [" ".join(words[t] for t in doc) for doc in token_docs]
        presence = np.zeros((n_docs, n_tokens))
        for i, doc in enumerate(token_docs):
            presence[i, list(set(doc))] = 1.0
        y = presence @ beta
        y = y + rng.normal(0, 0.1 * y.std(), size=n_docs)

        idx = rng.permutation(n_docs)
        train_idx, val_idx, test_idx = idx[:4000], idx[4000:4500], idx[4500:]

        # ridge on the tf-idf pipeline features
        vocab = fit_pipeline([texts[i] for i in train_idx], Scheme.word(1))
        X = encode_corpus(texts, vocab)
        ridge = train_linear("ridge", X[train_idx], y[train_idx], lam=1.0)
        report = evaluate(y[test_idx], ridge.predict(X[test_idx]), y[train_idx])
        assert report.model.mae <= 0.5 * report.baseline_median.mae

        # attention pooling at least matches mean pooling on validation MSE
        table = rng.normal(size=(len(vocab), dim)) / np.sqrt(dim)
        sequences = [vocab.token_ids(t) for t in texts]
        val_mse = {}
        for pooling in ("mean", "attention"):
            cfg = NeuralConfig(
                embedding_dim=dim, pooling=pooling, attention_hidden=32,
                head_widths=(64,), learning_rate=0.01, batch_size=64,
                max_epochs=30, patience=10, weight_decay=0.0, seed=7,
            )
            _, trace = train_neural(cfg, table, sequences, y, train_idx, val_idx)
            val_mse[pooling] = trace.best_val_mse
        assert val_mse["attention"] <= val_mse["mean"]
        ok(
            "planted-signal learning: ridge MAE "
            f"{report.model.mae:.3f} <= 0.5x median {0.5 * report.baseline_median.mae:.3f}; "
            f"attention {val_mse['attention']:.3f} <= mean {val_mse['mean']:.3f}"
        )


class TestSplitStratification:
    def test_split_stratification(self):
        outlets = ["nyt"] * 137 + ["cnn"] * 83 + ["wsj"] * 52 + ["frontline"] * 28
        totals = {o: outlets.count(o) for o in set(outlets)}
        for seed in range(100):
            split = split_dataset(outlets, seed=seed)
            for part, frac in (
                (split.train, 0.8), (split.validation, 0.1), (split.test, 0.1),
            ):
                counts: dict[str, int] = {}
                for i in part:
                    counts[outlets[i]] = counts.get(outlets[i], 0) + 1
                for outlet, total in totals.items():
                    assert abs(counts.get(outlet, 0) - frac * total) <= 1
        ok("split stratification: per-outlet proportions within +-1 over 100 seeds")


def _null_users(rng, n=150):
    users = []
    for i in range(n):
        tier = Tier.DIRECT_FOLLOWER if i % 2 == 0 else Tier.FOLLOWER_OF_FOLLOWER
        users.append(
            UserProfile(
                user_id=f"u{i}", shared_domains=(), alignment=-1.0,
                leaning=Leaning.LEFT,
                covariates=Covariates(
                    posts=int(rng.integers(1, 3000)),
                    likes=int(rng.integers(0, 9000)),
                    followers=int(rng.integers(0, 50000)),
                    friends=int(rng.integers(0, 2000)),
                    tenure_days=float(rng.integers(10, 4000)),
                    alignment_value=float(rng.normal()),
                ),
                tier=tier,
            )
        )
    return users


def _scheme_assignment(rng, users):
    """Observed assignment drawn by the same stratified dealing scheme."""
    y = np.zeros(len(users))
    strata: dict[tuple, list[int]] = {}
    for i, user in enumerate(users):
        strata.setdefault((user.leaning.value, user.tier.value), []).append(i)
    for indices in strata.values():
        indices = np.array(indices)
        chosen = rng.permutation(len(indices))[: len(indices) // 2]
        y[indices[chosen]] = 1.0
    return y.astype(int)


def _click_experiments(rng, n_experiments=8, scale=1.0):
    outcomes = {}
    for e in range(n_experiments):
        name = f"e{e}"
        clicks = rng.poisson(50, size=4)
        if scale != 1.0:
            clicks[0] = int(clicks[0] * scale)
            clicks[1] = int(clicks[1] * scale)
        outcomes[name] = [
            ArmOutcome(name, "treatment-left", 100, 10, int(clicks[0])),
            ArmOutcome(name, "treatment-right", 100, 10, int(clicks[1])),
            ArmOutcome(name, "control-left", 100, 10, int(clicks[2])),
            ArmOutcome(name, "control-right", 100, 10, int(clicks[3])),
        ]
    return outcomes


class TestStatisticalCalibration:
    def test_balance_permutation_null_uniform(self):
        ps = []
        for rep in range(200):
            rng = np.random.default_rng(10_000 + rep)
            users = _null_users(rng)
            assignment = _scheme_assignment(rng, users)
            ps.append(balance_permutation(users, assignment, n_perm=199, seed=rep))
        ks = scipy_stats.kstest(ps, "uniform")
        assert ks.pvalue > 0.01
        ok(f"calibration: balance_permutation null KS p={ks.pvalue:.3f} > 0.01")

    def test_click_tradeoff_null_uniform(self):
        ps = []
        for rep in range(200):
            rng = np.random.default_rng(20_000 + rep)
            ps.append(click_tradeoff(_click_experiments(rng)).p_value)
        ks = scipy_stats.kstest(ps, "uniform")
        assert ks.pvalue > 0.01
        ok(f"calibration: click_tradeoff null KS p={ks.pvalue:.3f} > 0.01")

    def test_planted_imbalance_small_p(self):
        rng = np.random.default_rng(77)
        users = _null_users(rng, n=300)
        assignment = _scheme_assignment(rng, users)
        shifted = []
        for user, treated in zip(users, assignment):
            cov = user.covariates
            shifted.append(
                UserProfile(
                    user_id=user.user_id, shared_domains=(), alignment=user.alignment,
                    leaning=user.leaning,
                    covariates=Covariates(
                        posts=cov.posts + 4000 * int(treated),
                        likes=cov.likes, followers=cov.followers,
                        friends=cov.friends, tenure_days=cov.tenure_days,
                        alignment_value=cov.alignment_value,
                    ),
                    tier=user.tier,
                )
            )
        p_balance = balance_permutation(shifted, assignment, n_perm=1000, seed=5)
        assert p_balance <= 0.001

        rng = np.random.default_rng(88)
        planted = _click_experiments(rng, n_experiments=12, scale=0.5)
        p_click = click_tradeoff(planted).p_value
        assert p_click <= 0.001
        ok(
            f"calibration: planted imbalance p={p_balance:.4g} and "
            f"planted click deficit p={p_click:.4g}, both <= 0.001"
        )

    def test_randomization_inference_exhaustive_exact(self):
        result = randomization_inference([0.01] * 10)
        assert result.method == "exhaustive"
        assert result.p_value == 2 / 1024
        ok("calibration: RI on ten constant deltas p = 2/1024 exactly")


class TestNearestNeighborExactness:
    def test_nearest_neighbor_exactness(self):
        rng = np.random.default_rng(31)
        vectors = rng.normal(size=(1000, 24))
        ids = [f"item{i}" for i in range(1000)]
        index = EmbeddingIndex.build(ids, vectors)
        unit = vectors / np.linalg.norm(vectors, axis=1, keepdims=True)
        for _ in range(50):
            q = rng.normal(size=24)
            qn = q / np.linalg.norm(q)
            sims = [(ids[i], float(unit[i] @ qn)) for i in range(1000)]
            oracle = [name for name, _ in sorted(sims, key=lambda t: -t[1])[:10]]
            got = [name for name, _ in index.query(q, k=10)]
            assert got == oracle
        ok("nearest-neighbor exactness: 50 queries match the exhaustive scan")


class TestEndToEndDeterminism:
    def test_end_to_end_determinism(self, demo, tmp_path):
        from bridgecraft.cli import main
        from tests.conftest import write_domains_csv, write_users_jsonl

        train_args = [
            "train", "--corpus", str(demo.corpus), "--model", "ridge",
            "--lambda", "1.0", "--vocab", "word-1gram", "--seed", "7",
        ]
        assert main(train_args + ["--out", str(tmp_path / "one.json")]) == 0
        assert main(train_args + ["--out", str(tmp_path / "two.json")]) == 0
        assert (tmp_path / "one.json").read_bytes() == (tmp_path / "two.json").read_bytes()

        write_domains_csv(tmp_path / "domains.csv")
        write_users_jsonl(tmp_path / "users.jsonl", n_left=40, n_right=40)
        plan_args = [
            "--workdir", str(tmp_path), "experiment-plan", "--users", "users.jsonl",
            "--domains", "domains.csv", "--arm-size", "12", "--seed", "9",
        ]
        assert main(plan_args + ["--out", "plan1.csv"]) == 0
        assert main(plan_args + ["--out", "plan2.csv"]) == 0
        assert (tmp_path / "plan1.csv").read_bytes() == (tmp_path / "plan2.csv").read_bytes()
        ok("end-to-end determinism: bit-identical artifact and identical plan CSV")

"""Batch command-line entry points for the full pipeline.

Every subcommand validates its inputs before touching outputs, writes
artifacts atomically (temp file + rename), and embeds {tool version,
seed, input hashes} so any output is reproducible from the command line
alone. Logs go to stderr; data goes to files only.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

import bridgecraft
from bridgecraft import corpus as corpus_mod
from bridgecraft import experiment as exp_mod
from bridgecraft.attribution import REPORT_STEPS, attribute_corpus, load_lexicons
from bridgecraft.explain import (
    EmbeddingIndex,
    compute_word_stats,
    word_stats_csv,
)
from bridgecraft.models.artifact import (
    Predictor,
    artifact_from_linear,
    artifact_from_neural,
    save_artifact,
)
from bridgecraft.models.evaluate import EvalReport, evaluate
from bridgecraft.models.linear import train_linear
from bridgecraft.models.neural import (
    NeuralConfig,
    embedding_matrix,
    load_embedding_text,
    train_neural,
)
from bridgecraft.models.split import split_dataset
from bridgecraft.storage import atomic_write_text, sha256_file
from bridgecraft.textprep.vocab import Scheme, encode_corpus, fit_pipeline

logger = logging.getLogger("bridgecraft.cli")

LINEAR_MODELS = ("ols", "ridge", "lasso", "elasticnet", "svr")
NEURAL_MODELS = ("neural-mean", "neural-attention")

VOCAB_FLAGS = {
    "word-1gram": Scheme.word(1),
    "word-2gram": Scheme.word(2),
    "char-3-5": Scheme.char(cross_token=False),
    "char-3-5-ws": Scheme.char(cross_token=True),
    "subword": Scheme.subword(),
}


class CliError(Exception):
    """User-facing failure; prints a structured message and exits 1."""


def _provenance(seed: int, inputs: dict[str, Path]) -> dict:
    return {
        "tool_version": bridgecraft.__version__,
        "seed": seed,
        "input_hashes": {name: sha256_file(path) for name, path in sorted(inputs.items())},
    }


def _targets(records, target: str) -> np.ndarray:
    if target == "diversity":
        return np.array([r.diversity for r in records])
    return np.array([r.mean_alignment for r in records])


# ---------------------------------------------------------------------------
# Subcommand handlers (each takes parsed args, returns exit code 0)

def cmd_ingest(args) -> int:
    table = corpus_mod.load_domain_alignments(args.domains)
    posts = corpus_mod.read_posts_jsonl(args.posts)
    events = corpus_mod.read_events_jsonl(args.events)
    users = corpus_mod.read_users_jsonl(args.users, table)
    records, report = corpus_mod.build_labeled_corpus(posts, events, users)
    lines = "".join(
        json.dumps(rec.__dict__, sort_keys=True) + "\n" for rec in records
    )
    atomic_write_text(args.out, lines)
    atomic_write_text(args.report, json.dumps(report.to_dict(), sort_keys=True) + "\n")
    logger.info("admitted %d of %d posts", report.admitted, report.posts_total)
    return 0


def _fit_features(train_texts, scheme, scale):
    return fit_pipeline(train_texts, scheme, scale=scale)


def cmd_train(args) -> int:
    records = corpus_mod.read_corpus_jsonl(args.corpus)
    if not records:
        raise CliError("corpus is empty")
    split_seed = args.split_seed if args.split_seed is not None else args.seed
    split = split_dataset([r.outlet for r in records], seed=split_seed)
    texts = [r.text for r in records]
    y = _targets(records, args.target)
    train_texts = [texts[i] for i in split.train]

    scheme = VOCAB_FLAGS[args.vocab]
    vocab = _fit_features(train_texts, scheme, scale=not args.no_scale)

    provenance = _provenance(args.seed, {"corpus": args.corpus})
    provenance["split_seed"] = split_seed
    # conventions the artifact depends on but the wire formats don't show
    provenance["conventions"] = {
        "tf": "raw term count",
        "idf": "ln((1+N)/(1+df)) + 1",
        "scaler": "population std over train vectors, zeros included",
        "attention_score": "v . tanh(W e + b) with softmax over tokens",
    }

    if args.model in LINEAR_MODELS:
        X = encode_corpus(texts, vocab)
        model = train_linear(
            args.model,
            X[list(split.train)],
            y[list(split.train)],
            lam=args.lam,
            epsilon=args.epsilon,
        )
        val_pred = model.predict(X[list(split.validation)])
        report = evaluate(y[list(split.validation)], val_pred, y[list(split.train)])
        artifact = artifact_from_linear(
            model,
            target=args.target,
            seed=args.seed,
            vocabulary=vocab,
            metrics={"val_mae": report.model.mae, "val_mse": report.model.mse},
            provenance=provenance,
        )
    else:
        if args.embeddings is None:
            raise CliError("neural models need --embeddings")
        vectors, dim = load_embedding_text(args.embeddings)
        table = embedding_matrix(vocab.terms, vectors, dim)
        provenance["input_hashes"]["embeddings"] = sha256_file(args.embeddings)
        config = NeuralConfig(
            embedding_dim=dim,
            pooling="attention" if args.model == "neural-attention" else "mean",
            attention_hidden=args.attention_hidden,
            head_widths=tuple(int(w) for w in args.head_widths.split(",") if w),
            dropout=args.dropout,
            freeze_embeddings=not args.finetune_embeddings,
            learning_rate=args.lr,
            batch_size=args.batch_size,
            max_epochs=args.epochs,
            patience=args.patience,
            seed=args.seed,
        )
        sequences = [vocab.token_ids(t) for t in texts]
        model, trace = train_neural(
            config, table, sequences, y, split.train, split.validation
        )
        trace_lines = ["epoch,train_mse,val_mse"] + [
            f"{e},{tr:.10g},{va:.10g}" for e, tr, va in trace.rows()
        ]
        atomic_write_text(str(args.out) + ".trace.csv", "\n".join(trace_lines) + "\n")
        artifact = artifact_from_neural(
            model,
            target=args.target,
            seed=args.seed,
            vocabulary=vocab,
            metrics={
                "best_epoch": trace.best_epoch,
                "best_val_mse": trace.best_val_mse,
            },
            provenance=provenance,
        )
    save_artifact(artifact, args.out)
    logger.info("wrote %s (%s)", args.out, artifact.hash()[:12])
    return 0


def _report_csv(report: EvalReport) -> str:
    lines = ["row,mae,mae_ci_low,mae_ci_high,mse,mse_ci_low,mse_ci_high"]
    for row in report.rows():
        lines.append(
            f"{row.name},{row.mae:.10g},{row.mae_ci[0]:.10g},{row.mae_ci[1]:.10g},"
            f"{row.mse:.10g},{row.mse_ci[0]:.10g},{row.mse_ci[1]:.10g}"
        )
    return "\n".join(lines) + "\n"


def cmd_eval(args) -> int:
    predictor = Predictor.load(args.model)
    records = corpus_mod.read_corpus_jsonl(args.corpus)
    split_seed = args.split_seed
    if split_seed is None:
        split_seed = predictor.artifact.provenance.get("split_seed")
    if split_seed is None:
        raise CliError("artifact carries no split seed; pass --split-seed")
    split = split_dataset([r.outlet for r in records], seed=int(split_seed))
    part = {"train": split.train, "validation": split.validation, "test": split.test}[
        args.split
    ]
    texts = [records[i].text for i in part]
    y_part = _targets([records[i] for i in part], predictor.target)
    y_train = _targets([records[i] for i in split.train], predictor.target)
    report = evaluate(y_part, predictor.predict_texts(texts), y_train)
    atomic_write_text(args.out, _report_csv(report))
    logger.info(
        "%s on %s: MAE %.4f MSE %.4f", args.model, args.split,
        report.model.mae, report.model.mse,
    )
    return 0


def cmd_attribute(args) -> int:
    predictor = Predictor.load(args.model)
    if predictor.neural_model is None:
        raise CliError("attribution needs a neural model artifact")
    records = corpus_mod.read_corpus_jsonl(args.corpus)
    split_seed = args.split_seed
    if split_seed is None:
        split_seed = predictor.artifact.provenance.get("split_seed")
    if split_seed is None:
        raise CliError("artifact carries no split seed; pass --split-seed")
    split = split_dataset([r.outlet for r in records], seed=int(split_seed))
    part = {"train": split.train, "validation": split.validation, "test": split.test}[
        args.split
    ]
    texts = [records[i].text for i in part]
    lexicons = load_lexicons(args.lexicons) if args.lexicons else []
    report = attribute_corpus(
        predictor.neural_model,
        predictor.vocabulary,
        texts,
        lexicons,
        steps=args.steps,
    )
    atomic_write_text(str(args.out) + ".json", report.to_json() + "\n")
    atomic_write_text(str(args.out) + ".csv", report.category_csv())
    logger.info(
        "attributed %d texts; max completeness gap %.2e",
        len(texts), report.max_completeness_gap,
    )
    return 0


def cmd_stats(args) -> int:
    records = corpus_mod.read_corpus_jsonl(args.corpus)
    table = compute_word_stats(records)
    atomic_write_text(args.out, word_stats_csv(table))
    logger.info("word statistics for %d words", len(table.stats))
    return 0


def cmd_index(args) -> int:
    predictor = Predictor.load(args.model)
    if predictor.neural_model is None:
        raise CliError("the similarity index needs a neural model artifact")
    records = corpus_mod.read_corpus_jsonl(args.corpus)
    vectors = predictor.embed_texts([r.text for r in records])
    index = EmbeddingIndex.build(
        [r.tweet_id for r in records], vectors, model_hash=predictor.hash
    )
    tmp = Path(str(args.out) + ".tmp.npz")
    index.save(tmp)
    os.replace(tmp, args.out)
    logger.info("indexed %d posts", len(records))
    return 0


def cmd_serve(args) -> int:
    from bridgecraft.service import serve

    serve(args.config, host=args.host, port=args.port)
    return 0


def _load_user_pools(users_path, domains_path):
    table = corpus_mod.load_domain_alignments(domains_path)
    users = corpus_mod.read_users_jsonl(users_path, table)
    left = [u for u in users.values() if u.leaning is corpus_mod.Leaning.LEFT]
    right = [u for u in users.values() if u.leaning is corpus_mod.Leaning.RIGHT]
    return users, left, right


def cmd_experiment_plan(args) -> int:
    _, left, right = _load_user_pools(args.users, args.domains)
    plan = exp_mod.assign_audience(
        left, right, arm_size=args.arm_size, seed=args.seed,
        experiment_id=args.experiment_id,
    )
    atomic_write_text(args.out, exp_mod.plan_csv(plan))
    meta = {
        "experiment_id": plan.experiment_id,
        "stratification": plan.stratification,
        **_provenance(args.seed, {"users": args.users, "domains": args.domains}),
    }
    atomic_write_text(str(args.out) + ".meta.json", json.dumps(meta, sort_keys=True) + "\n")
    return 0


def cmd_experiment_balance(args) -> int:
    users, left, right = _load_user_pools(args.users, args.domains)
    arm_of = exp_mod.plan_from_csv(Path(args.plan).read_text(encoding="utf-8"))

    def comparison(pool):
        chosen = [u for u in pool if u.user_id in arm_of]
        assignment = [1 if arm_of[u.user_id].startswith("treatment") else 0 for u in chosen]
        regression = exp_mod.balance_regression(chosen, assignment)
        p_perm = exp_mod.balance_permutation(
            chosen, assignment, n_perm=args.n_perm, seed=args.seed, threads=args.threads
        )
        return {
            "n": len(chosen),
            "coefficients": [
                {
                    "name": c.name,
                    "coefficient": c.coefficient,
                    "std_error": c.std_error,
                    "p_value": c.p_value,
                }
                for c in regression.coefficients
            ],
            "dropped": regression.dropped,
            "separation": regression.separation,
            "log_likelihood": regression.log_likelihood,
            "permutation_p": p_perm,
        }

    payload = {
        "scheme": "stratified re-randomization within (leaning, tier)",
        "left": comparison(left),
        "right": comparison(right),
        "all": comparison(left + right),
        **_provenance(args.seed, {"users": args.users, "domains": args.domains, "plan": args.plan}),
    }
    atomic_write_text(args.out, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return 0


def cmd_experiment_analyze(args) -> int:
    by_experiment = exp_mod.read_outcomes_csv(Path(args.outcomes).read_text(encoding="utf-8"))
    results = [
        exp_mod.analyze_outcomes(outcomes, mode=args.mode)
        for _, outcomes in sorted(by_experiment.items())
    ]
    inference = exp_mod.randomization_inference(
        [r.delta_entropy for r in results], n_samples=args.n_samples, seed=args.seed
    )
    clicks = exp_mod.click_tradeoff(
        by_experiment, n_samples=args.n_samples, seed=args.seed
    )
    payload = {
        "scheme": "sign-flip of treatment/control labels within each experiment",
        "share_mode": args.mode,
        "experiments": [
            {
                "experiment": r.experiment,
                "treatment": {
                    "p_left": r.treatment_p_left,
                    "p_right": r.treatment_p_right,
                    "entropy": r.treatment_entropy,
                },
                "control": {
                    "p_left": r.control_p_left,
                    "p_right": r.control_p_right,
                    "entropy": r.control_entropy,
                },
                "delta_entropy": r.delta_entropy,
            }
            for r in results
        ],
        "mean_delta_entropy": inference.statistic,
        "randomization_p": inference.p_value,
        "randomization_method": inference.method,
        "click_relative_difference": clicks.relative_difference,
        "click_p": clicks.p_value,
        **_provenance(args.seed, {"outcomes": args.outcomes}),
    }
    atomic_write_text(str(args.out) + ".json", json.dumps(payload, sort_keys=True, indent=2) + "\n")
    atomic_write_text(str(args.out) + ".csv", exp_mod.results_csv(results))
    logger.info(
        "mean delta entropy %.4f (p=%.4g); clicks %.1f%% (p=%.4g)",
        inference.statistic, inference.p_value,
        100 * clicks.relative_difference, clicks.p_value,
    )
    return 0


# ---------------------------------------------------------------------------
# Parser

def _add_workdir_path(args, names):
    """Resolve path-valued flags relative to --workdir."""
    for name in names:
        value = getattr(args, name, None)
        if value is not None:
            setattr(args, name, Path(args.workdir) / value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bridgecraft",
        description="Audience-diversity scoring, explanation, and ad-experiment analysis.",
    )
    parser.add_argument("--workdir", default=".", help="base directory for all paths")
    parser.add_argument(
        "--threads", type=int, default=os.cpu_count() or 1,
        help="internal parallelism (permutation draws)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build the labelled corpus from raw files")
    p.add_argument("--posts", required=True)
    p.add_argument("--events", required=True)
    p.add_argument("--users", required=True)
    p.add_argument("--domains", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(handler=cmd_ingest, paths=["posts", "events", "users", "domains", "out", "report"])

    p = sub.add_parser("train", help="train a diversity or alignment predictor")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True, choices=LINEAR_MODELS + NEURAL_MODELS)
    p.add_argument("--vocab", default="word-1gram", choices=sorted(VOCAB_FLAGS))
    p.add_argument("--target", default="diversity", choices=("diversity", "alignment"))
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=0.1, help="SVR tube half-width")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split-seed", type=int, default=None)
    p.add_argument("--no-scale", action="store_true", help="skip unit-variance scaling")
    p.add_argument("--embeddings", default=None, help="token embedding text table")
    p.add_argument("--attention-hidden", type=int, default=64)
    p.add_argument("--head-widths", default="", help="comma list, e.g. 256,128")
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--finetune-embeddings", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_train, paths=["corpus", "embeddings", "out"])

    p = sub.add_parser("eval", help="evaluate an artifact on a split")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", default="test", choices=("train", "validation", "test"))
    p.add_argument("--split-seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_eval, paths=["model", "corpus", "out"])

    p = sub.add_parser("attribute", help="integrated-gradients report over a split")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--lexicons", default=None)
    p.add_argument("--split", default="test", choices=("train", "validation", "test"))
    p.add_argument("--split-seed", type=int, default=None)
    p.add_argument("--steps", type=int, default=REPORT_STEPS)
    p.add_argument("--out", required=True, help="output prefix (.json and .csv)")
    p.set_defaults(handler=cmd_attribute, paths=["model", "corpus", "lexicons", "out"])

    p = sub.add_parser("stats", help="partisan word statistics CSV")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_stats, paths=["corpus", "out"])

    p = sub.add_parser("index", help="build the similar-tweet embedding index")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_index, paths=["model", "corpus", "out"])

    p = sub.add_parser("serve", help="run the HTTP scoring service")
    p.add_argument("--config", default=None)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(handler=cmd_serve, paths=["config"])

    p = sub.add_parser("experiment-plan", help="assign stratified experiment arms")
    p.add_argument("--users", required=True)
    p.add_argument("--domains", required=True)
    p.add_argument("--arm-size", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--experiment-id", default="experiment")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_experiment_plan, paths=["users", "domains", "out"])

    p = sub.add_parser("experiment-balance", help="covariate balance checks for a plan")
    p.add_argument("--users", required=True)
    p.add_argument("--domains", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--n-perm", type=int, default=exp_mod.DEFAULT_N_PERM)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_experiment_balance, paths=["users", "domains", "plan", "out"])

    p = sub.add_parser("experiment-analyze", help="entropy deltas and inference")
    p.add_argument("--outcomes", required=True)
    p.add_argument("--mode", default="counts", choices=("counts", "rates"))
    p.add_argument("--n-samples", type=int, default=exp_mod.RI_SAMPLES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output prefix (.json and .csv)")
    p.set_defaults(handler=cmd_experiment_analyze, paths=["outcomes", "out"])

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    _add_workdir_path(args, args.paths)
    try:
        return args.handler(args)
    except (CliError, corpus_mod.CorpusError, exp_mod.ExperimentError, ValueError, OSError) as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())

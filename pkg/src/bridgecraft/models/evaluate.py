"""Test-set evaluation with constant-predictor baselines.

The mean of the training targets minimizes MSE among constants and the
median minimizes MAE, so both are reported alongside the model on the
identical test items. Confidence intervals use the normal approximation
over per-item losses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Z95 = 1.959963984540054


@dataclass(frozen=True)
class MetricRow:
    name: str
    mae: float
    mae_ci: tuple[float, float]
    mse: float
    mse_ci: tuple[float, float]


@dataclass(frozen=True)
class EvalReport:
    model: MetricRow
    baseline_mean: MetricRow
    baseline_median: MetricRow
    train_mean: float
    train_median: float
    n_test: int

    def rows(self) -> list[MetricRow]:
        return [self.model, self.baseline_mean, self.baseline_median]


def _metric_row(name: str, y_true: np.ndarray, y_pred: np.ndarray) -> MetricRow:
    n = len(y_true)
    abs_err = np.abs(y_true - y_pred)
    sq_err = (y_true - y_pred) ** 2
    mae = float(abs_err.mean())
    mse = float(sq_err.mean())
    mae_half = Z95 * float(abs_err.std(ddof=0)) / np.sqrt(n)
    mse_half = Z95 * float(sq_err.std(ddof=0)) / np.sqrt(n)
    return MetricRow(
        name=name,
        mae=mae,
        mae_ci=(mae - mae_half, mae + mae_half),
        mse=mse,
        mse_ci=(mse - mse_half, mse + mse_half),
    )


def evaluate(y_true, y_pred, y_train) -> EvalReport:
    """Score predictions against the truth, with train-constant baselines."""
    y_true = np.asarray(y_true, dtype=np.float64).ravel()
    y_pred = np.asarray(y_pred, dtype=np.float64).ravel()
    y_train = np.asarray(y_train, dtype=np.float64).ravel()
    if len(y_true) == 0:
        raise ValueError("empty test set")
    if len(y_true) != len(y_pred):
        raise ValueError("prediction/truth length mismatch")
    if len(y_train) == 0:
        raise ValueError("empty training targets for the baselines")
    mu = float(y_train.mean())
    med = float(np.median(y_train))
    return EvalReport(
        model=_metric_row("model", y_true, y_pred),
        baseline_mean=_metric_row("baseline_mean", y_true, np.full_like(y_true, mu)),
        baseline_median=_metric_row("baseline_median", y_true, np.full_like(y_true, med)),
        train_mean=mu,
        train_median=med,
        n_test=len(y_true),
    )

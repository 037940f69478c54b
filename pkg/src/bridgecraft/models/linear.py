"""Linear predictors on sparse TF-IDF features.

Ridge (and OLS as its zero-penalty limit) solves the normal equations
with an unpenalized intercept. Lasso and Elastic Net run cyclic
coordinate descent with soft-thresholding on the objective

    1/(2n) ||y - Xw - b||^2 + lam * (l1_ratio*||w||_1 + (1-l1_ratio)/2*||w||^2)

while Ridge minimizes ||y - Xw - b||^2 + lam*||w||^2 (no 1/n factor),
matching the closed-form used in the solver oracles. SVR minimizes
epsilon-insensitive loss plus an L2 penalty by subgradient descent.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)

KINDS = ("ols", "ridge", "lasso", "elasticnet", "svr")

CD_TOL = 1e-6
CD_MAX_SWEEPS = 1000
SVR_STEPS = 2000


@dataclass
class LinearModel:
    kind: str
    weights: np.ndarray
    intercept: float
    lam: float
    l1_ratio: float = 0.0
    epsilon: float = 0.0
    objective_trace: list[float] = field(default_factory=list)
    n_sweeps: int = 0

    def predict(self, X) -> np.ndarray:
        return np.asarray(X @ self.weights).ravel() + self.intercept


def _as_matrix(X):
    if sp.issparse(X):
        X = X.tocsc()
        if not np.all(np.isfinite(X.data)):
            raise ValueError("non-finite values in X")
        return X
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite values in X")
    return X


def train_linear(
    kind: str,
    X,
    y,
    lam: float = 1.0,
    *,
    fit_intercept: bool = True,
    l1_ratio: float | None = None,
    epsilon: float = 0.1,
    tol: float = CD_TOL,
    max_sweeps: int = CD_MAX_SWEEPS,
) -> LinearModel:
    """Train one member of the linear family."""
    if kind not in KINDS:
        raise ValueError(f"unknown linear model kind {kind!r}")
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y row counts differ")
    if X.shape[0] < 2:
        raise ValueError("need at least two training rows")
    if not np.all(np.isfinite(y)):
        raise ValueError("non-finite values in y")
    if lam < 0:
        raise ValueError("lam must be non-negative")

    if kind in ("ols", "ridge"):
        effective_lam = 0.0 if kind == "ols" else lam
        w, b = _ridge_solve(X, y, effective_lam, fit_intercept)
        return LinearModel(kind=kind, weights=w, intercept=b, lam=effective_lam)
    if kind in ("lasso", "elasticnet"):
        ratio = 1.0 if kind == "lasso" else (0.5 if l1_ratio is None else l1_ratio)
        w, b, trace, sweeps = _coordinate_descent(
            X, y, lam, ratio, fit_intercept, tol, max_sweeps
        )
        return LinearModel(
            kind=kind,
            weights=w,
            intercept=b,
            lam=lam,
            l1_ratio=ratio,
            objective_trace=trace,
            n_sweeps=sweeps,
        )
    w, b, trace = _svr_subgradient(X, y, lam, epsilon, fit_intercept)
    return LinearModel(
        kind="svr",
        weights=w,
        intercept=b,
        lam=lam,
        epsilon=epsilon,
        objective_trace=trace,
    )


def _ridge_solve(X, y, lam: float, fit_intercept: bool) -> tuple[np.ndarray, float]:
    n, p = X.shape
    dense = X.toarray() if sp.issparse(X) else X
    if lam == 0.0:
        A = np.hstack([dense, np.ones((n, 1))]) if fit_intercept else dense
        sol, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
        if rank < A.shape[1]:
            logger.warning(
                "singular least-squares system (rank %d < %d); "
                "returning the minimum-norm solution",
                rank,
                A.shape[1],
            )
        if fit_intercept:
            return sol[:p], float(sol[p])
        return sol, 0.0

    gram = dense.T @ dense
    xty = dense.T @ y
    if fit_intercept:
        col_sum = dense.sum(axis=0)
        A = np.zeros((p + 1, p + 1))
        A[:p, :p] = gram + lam * np.eye(p)
        A[:p, p] = col_sum
        A[p, :p] = col_sum
        A[p, p] = n
        rhs = np.append(xty, y.sum())
        sol = np.linalg.solve(A, rhs)
        return sol[:p], float(sol[p])
    sol = np.linalg.solve(gram + lam * np.eye(p), xty)
    return sol, 0.0


def _columns(X):
    """Per-column (row indices or None, values) views for the CD loop."""
    if sp.issparse(X):
        cols = []
        for j in range(X.shape[1]):
            start, end = X.indptr[j], X.indptr[j + 1]
            cols.append((X.indices[start:end], X.data[start:end]))
        return cols
    return [(None, X[:, j]) for j in range(X.shape[1])]


def _soft_threshold(z: float, gamma: float) -> float:
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


def _cd_objective(r, w, n, lam, l1_ratio) -> float:
    return float(
        0.5 * (r @ r) / n
        + lam * l1_ratio * np.abs(w).sum()
        + 0.5 * lam * (1.0 - l1_ratio) * (w @ w)
    )


def _coordinate_descent(X, y, lam, l1_ratio, fit_intercept, tol, max_sweeps):
    n, p = X.shape
    cols = _columns(X)
    col_sq = np.array([float(vals @ vals) for _, vals in cols])
    w = np.zeros(p)
    b = 0.0
    r = y.copy()
    if fit_intercept:
        b = float(r.mean())
        r -= b
    l1_pen = n * lam * l1_ratio
    l2_pen = n * lam * (1.0 - l1_ratio)

    trace = [_cd_objective(r, w, n, lam, l1_ratio)]
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        max_delta = 0.0
        if fit_intercept:
            shift = float(r.mean())
            b += shift
            r -= shift
            max_delta = abs(shift)
        for j in range(p):
            if col_sq[j] == 0.0:
                continue
            rows, vals = cols[j]
            w_old = w[j]
            if rows is None:
                z = float(vals @ r) + col_sq[j] * w_old
            else:
                z = float(vals @ r[rows]) + col_sq[j] * w_old
            w_new = _soft_threshold(z, l1_pen) / (col_sq[j] + l2_pen)
            if w_new != w_old:
                delta = w_new - w_old
                if rows is None:
                    r -= delta * vals
                else:
                    r[rows] -= delta * vals
                w[j] = w_new
                max_delta = max(max_delta, abs(delta))
        trace.append(_cd_objective(r, w, n, lam, l1_ratio))
        if max_delta < tol:
            break
    return w, b, trace, sweeps


def _svr_objective(r, w, n, lam, epsilon) -> float:
    return float(np.maximum(np.abs(r) - epsilon, 0.0).sum() / n + lam * (w @ w))


def _svr_subgradient(X, y, lam, epsilon, fit_intercept, steps=SVR_STEPS, eta0=0.5):
    n, p = X.shape
    w = np.zeros(p)
    b = float(y.mean()) if fit_intercept else 0.0
    best = (np.inf, w.copy(), b)
    trace = []
    for t in range(steps):
        r = y - np.asarray(X @ w).ravel() - b
        obj = _svr_objective(r, w, n, lam, epsilon)
        trace.append(obj)
        if obj < best[0]:
            best = (obj, w.copy(), b)
        active = np.sign(r) * (np.abs(r) > epsilon)
        grad_w = -np.asarray(X.T @ active).ravel() / n + 2.0 * lam * w
        eta = eta0 / np.sqrt(t + 1.0)
        w = w - eta * grad_w
        if fit_intercept:
            b = b - eta * (-active.sum() / n)
    _, w, b = best
    return w, float(b), trace

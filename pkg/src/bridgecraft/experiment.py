"""Split advertising experiments: arm assignment, covariate balance,
and outcome analysis with randomization inference.

Assignment is uniform within (leaning x tier) strata so treatment and
control mirror each other's composition. Balance is checked two ways:
Wald p-values from a Newton-fitted logistic regression of assignment on
user covariates, and a permutation test comparing the fitted
log-likelihood against reassignments drawn by the same stratified
scheme. Outcomes compare the entropy of left/right engagement shares
between arms; significance comes from sign-flip randomization over
experiments, exhaustive when feasible.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from bridgecraft.corpus import (
    Leaning,
    UserProfile,
    audience_diversity,
    entropy_of_shares,
)

logger = logging.getLogger(__name__)

ARM_NAMES = ("treatment-left", "control-left", "treatment-right", "control-right")
COVARIATE_NAMES = ("posts", "likes", "followers", "friends", "tenure", "alignment_value")
LOG_TRANSFORMED = ("posts", "likes", "followers", "friends")

DEFAULT_N_PERM = 10_000
RI_SAMPLES = 100_000
EXHAUSTIVE_LIMIT = 20  # experiments; 2^20 sign patterns


class ExperimentError(Exception):
    """Invalid experimental design or undefined outcome quantity."""


# ---------------------------------------------------------------------------
# Audience assignment

@dataclass
class ExperimentPlan:
    experiment_id: str
    arms: dict[str, list[str]]
    seed: int
    stratification: dict[str, dict[str, int]]  # arm -> tier -> count

    def all_users(self) -> list[str]:
        return [uid for arm in ARM_NAMES for uid in self.arms[arm]]


def _tier_quotas(pool_by_tier: Mapping[str, list], arm_size: int, leaning: str) -> dict[str, int]:
    total = sum(len(v) for v in pool_by_tier.values())
    if total < 2 * arm_size:
        raise ExperimentError(
            f"{leaning} pool has {total} users, needs {2 * arm_size}"
        )
    tiers = sorted(pool_by_tier)
    quotas = {t: int(arm_size * len(pool_by_tier[t]) / total) for t in tiers}
    remainders = sorted(
        tiers,
        key=lambda t: (quotas[t] - arm_size * len(pool_by_tier[t]) / total, t),
    )
    shortfall = arm_size - sum(quotas.values())
    for t in remainders[:shortfall]:
        quotas[t] += 1
    for t in tiers:
        if 2 * quotas[t] > len(pool_by_tier[t]):
            raise ExperimentError(
                f"stratum ({leaning}, {t}) has {len(pool_by_tier[t])} users, "
                f"needs {2 * quotas[t]}"
            )
    return quotas


def assign_audience(
    left_users: Sequence[UserProfile],
    right_users: Sequence[UserProfile],
    arm_size: int,
    seed: int,
    experiment_id: str = "experiment",
) -> ExperimentPlan:
    """Randomly split each leaning pool into equal treatment/control arms,
    preserving tier proportions exactly (same per-tier quota both arms)."""
    rng = np.random.default_rng(seed)
    arms: dict[str, list[str]] = {name: [] for name in ARM_NAMES}
    stratification: dict[str, dict[str, int]] = {name: {} for name in ARM_NAMES}
    for leaning, pool in (("left", left_users), ("right", right_users)):
        by_tier: dict[str, list[str]] = {}
        for user in pool:
            by_tier.setdefault(user.tier.value, []).append(user.user_id)
        quotas = _tier_quotas(by_tier, arm_size, leaning)
        for tier in sorted(by_tier):
            ids = np.array(sorted(by_tier[tier]), dtype=object)
            rng.shuffle(ids)
            q = quotas[tier]
            arms[f"treatment-{leaning}"].extend(ids[:q])
            arms[f"control-{leaning}"].extend(ids[q : 2 * q])
            stratification[f"treatment-{leaning}"][tier] = q
            stratification[f"control-{leaning}"][tier] = q
    return ExperimentPlan(
        experiment_id=experiment_id, arms=arms, seed=seed, stratification=stratification
    )


def plan_csv(plan: ExperimentPlan) -> str:
    """Arm export in the tailored-audience upload shape."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["user_id", "arm"])
    for arm in ARM_NAMES:
        for uid in plan.arms[arm]:
            writer.writerow([uid, arm])
    return buf.getvalue()


def plan_from_csv(text: str) -> dict[str, str]:
    reader = csv.reader(io.StringIO(text))
    next(reader)
    return {row[0]: row[1] for row in reader if row}


# ---------------------------------------------------------------------------
# Covariate balance

def covariate_matrix(users: Sequence[UserProfile]) -> tuple[np.ndarray, list[str]]:
    """Design matrix in spec covariate order; skewed counts get log(1+x)."""
    rows = []
    for user in users:
        cov = user.covariates
        rows.append(
            [
                math.log1p(cov.posts),
                math.log1p(cov.likes),
                math.log1p(cov.followers),
                math.log1p(cov.friends),
                cov.tenure_days,
                cov.alignment_value,
            ]
        )
    return np.asarray(rows, dtype=np.float64), list(COVARIATE_NAMES)


def _log_likelihood(X: np.ndarray, y: np.ndarray, beta: np.ndarray) -> float:
    z = X @ beta
    # log(1 + exp(z)) computed stably
    return float(y @ z - np.logaddexp(0.0, z).sum())


def logistic_fit(
    X: np.ndarray, y: np.ndarray, tol: float = 1e-8, max_iter: int = 100
) -> tuple[np.ndarray, np.ndarray, float, bool]:
    """Newton maximum likelihood for logit P(y=1|x).

    Returns (beta, covariance, log-likelihood, converged). X should
    already carry an intercept column.
    """
    n, p = X.shape
    beta = np.zeros(p)
    converged = False
    for _ in range(max_iter):
        z = X @ beta
        mu = 1.0 / (1.0 + np.exp(-z))
        grad = X.T @ (y - mu)
        if np.linalg.norm(grad) < tol:
            converged = True
            break
        w = np.maximum(mu * (1.0 - mu), 1e-12)
        hessian = X.T @ (X * w[:, None])
        try:
            step = np.linalg.solve(hessian, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hessian, grad, rcond=None)[0]
        # halve the step until the likelihood stops decreasing
        ll_old = _log_likelihood(X, y, beta)
        scale = 1.0
        for _ in range(30):
            candidate = beta + scale * step
            if _log_likelihood(X, y, candidate) >= ll_old - 1e-12:
                break
            scale *= 0.5
        beta = beta + scale * step
    z = X @ beta
    mu = 1.0 / (1.0 + np.exp(-z))
    w = np.maximum(mu * (1.0 - mu), 1e-12)
    hessian = X.T @ (X * w[:, None])
    try:
        cov = np.linalg.inv(hessian)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(hessian)
    return beta, cov, _log_likelihood(X, y, beta), converged


def _normal_sf(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


@dataclass(frozen=True)
class CoefficientStats:
    name: str
    coefficient: float
    std_error: float
    p_value: float


@dataclass
class BalanceResult:
    coefficients: list[CoefficientStats]
    log_likelihood: float
    separation: bool
    dropped: list[str] = field(default_factory=list)


def balance_regression(
    users: Sequence[UserProfile], assignment: Sequence[int]
) -> BalanceResult:
    """Regress treatment assignment on user covariates; Wald p per coefficient."""
    X, names = covariate_matrix(users)
    y = np.asarray(assignment, dtype=np.float64)
    if X.shape[0] != len(y):
        raise ValueError("users and assignment lengths differ")

    keep, dropped = [], []
    for j, name in enumerate(names):
        if np.std(X[:, j]) < 1e-12:
            logger.warning("covariate %r has zero variance; dropped", name)
            dropped.append(name)
        else:
            keep.append(j)
    X = X[:, keep]
    names = [names[j] for j in keep]

    design = np.hstack([np.ones((X.shape[0], 1)), X])
    beta, cov, ll, converged = logistic_fit(design, y)
    z_lin = design @ beta
    # a (near-)zero log-likelihood means the fit classifies perfectly
    separation = bool(np.abs(z_lin).max() > 30.0) or ll > -1e-6 or not converged
    if separation:
        logger.warning("possible separation in the balance regression")
    stats = []
    for j, name in enumerate(names, start=1):
        se = float(np.sqrt(max(cov[j, j], 0.0)))
        z = beta[j] / se if se > 0 else math.inf
        stats.append(
            CoefficientStats(
                name=name,
                coefficient=float(beta[j]),
                std_error=se,
                p_value=2.0 * _normal_sf(abs(z)),
            )
        )
    return BalanceResult(
        coefficients=stats, log_likelihood=ll, separation=separation, dropped=dropped
    )


def _strata_labels(users: Sequence[UserProfile]) -> list[tuple[str, str]]:
    return [(user.leaning.value, user.tier.value) for user in users]


def balance_permutation(
    users: Sequence[UserProfile],
    assignment: Sequence[int],
    n_perm: int = DEFAULT_N_PERM,
    seed: int = 0,
    threads: int = 1,
) -> float:
    """Permutation p-value for the balance regression's log-likelihood.

    Reassignments are drawn by the observed stratified scheme: within
    every (leaning, tier) stratum the same number of treatment labels is
    re-dealt uniformly. p = fraction of reassignments whose fitted
    log-likelihood >= the observed fit. Each draw derives its own RNG
    substream from (seed, draw index), so the result is identical no
    matter how the draws are spread over threads.
    """
    if n_perm < 1:
        raise ValueError("n_perm must be positive")
    X, names = covariate_matrix(users)
    keep = [j for j in range(X.shape[1]) if np.std(X[:, j]) > 1e-12]
    X = X[:, keep]
    design = np.hstack([np.ones((X.shape[0], 1)), X])
    y = np.asarray(assignment, dtype=np.float64)

    _, _, observed_ll, _ = logistic_fit(design, y)

    strata: list[np.ndarray] = []
    labels = _strata_labels(users)
    for key in sorted(set(labels)):
        strata.append(np.array([i for i, lab in enumerate(labels) if lab == key]))
    treated_counts = [int(y[idx].sum()) for idx in strata]

    def draw_hit(i: int) -> bool:
        rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
        y_perm = np.zeros_like(y)
        for idx, treated in zip(strata, treated_counts):
            chosen = rng.permutation(len(idx))[:treated]
            y_perm[idx[chosen]] = 1.0
        _, _, ll, _ = logistic_fit(design, y_perm)
        return bool(ll >= observed_ll - 1e-12)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            hits = sum(pool.map(draw_hit, range(n_perm), chunksize=64))
    else:
        hits = sum(draw_hit(i) for i in range(n_perm))
    return hits / n_perm


# ---------------------------------------------------------------------------
# Outcome analysis

@dataclass(frozen=True)
class ArmOutcome:
    experiment: str
    arm: str
    impressions: int
    engagements: int
    clicks: int

    def __post_init__(self) -> None:
        if min(self.impressions, self.engagements, self.clicks) < 0:
            raise ValueError("outcome counts must be non-negative")
        if self.arm not in ARM_NAMES:
            raise ValueError(f"unknown arm {self.arm!r}")


@dataclass
class ExperimentResult:
    experiment: str
    treatment_p_left: float
    treatment_p_right: float
    treatment_entropy: float
    control_p_left: float
    control_p_right: float
    control_entropy: float
    delta_entropy: float
    share_mode: str  # "counts" | "rates"


def _arm_map(outcomes: Sequence[ArmOutcome]) -> dict[str, ArmOutcome]:
    arms = {o.arm: o for o in outcomes}
    if set(arms) != set(ARM_NAMES):
        raise ExperimentError(
            f"need exactly the four arms {ARM_NAMES}, got {sorted(arms)}"
        )
    return arms


def analyze_outcomes(
    outcomes: Sequence[ArmOutcome], mode: str = "counts"
) -> ExperimentResult:
    """Per-experiment entropy comparison between treatment and control.

    ``counts`` mode passes raw engagement counts through the smoothed
    diversity estimator; ``rates`` mode first normalizes engagements by
    impressions (delivery is imbalanced) and uses unsmoothed entropy of
    the resulting shares.
    """
    if mode not in ("counts", "rates"):
        raise ValueError(f"unknown share mode {mode!r}")
    arms = _arm_map(outcomes)
    sides = {}
    for group in ("treatment", "control"):
        left = arms[f"{group}-left"]
        right = arms[f"{group}-right"]
        if left.engagements + right.engagements == 0:
            raise ExperimentError(f"{group} tweet saw zero total engagements")
        if mode == "counts":
            p_left = left.engagements / (left.engagements + right.engagements)
            entropy = audience_diversity(left.engagements, right.engagements)
        else:
            if left.impressions == 0 or right.impressions == 0:
                raise ExperimentError(f"{group} arm has zero impressions")
            rate_left = left.engagements / left.impressions
            rate_right = right.engagements / right.impressions
            if rate_left + rate_right == 0:
                raise ExperimentError(f"{group} tweet saw zero engagement rates")
            p_left = rate_left / (rate_left + rate_right)
            entropy = entropy_of_shares(p_left)
        sides[group] = (p_left, entropy)
    (t_p, t_h), (c_p, c_h) = sides["treatment"], sides["control"]
    experiment = outcomes[0].experiment
    return ExperimentResult(
        experiment=experiment,
        treatment_p_left=t_p,
        treatment_p_right=1.0 - t_p,
        treatment_entropy=t_h,
        control_p_left=c_p,
        control_p_right=1.0 - c_p,
        control_entropy=c_h,
        delta_entropy=t_h - c_h,
        share_mode=mode,
    )


def entropy_delta_from_shares(treatment_p_left: float, control_p_left: float) -> float:
    """Unsmoothed entropy difference when shares are given directly."""
    return entropy_of_shares(treatment_p_left) - entropy_of_shares(control_p_left)


# ---------------------------------------------------------------------------
# Randomization inference

@dataclass(frozen=True)
class InferenceResult:
    statistic: float
    p_value: float
    method: str  # "exhaustive" | "sampled"
    n_draws: int


def _sign_flip_pvalue(
    deltas: np.ndarray, n_samples: int, seed: int
) -> tuple[float, str, int]:
    """Two-sided sign-flip p for the mean of per-experiment deltas."""
    n = len(deltas)
    observed = abs(deltas.mean())
    tol = 1e-12 * max(1.0, observed)
    if n <= EXHAUSTIVE_LIMIT:
        total = 1 << n
        patterns = np.arange(total, dtype=np.uint32)
        sums = np.zeros(total)
        for j in range(n):  # bit j picks the sign of experiment j
            bit = (patterns >> j) & 1
            sums += deltas[j] * (1.0 - 2.0 * bit)
        means = np.abs(sums) / n
        hits = int((means >= observed - tol).sum())
        return hits / total, "exhaustive", total
    rng = np.random.default_rng(seed)
    signs = rng.choice((1.0, -1.0), size=(n_samples, n))
    means = np.abs(signs @ deltas) / n
    hits = int((means >= observed - tol).sum())
    return hits / n_samples, "sampled", n_samples


def randomization_inference(
    deltas: Sequence[float], n_samples: int = RI_SAMPLES, seed: int = 0
) -> InferenceResult:
    """Mean entropy delta with its sign-flip randomization p-value.

    Treatment/control labels are exchangeable within each experiment, so
    flipping an experiment's label negates its delta. Enumeration is
    exhaustive up to 2^20 experiments, sampled beyond.
    """
    deltas = np.asarray(deltas, dtype=np.float64)
    if len(deltas) == 0:
        raise ValueError("need at least one experiment")
    p, method, n_draws = _sign_flip_pvalue(deltas, n_samples, seed)
    return InferenceResult(
        statistic=float(deltas.mean()), p_value=p, method=method, n_draws=n_draws
    )


@dataclass(frozen=True)
class ClickResult:
    relative_difference: float
    statistic: float
    p_value: float
    method: str
    n_draws: int


def click_tradeoff(
    outcomes_by_experiment: Mapping[str, Sequence[ArmOutcome]],
    n_samples: int = RI_SAMPLES,
    seed: int = 0,
) -> ClickResult:
    """Relative click cost of treatment with a standardized permutation p.

    Each experiment contributes its treatment-minus-control click
    difference, standardized by the pooled (across experiments) standard
    deviation of the observed differences; labels are then sign-flipped.
    The relative difference compares total treatment to total control
    clicks.
    """
    diffs, t_total, c_total = [], 0, 0
    for experiment in sorted(outcomes_by_experiment):
        arms = _arm_map(outcomes_by_experiment[experiment])
        t = arms["treatment-left"].clicks + arms["treatment-right"].clicks
        c = arms["control-left"].clicks + arms["control-right"].clicks
        diffs.append(float(t - c))
        t_total += t
        c_total += c
    if t_total + c_total == 0:
        raise ExperimentError("no clicks recorded in any experiment")
    if c_total == 0:
        raise ExperimentError("control arms saw zero clicks; relative difference undefined")
    diffs = np.asarray(diffs)
    pooled_sd = float(diffs.std(ddof=0))
    standardized = diffs / pooled_sd if pooled_sd > 0 else np.zeros_like(diffs)
    p, method, n_draws = _sign_flip_pvalue(standardized, n_samples, seed)
    return ClickResult(
        relative_difference=(t_total - c_total) / c_total,
        statistic=float(standardized.mean()),
        p_value=p,
        method=method,
        n_draws=n_draws,
    )


# ---------------------------------------------------------------------------
# Outcome file interface

def read_outcomes_csv(text: str) -> dict[str, list[ArmOutcome]]:
    """Parse ``experiment,arm,impressions,engagements,clicks`` rows."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    expected = ["experiment", "arm", "impressions", "engagements", "clicks"]
    if header is None or [h.strip() for h in header] != expected:
        raise ExperimentError(f"expected header {','.join(expected)}, got {header!r}")
    by_experiment: dict[str, list[ArmOutcome]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 5:
            raise ExperimentError(f"line {lineno}: expected 5 fields")
        try:
            outcome = ArmOutcome(
                experiment=row[0],
                arm=row[1],
                impressions=int(row[2]),
                engagements=int(row[3]),
                clicks=int(row[4]),
            )
        except ValueError as exc:
            raise ExperimentError(f"line {lineno}: {exc}") from None
        by_experiment.setdefault(row[0], []).append(outcome)
    if not by_experiment:
        raise ExperimentError("no outcome rows found")
    return by_experiment


def results_csv(results: Sequence[ExperimentResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "experiment", "treatment_p_left", "treatment_p_right",
            "treatment_entropy", "control_p_left", "control_p_right",
            "control_entropy", "delta_entropy",
        ]
    )
    for r in results:
        writer.writerow(
            [
                r.experiment,
                f"{r.treatment_p_left:.6f}", f"{r.treatment_p_right:.6f}",
                f"{r.treatment_entropy:.6f}", f"{r.control_p_left:.6f}",
                f"{r.control_p_right:.6f}", f"{r.control_entropy:.6f}",
                f"{r.delta_entropy:.6f}",
            ]
        )
    return buf.getvalue()

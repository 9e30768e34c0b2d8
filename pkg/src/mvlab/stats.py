"""Sensitivity metrics, importance-weighted mean estimation, and bootstrap CIs.

The default sensitivity score is the standardized k-sample Anderson-Darling
statistic (tie-adjusted, midrank variant), which compares the outcome
distributions of all options of a decision simultaneously. Alternatives are
a one-way ANOVA F statistic, the maximum pairwise two-sample
Kolmogorov-Smirnov D, and a linear-model coefficient score.

The mean outcome is estimated from a sampling prefix by the likelihood-ratio
weighted mean with target density f = 1/n and the plan's recorded density g:

    y_bar = (1/|T|) * sum_i  y_i * (1/n) / g_i

which reduces exactly to the arithmetic mean under uniform sampling.
Confidence intervals come from the bias-corrected and accelerated (BCa)
bootstrap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.stats import norm, rankdata

from .model import DecisionSpace, EncodedDesign, Universe, encode_one_hot

SENSITIVITY_METHODS = ("ad", "f", "ks", "lr")

#: Minimum per-option sample size for a defined Anderson-Darling score.
MIN_PER_OPTION = 3

#: Bootstrap resample counts: live snapshots are recomputed frequently and
#: must stay cheap; offline reports can afford more.
BOOTSTRAP_LIVE = 500
BOOTSTRAP_OFFLINE = 2000


class DegenerateSampleError(ValueError):
    """Raised when a statistic is undefined on the given sample."""


class UndefinedCorrelationError(ValueError):
    """Raised when a correlation is undefined (zero variance input)."""


@dataclass(frozen=True)
class ConfidenceInterval:
    lo: float
    hi: float
    level: float = 0.95
    fallback: bool = False  # True when BCa degenerated to a percentile interval

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError("interval lo must not exceed hi")

    def as_tuple(self) -> tuple[float, float]:
        return (self.lo, self.hi)


@dataclass(frozen=True)
class OutcomeSample:
    """One completed universe outcome with its plan density."""

    universe_id: int
    y: float
    g: float

    def __post_init__(self) -> None:
        if not (0.0 < self.g <= 1.0):
            raise ValueError("g must lie in (0, 1]")
        if not math.isfinite(self.y):
            raise ValueError("outcome must be finite")


@dataclass(frozen=True)
class SensitivityScore:
    decision: str
    method: str
    score: float
    defined: bool
    ci: ConfidenceInterval | None = None


@dataclass(frozen=True)
class LinearModelFit:
    beta: np.ndarray
    residual_sigma2: float
    rank: int = 0


def ad_k_sample(groups: Sequence[Sequence[float]]) -> float:
    """Standardized k-sample Anderson-Darling statistic, midrank variant.

    Returns T = (A2_akN - (k-1)) / sigma_N where A2_akN is the tie-adjusted
    (midrank) k-sample statistic and sigma_N^2 the Scholz-Stephens variance
    under the common-distribution hypothesis. Rank-based, hence invariant
    under strictly increasing transforms of the outcomes.
    """
    arrays = [np.asarray(g, dtype=float) for g in groups]
    k = len(arrays)
    if k < 2:
        raise ValueError("need at least two groups")
    if any(a.size == 0 for a in arrays):
        raise ValueError("groups must be non-empty")
    ns = np.array([a.size for a in arrays], dtype=float)
    pooled = np.sort(np.concatenate(arrays))
    N = pooled.size
    if N < 4:
        raise DegenerateSampleError("pooled sample too small for the variance formula")
    zstar, lj = np.unique(pooled, return_counts=True)
    if zstar.size == 1:
        raise DegenerateSampleError("degenerate pooled sample: all values identical")
    lj = lj.astype(float)
    bj = np.cumsum(lj) - lj / 2.0

    a2 = 0.0
    for arr, ni in zip(arrays, ns):
        s = np.sort(arr)
        right = np.searchsorted(s, zstar, side="right").astype(float)
        fij = right - np.searchsorted(s, zstar, side="left")
        maij = right - fij / 2.0
        inner = lj / N * (N * maij - bj * ni) ** 2 / (bj * (N - bj) - N * lj / 4.0)
        a2 += float(inner.sum()) / ni
    a2 *= (N - 1.0) / N

    cap_h = float((1.0 / ns).sum())
    harmonic = np.cumsum(1.0 / np.arange(1, N))  # partial sums H_1..H_{N-1}
    h = float(harmonic[-1])
    i = np.arange(1, N - 1)
    g_sum = float(((h - harmonic[: N - 2]) / (N - i)).sum())
    a = (4.0 * g_sum - 6.0) * (k - 1) + (10.0 - 6.0 * g_sum) * cap_h
    b = (
        (2.0 * g_sum - 4.0) * k**2
        + 8.0 * h * k
        + (2.0 * g_sum - 14.0 * h - 4.0) * cap_h
        - 8.0 * h
        + 4.0 * g_sum
        - 6.0
    )
    c = (
        (6.0 * h + 2.0 * g_sum - 2.0) * k**2
        + (4.0 * h - 4.0 * g_sum + 6.0) * k
        + (2.0 * h - 6.0) * cap_h
        + 4.0 * h
    )
    d = (2.0 * h + 6.0) * k**2 - 4.0 * h * k
    sigma2 = (a * N**3 + b * N**2 + c * N + d) / ((N - 1.0) * (N - 2.0) * (N - 3.0))
    if sigma2 <= 0.0:
        raise DegenerateSampleError("non-positive variance estimate")
    return float((a2 - (k - 1)) / math.sqrt(sigma2))


def f_test(groups: Sequence[Sequence[float]]) -> float:
    """One-way ANOVA F statistic (between-group MS over within-group MS).

    Zero within-group variance with distinct group means returns +inf as a
    sentinel; identical values everywhere score 0.
    """
    arrays = [np.asarray(g, dtype=float) for g in groups]
    k = len(arrays)
    if k < 2:
        raise ValueError("need at least two groups")
    if any(a.size == 0 for a in arrays):
        raise ValueError("groups must be non-empty")
    total = np.concatenate(arrays)
    n = total.size
    if n <= k:
        raise ValueError("need more observations than groups")
    grand = total.mean()
    ss_between = sum(a.size * (a.mean() - grand) ** 2 for a in arrays)
    ss_within = sum(((a - a.mean()) ** 2).sum() for a in arrays)
    ms_between = ss_between / (k - 1)
    ms_within = ss_within / (n - k)
    if ms_within == 0.0:
        return math.inf if ms_between > 0.0 else 0.0
    return float(ms_between / ms_within)


def _ks_two_sample(a: np.ndarray, b: np.ndarray) -> float:
    grid = np.sort(np.concatenate([a, b]))
    cdf_a = np.searchsorted(np.sort(a), grid, side="right") / a.size
    cdf_b = np.searchsorted(np.sort(b), grid, side="right") / b.size
    return float(np.abs(cdf_a - cdf_b).max())


def ks_sensitivity(groups: Sequence[Sequence[float]]) -> float:
    """Maximum two-sample Kolmogorov-Smirnov D over all option pairs."""
    arrays = [np.asarray(g, dtype=float) for g in groups]
    if len(arrays) < 2:
        raise ValueError("need at least two groups")
    if any(a.size == 0 for a in arrays):
        raise ValueError("groups must be non-empty")
    best = 0.0
    for i in range(len(arrays)):
        for j in range(i + 1, len(arrays)):
            best = max(best, _ks_two_sample(arrays[i], arrays[j]))
    return best


def fit_linear(X: np.ndarray, y: Sequence[float]) -> LinearModelFit:
    """Least-squares fit via a rank-revealing factorization.

    Rank deficiency (inherent in full one-hot encodings) yields the
    minimum-norm solution.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] != y.shape[0]:
        raise ValueError("rows of X must align with y")
    beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    dof = max(X.shape[0] - rank, 1)
    return LinearModelFit(beta=beta, residual_sigma2=float(resid @ resid) / dof, rank=int(rank))


def lr_sensitivity(
    fit: LinearModelFit,
    column_map: Mapping[tuple[str, str], int],
    decision: str,
) -> float:
    """Largest within-decision-centered absolute coefficient.

    Centering the decision's option coefficients removes the shared-level
    ambiguity of the full (no reference level) one-hot encoding.
    """
    cols = [c for (d, _), c in column_map.items() if d == decision]
    if not cols:
        raise KeyError(f"unknown decision {decision!r}")
    b = fit.beta[sorted(cols)]
    return float(np.abs(b - b.mean()).max())


def weighted_mean(
    samples: Sequence[OutcomeSample],
    n_total: int,
    self_normalized: bool = False,
) -> float:
    """Likelihood-ratio weighted mean over a sampling prefix.

    Summation runs in ascending universe id order; with a uniform plan
    (g = 1/n) every weight is exactly 1 and the estimator equals the
    arithmetic mean. The default divides by the sample count;
    ``self_normalized=True`` divides by the summed weights instead, which
    makes the estimate invariant to a common rescaling of g.
    """
    if not samples:
        raise ValueError("need at least one sample")
    if n_total < 1:
        raise ValueError("n_total must be positive")
    ordered = sorted(samples, key=lambda s: s.universe_id)
    y = np.array([s.y for s in ordered])
    g = np.array([s.g for s in ordered])
    if np.any(g <= 0.0):
        raise ValueError("g must be positive")
    w = (1.0 / n_total) / g
    if self_normalized:
        return float(np.sum(y * w) / np.sum(w))
    return float(np.sum(y * w) / len(ordered))


def arithmetic_mean(samples: Sequence[OutcomeSample]) -> float:
    """Unweighted mean with the same summation order as ``weighted_mean``."""
    if not samples:
        raise ValueError("need at least one sample")
    ordered = sorted(samples, key=lambda s: s.universe_id)
    y = np.array([s.y for s in ordered])
    return float(np.sum(y) / len(ordered))


def bootstrap_ci_bca(
    data: Sequence[float] | np.ndarray,
    statistic: Callable[[np.ndarray], float],
    n_resamples: int = BOOTSTRAP_LIVE,
    seed: int = 0,
    level: float = 0.95,
) -> ConfidenceInterval:
    """Bias-corrected and accelerated bootstrap interval.

    z0 comes from the fraction of bootstrap statistics below the point
    estimate, the acceleration from jackknife skewness. When every resample
    falls on one side of the point estimate z0 is infinite and the interval
    falls back to the plain percentile interval (flagged). Resamples on which
    the statistic is undefined are dropped; more than half dropped is an
    error. Deterministic given the seed.
    """
    data = np.asarray(data)
    n = data.shape[0]
    if n < 2:
        raise ValueError("need at least two observations")
    if n_resamples < 100:
        raise ValueError("need at least 100 resamples")
    rng = np.random.Generator(np.random.PCG64(seed))
    theta_hat = float(statistic(data))

    boot = np.empty(n_resamples)
    kept = 0
    for _ in range(n_resamples):
        idx = rng.integers(0, n, size=n)
        try:
            v = float(statistic(data[idx]))
        except (DegenerateSampleError, ValueError, ZeroDivisionError):
            continue
        if math.isnan(v):
            continue
        boot[kept] = v
        kept += 1
    if kept <= n_resamples / 2:
        raise DegenerateSampleError("statistic undefined on more than half the resamples")
    boot = np.sort(boot[:kept])

    alpha = (1.0 - level) / 2.0
    frac_below = float(np.mean(boot < theta_hat))
    if frac_below <= 0.0 or frac_below >= 1.0:
        lo, hi = np.quantile(boot, [alpha, 1.0 - alpha])
        return ConfidenceInterval(float(lo), float(hi), level, fallback=True)
    z0 = norm.ppf(frac_below)

    jack = np.empty(n)
    mask = np.ones(n, dtype=bool)
    for i in range(n):
        mask[i] = False
        try:
            jack[i] = float(statistic(data[mask]))
        except (DegenerateSampleError, ValueError, ZeroDivisionError):
            jack[i] = theta_hat
        mask[i] = True
    diff = jack.mean() - jack
    denom = 6.0 * float(np.sum(diff**2)) ** 1.5
    accel = float(np.sum(diff**3)) / denom if denom > 0.0 else 0.0

    z_lo, z_hi = norm.ppf(alpha), norm.ppf(1.0 - alpha)
    adj = [
        norm.cdf(z0 + (z0 + z) / (1.0 - accel * (z0 + z))) for z in (z_lo, z_hi)
    ]
    lo, hi = np.quantile(boot, adj)
    return ConfidenceInterval(float(min(lo, hi)), float(max(lo, hi)), level)


def pearson(a: Sequence[float], b: Sequence[float]) -> float:
    """Product-moment correlation; zero variance in either input is an error."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.size < 2:
        raise ValueError("need two equal-length vectors of size >= 2")
    da, db = a - a.mean(), b - b.mean()
    va, vb = float(da @ da), float(db @ db)
    if va == 0.0 or vb == 0.0:
        raise UndefinedCorrelationError("zero variance input")
    return float((da @ db) / math.sqrt(va * vb))


def spearman(a: Sequence[float], b: Sequence[float]) -> float:
    """Rank correlation using midranks for ties."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.size < 2:
        raise ValueError("need two equal-length vectors of size >= 2")
    return pearson(rankdata(a, method="average"), rankdata(b, method="average"))


def group_outcomes_by_option(
    space: DecisionSpace,
    universes: Sequence[Universe],
    samples: Sequence[OutcomeSample],
    decision: str,
) -> dict[str, np.ndarray]:
    """Outcome values of the samples, grouped by the decision's options."""
    by_id = {u.id: u for u in universes}
    groups: dict[str, list[float]] = {o: [] for o in space.decision(decision).options}
    for s in samples:
        groups[by_id[s.universe_id].assignment[decision]].append(s.y)
    return {o: np.asarray(v) for o, v in groups.items()}


def _score_one(method: str, groups: list[np.ndarray], design_score: float | None) -> float:
    if method == "ad":
        return ad_k_sample(groups)
    if method == "f":
        return f_test(groups)
    if method == "ks":
        return ks_sensitivity(groups)
    if method == "lr":
        assert design_score is not None
        return design_score
    raise ValueError(f"unknown method {method!r}")


def sensitivity_report(
    space: DecisionSpace,
    universes: Sequence[Universe],
    samples: Sequence[OutcomeSample],
    method: str = "ad",
    min_per_option: int = MIN_PER_OPTION,
    with_ci: bool = False,
    n_resamples: int = BOOTSTRAP_LIVE,
    seed: int = 0,
) -> list[SensitivityScore]:
    """Per-decision sensitivity scores over the completed samples.

    For the AD method, a decision's score is undefined until every option
    holds at least ``min_per_option`` samples; other methods require every
    option to be represented. Scores that raise (degenerate groups) are
    reported as undefined rather than propagating. Confidence intervals,
    when requested, bootstrap the completed universes (resample with
    replacement, recompute the score).
    """
    if method not in SENSITIVITY_METHODS:
        raise ValueError(f"unknown method {method!r}")
    sample_list = list(samples)

    lr_scores: dict[str, float] = {}
    if method == "lr" and sample_list:
        lr_scores = _lr_scores_for(space, universes, sample_list)

    out: list[SensitivityScore] = []
    for d in space.decisions:
        groups_map = group_outcomes_by_option(space, universes, sample_list, d.name)
        groups = [groups_map[o] for o in d.options]
        gate = min_per_option if method == "ad" else 1
        if not sample_list or min(len(g) for g in groups) < gate:
            out.append(SensitivityScore(d.name, method, math.nan, defined=False))
            continue
        try:
            score = _score_one(method, groups, lr_scores.get(d.name))
        except (DegenerateSampleError, ValueError):
            out.append(SensitivityScore(d.name, method, math.nan, defined=False))
            continue
        ci = None
        if with_ci and math.isfinite(score):
            ci = _bootstrap_score_ci(
                space, universes, sample_list, d.name, method, gate,
                n_resamples=n_resamples, seed=seed,
            )
        out.append(SensitivityScore(d.name, method, score, defined=True, ci=ci))
    return out


def _lr_scores_for(
    space: DecisionSpace,
    universes: Sequence[Universe],
    samples: Sequence[OutcomeSample],
) -> dict[str, float]:
    by_id = {u.id: u for u in universes}
    sampled = [by_id[s.universe_id] for s in samples]
    design = encode_one_hot(space, sampled)
    fit = fit_linear(design.matrix, [s.y for s in samples])
    return {d.name: lr_sensitivity(fit, design.column_map, d.name) for d in space.decisions}


def _bootstrap_score_ci(
    space: DecisionSpace,
    universes: Sequence[Universe],
    samples: list[OutcomeSample],
    decision: str,
    method: str,
    gate: int,
    n_resamples: int,
    seed: int,
) -> ConfidenceInterval | None:
    opts = space.decision(decision).options
    by_id = {u.id: u for u in universes}
    option_of = np.array([opts.index(by_id[s.universe_id].assignment[decision]) for s in samples])
    ys = np.array([s.y for s in samples])
    idx_all = np.arange(len(samples))

    def score_of_indices(idx: np.ndarray) -> float:
        groups = [ys[idx][option_of[idx] == k] for k in range(len(opts))]
        if min(len(g) for g in groups) < gate:
            raise DegenerateSampleError("resample failed the per-option gate")
        if method == "lr":
            sub = [samples[i] for i in idx]
            return _lr_scores_for(space, universes, sub)[decision]
        return _score_one(method, groups, None)

    try:
        return bootstrap_ci_bca(idx_all, score_of_indices, n_resamples=n_resamples, seed=seed)
    except (DegenerateSampleError, ValueError):
        return None


def report_to_csv_rows(scores: Sequence[SensitivityScore]) -> list[list[str]]:
    """CSV export: decision, method, score, ci_lo, ci_hi, defined."""
    rows = [["decision", "method", "score", "ci_lo", "ci_hi", "defined"]]
    for s in scores:
        rows.append([
            s.decision,
            s.method,
            repr(s.score) if s.defined else "",
            repr(s.ci.lo) if s.ci else "",
            repr(s.ci.hi) if s.ci else "",
            str(s.defined).lower(),
        ])
    return rows

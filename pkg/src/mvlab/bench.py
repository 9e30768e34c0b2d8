"""Desk-scale reproductions of the sampling-efficiency and bias experiments.

Three experiments, each repeated over independent seeds:

* termination benchmark: draw universes in plan order, recompute per-decision
  sensitivity after every draw, and record the fraction of the multiverse
  drawn when the estimates are trustworthy (Pearson vs. full-data scores
  above threshold, exact rank agreement among the truly sensitive decisions,
  and at least three samples behind every option).
* correlation trajectory: the same correlations as a function of sample
  size, averaged over repeats, with undefined values imputed as 0.
* bias MSE: mean squared error of the running mean-outcome estimate
  (importance-weighted or raw) against the true mean, averaged over sample
  sizes past a burn-in of sum(k_i) draws.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import DecisionSpace, Universe
from .sampling import SamplePlan, SamplerKind, make_plan
from .stats import (
    MIN_PER_OPTION,
    UndefinedCorrelationError,
    ad_k_sample,
    DegenerateSampleError,
    pearson,
    spearman,
)
from .synth import SynthMultiverse


@dataclass(frozen=True)
class BenchConfig:
    repeats: int = 50
    pearson_threshold: float = 0.95
    spearman_target: float = 1.0
    min_per_option: int = MIN_PER_OPTION
    stride: int = 1  # recompute scores every `stride` draws (1 = every draw)
    sketch_pairwise: bool = False  # interaction columns in the sketching design


@dataclass(frozen=True)
class BenchResult:
    kind: SamplerKind
    fractions: np.ndarray = field(repr=False)

    @property
    def mean(self) -> float:
        return float(np.mean(self.fractions))

    @property
    def median(self) -> float:
        return float(np.median(self.fractions))

    @property
    def iqr(self) -> tuple[float, float]:
        q1, q3 = np.percentile(self.fractions, [25, 75])
        return (float(q1), float(q3))

    def summary(self) -> dict:
        q1, q3 = self.iqr
        return {
            "sampler": self.kind.value,
            "repeats": int(self.fractions.size),
            "mean": self.mean,
            "median": self.median,
            "q1": q1,
            "q3": q3,
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


@dataclass(frozen=True)
class TrajectoryResult:
    kind: SamplerKind
    pearson_mean: np.ndarray = field(repr=False)
    spearman_mean: np.ndarray | None = field(repr=False, default=None)

    def csv_rows(self) -> list[list[str]]:
        rows = [["t", "pearson_mean", "spearman_mean"]]
        for i, p in enumerate(self.pearson_mean):
            s = "" if self.spearman_mean is None else repr(float(self.spearman_mean[i]))
            rows.append([str(i + 1), repr(float(p)), s])
        return rows


@dataclass(frozen=True)
class MseResult:
    kind: SamplerKind
    corrected: bool
    per_repeat: np.ndarray = field(repr=False)
    burn_in: int = 0

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_repeat))


def repeat_seed(seed: int, repeat: int) -> int:
    """Independent substream per repeat, derived from (seed, repeat index)."""
    return int(np.random.SeedSequence([seed, repeat]).generate_state(1)[0])


class _GroupTracker:
    """Incrementally grouped outcomes by (decision, option) for one walk."""

    def __init__(self, mv: SynthMultiverse) -> None:
        space = mv.space
        self.decisions = space.decisions
        self.option_index = [
            {o: k for k, o in enumerate(d.options)} for d in self.decisions
        ]
        self.values: list[list[list[float]]] = [
            [[] for _ in d.options] for d in self.decisions
        ]
        self.min_count = [0 for _ in self.decisions]
        self._assign = [
            [self.option_index[j][u.assignment[d.name]] for j, d in enumerate(self.decisions)]
            for u in mv.universes
        ]
        self._y = mv.outcomes

    def add(self, universe_id: int) -> None:
        y = float(self._y[universe_id])
        for j, opt in enumerate(self._assign[universe_id]):
            self.values[j][opt].append(y)
        for j in range(len(self.decisions)):
            self.min_count[j] = min(len(v) for v in self.values[j])

    def gate_met(self, min_per_option: int) -> bool:
        return all(c >= min_per_option for c in self.min_count)

    def scores(self) -> np.ndarray:
        out = np.empty(len(self.decisions))
        for j in range(len(self.decisions)):
            out[j] = ad_k_sample(self.values[j])
        return out


def full_data_scores(mv: SynthMultiverse) -> np.ndarray:
    """AD sensitivity of every decision on the complete multiverse."""
    tracker = _GroupTracker(mv)
    for u in mv.universes:
        tracker.add(u.id)
    return tracker.scores()


def _conditions_met(
    sample_scores: np.ndarray,
    full_scores: np.ndarray,
    sensitive_idx: np.ndarray,
    config: BenchConfig,
) -> bool:
    try:
        p = pearson(sample_scores, full_scores)
    except UndefinedCorrelationError:
        return False
    if not p > config.pearson_threshold:
        return False
    if sensitive_idx.size >= 2:
        try:
            s = spearman(sample_scores[sensitive_idx], full_scores[sensitive_idx])
        except UndefinedCorrelationError:
            return False
        if abs(s - config.spearman_target) > 1e-12:
            return False
    return True


def _sensitive_indices(mv: SynthMultiverse) -> np.ndarray:
    names = mv.space.decision_names
    return np.array([i for i, n in enumerate(names) if n in mv.true_sensitive], dtype=int)


def termination_benchmark(
    mv: SynthMultiverse,
    kind: SamplerKind | str,
    config: BenchConfig = BenchConfig(),
    seed: int = 0,
) -> BenchResult:
    """Fraction of the multiverse drawn until the termination conditions hold.

    A full draw always satisfies the conditions (the sample then equals the
    full data), so every recorded fraction is at most 1.
    """
    kind = SamplerKind(kind)
    full = full_data_scores(mv)
    sensitive_idx = _sensitive_indices(mv)
    n = mv.n
    fractions = np.empty(config.repeats)
    for r in range(config.repeats):
        plan = make_plan(kind, mv.space, mv.universes, repeat_seed(seed, r),
                         sketch_pairwise=config.sketch_pairwise)
        tracker = _GroupTracker(mv)
        stop_at = n
        for t, uid in enumerate(plan.order, start=1):
            tracker.add(uid)
            if t % config.stride and t < n:
                continue
            if not tracker.gate_met(config.min_per_option):
                continue
            try:
                scores = tracker.scores()
            except DegenerateSampleError:
                continue
            if _conditions_met(scores, full, sensitive_idx, config):
                stop_at = t
                break
        fractions[r] = stop_at / n
    return BenchResult(kind=kind, fractions=fractions)


def correlation_trajectory(
    mv: SynthMultiverse,
    kind: SamplerKind | str,
    repeats: int = 50,
    seed: int = 0,
    min_per_option: int = MIN_PER_OPTION,
    sketch_pairwise: bool = False,
) -> TrajectoryResult:
    """Per-draw Pearson/Spearman vs. full data, averaged over repeats.

    Correlations that are undefined (per-option gate unmet, degenerate
    scores, or zero variance) are imputed as 0 before averaging. The
    Spearman series is only produced when at least two decisions are truly
    sensitive.
    """
    kind = SamplerKind(kind)
    full = full_data_scores(mv)
    sensitive_idx = _sensitive_indices(mv)
    with_spearman = sensitive_idx.size >= 2
    n = mv.n
    p_acc = np.zeros(n)
    s_acc = np.zeros(n) if with_spearman else None
    for r in range(repeats):
        plan = make_plan(kind, mv.space, mv.universes, repeat_seed(seed, r),
                         sketch_pairwise=sketch_pairwise)
        tracker = _GroupTracker(mv)
        for t, uid in enumerate(plan.order, start=1):
            tracker.add(uid)
            if not tracker.gate_met(min_per_option):
                continue
            try:
                scores = tracker.scores()
            except DegenerateSampleError:
                continue
            try:
                p_acc[t - 1] += pearson(scores, full)
            except UndefinedCorrelationError:
                pass
            if with_spearman:
                try:
                    s_acc[t - 1] += spearman(scores[sensitive_idx], full[sensitive_idx])
                except UndefinedCorrelationError:
                    pass
    return TrajectoryResult(
        kind=kind,
        pearson_mean=p_acc / repeats,
        spearman_mean=None if s_acc is None else s_acc / repeats,
    )


def default_burn_in(space: DecisionSpace) -> int:
    """Sum of the cardinalities of all decisions."""
    return space.total_options


def bias_mse_experiment(
    mv: SynthMultiverse,
    kind: SamplerKind | str,
    repeats: int = 50,
    seed: int = 0,
    corrected: bool = True,
    burn_in: int | None = None,
    true_mean: float | None = None,
    sketch_pairwise: bool = False,
) -> MseResult:
    """MSE of the running mean estimate over sample sizes b..n.

    Draws progressively until all universes are included; at each size t >= b
    the estimate is either the importance-weighted mean (corrected) or the
    arithmetic mean, and the squared error against the reference mean is
    averaged with the 1/(n-b) normalization. Under uniform sampling the two
    estimators coincide exactly (every weight is 1).

    The reference mean defaults to the realized full-data mean, which is the
    estimand of the weighted estimator; that keeps the measurement about
    sampler-induced error rather than generator noise. Pass
    ``true_mean=mv.true_mean`` to measure against the analytic mean instead.
    """
    kind = SamplerKind(kind)
    n = mv.n
    b = default_burn_in(mv.space) if burn_in is None else burn_in
    if b >= n:
        raise ValueError("burn-in must be smaller than the multiverse size")
    mu = true_mean if true_mean is not None else float(np.mean(mv.outcomes))
    per_repeat = np.empty(repeats)
    for r in range(repeats):
        plan = make_plan(kind, mv.space, mv.universes, repeat_seed(seed, r),
                         sketch_pairwise=sketch_pairwise)
        order = np.asarray(plan.order)
        y = mv.outcomes[order]
        if corrected:
            w = (1.0 / n) / np.asarray(plan.g)
            terms = y * w
        else:
            terms = y
        estimates = np.cumsum(terms) / np.arange(1, n + 1)
        err = estimates[b - 1 :] - mu
        per_repeat[r] = float(np.sum(err**2)) / (n - b)
    return MseResult(kind=kind, corrected=corrected, per_repeat=per_repeat, burn_in=b)

"""Sampling planners: full execution orders plus per-draw densities.

Three planners produce a permutation of all universe ids together with a
sampling density ``g`` per draw, used downstream as the importance-weight
denominator when estimating the mean outcome from a prefix of the order:

* uniform: every universe equally likely, g = 1/n.
* sketching: weighted by statistical leverage scores of the one-hot design,
  drawn sequentially without replacement with renormalization; the recorded
  density is the leverage share l_i / sum(l).
* round robin: stratified rotation over every (decision, option) pair,
  drawing uniformly from each non-exhausted stratum; the recorded density is
  the per-round inclusion probability converted to a per-draw density.

All planners use numpy's PCG64 generator, which is seedable and portable
across platforms, so plans are reproducible given (inputs, seed).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .model import DecisionSpace, EncodedDesign, Universe, encode_one_hot

# Recorded densities are clamped away from zero so importance weights stay
# finite; only degenerate (zero) rows of synthetic matrices ever hit this.
MIN_G = 1e-12

SVD_RANK_TOL = 1e-10


class PlanError(ValueError):
    """Raised when a sampling plan cannot be constructed."""


class SamplerKind(str, Enum):
    UNIFORM = "uniform"
    ROUND_ROBIN = "round_robin"
    SKETCHING = "sketching"


@dataclass(frozen=True)
class SamplePlan:
    """A full sampling order plus aligned per-draw densities."""

    order: tuple[int, ...]
    g: tuple[float, ...]
    kind: SamplerKind
    seed: int

    def __post_init__(self) -> None:
        n = len(self.order)
        if sorted(self.order) != list(range(n)):
            raise PlanError("plan order must be a permutation of 0..n-1")
        if len(self.g) != n:
            raise PlanError("g must align with order")
        if any(not (0.0 < v <= 1.0) for v in self.g):
            raise PlanError("every g value must lie in (0, 1]")

    @property
    def n(self) -> int:
        return len(self.order)

    def g_by_universe(self) -> np.ndarray:
        """Density indexed by universe id rather than draw position."""
        out = np.empty(self.n)
        out[np.asarray(self.order)] = np.asarray(self.g)
        return out

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["order_index", "universe_id", "g"])
            for i, (uid, g) in enumerate(zip(self.order, self.g)):
                writer.writerow([i, uid, repr(g)])


@dataclass(frozen=True)
class LeverageScores:
    values: np.ndarray
    d: int

    @property
    def total(self) -> float:
        return float(self.values.sum())


def default_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def plan_uniform(n: int, seed: int) -> SamplePlan:
    """Uniformly random permutation; every draw has density 1/n."""
    if n < 1:
        raise PlanError("need at least one universe")
    rng = default_rng(seed)
    order = rng.permutation(n)
    g = 1.0 / n
    return SamplePlan(
        order=tuple(int(i) for i in order),
        g=(g,) * n,
        kind=SamplerKind.UNIFORM,
        seed=seed,
    )


def leverage_scores(design: EncodedDesign | np.ndarray) -> LeverageScores:
    """Diagonal of the hat projector of X, from the thin SVD.

    Singular values at or below ``SVD_RANK_TOL`` are truncated, so the scores
    sum to the numerical rank of X.
    """
    X = design.matrix if isinstance(design, EncodedDesign) else np.asarray(design, dtype=float)
    U, s, _ = np.linalg.svd(X, full_matrices=False)
    keep = s > SVD_RANK_TOL
    values = np.einsum("ij,ij->i", U[:, keep], U[:, keep])
    return LeverageScores(values=values, d=X.shape[1])


def plan_sketching(design: EncodedDesign | np.ndarray, seed: int) -> SamplePlan:
    """Leverage-weighted order, sequential and without replacement.

    At each draw the remaining leverage scores are renormalized; rows with
    zero leverage (possible only in rank-deficient synthetic matrices) are
    therefore drawn last, uniformly among themselves. The recorded density is
    the leverage share l_i / sum(l), the static single-draw distribution.
    """
    lev = leverage_scores(design)
    l = lev.values
    n = len(l)
    if n < 1:
        raise PlanError("need at least one universe")
    if lev.total <= 0.0:
        raise PlanError("all leverage scores are zero (degenerate design)")
    rng = default_rng(seed)
    g = np.clip(l / lev.total, MIN_G, 1.0)
    alive = np.arange(n)
    order: list[int] = []
    for _ in range(n):
        w = l[alive]
        total = w.sum()
        if total > 0.0:
            idx = int(rng.choice(len(alive), p=w / total))
        else:
            idx = int(rng.integers(len(alive)))
        order.append(int(alive[idx]))
        alive = np.delete(alive, idx)
    return SamplePlan(
        order=tuple(order),
        g=tuple(float(g[i]) for i in order),
        kind=SamplerKind.SKETCHING,
        seed=seed,
    )


def inclusion_probability_round(stratum_sizes: Sequence[int]) -> float:
    """Probability that a universe is drawn within one stratified round.

    In a round, every decision's stratum containing the universe draws one
    member uniformly; with independent selection across the m decisions and
    q_j = 1/size_j, the inclusion probability is the alternating
    inclusion-exclusion series over all decisions, which collapses to
    1 - prod_j(1 - q_j). A stratum of size 1 yields probability 1.
    """
    sizes = np.asarray(stratum_sizes, dtype=float)
    if sizes.size == 0:
        raise ValueError("need at least one stratum size")
    if np.any(sizes < 1):
        raise ValueError("stratum sizes must be positive")
    return float(1.0 - np.prod(1.0 - 1.0 / sizes))


def plan_round_robin(
    space: DecisionSpace,
    universes: Sequence[Universe],
    seed: int,
) -> SamplePlan:
    """Stratified rotation: each round visits every (decision, option) pair.

    Rounds repeat until every universe is drawn. Within a round, decisions
    and options are visited in manifest order and one not-yet-drawn universe
    is selected uniformly from each non-empty stratum, so after one full
    round every option with remaining universes has gained a sample.

    The density recorded for every draw is the universe's first-round
    inclusion probability (see ``inclusion_probability_round``, applied to
    the initial stratum sizes) normalized over all universes: g = v_i /
    sum(v). Raw inclusion probabilities sum to the expected number of draws
    per round rather than 1, so used directly they would scale
    importance-weighted estimates by that factor; and per-round conditional
    densities track the shrinking remaining pool, which measurably tilts the
    weighted estimator downward on late prefixes. The static normalized
    density, like the other planners' densities, has only the mild
    without-replacement drift.
    """
    n = len(universes)
    if n < 1:
        raise PlanError("need at least one universe")
    rng = default_rng(seed)
    names = space.decision_names
    m = len(names)
    cards = [space.decision(dn).cardinality for dn in names]
    opt_index = {
        (d.name, o): k for d in space.decisions for k, o in enumerate(d.options)
    }
    A = np.array(
        [[opt_index[(dn, u.assignment[dn])] for dn in names] for u in universes],
        dtype=np.intp,
    )

    members: list[list[list[int]]] = [[[] for _ in range(k)] for k in cards]
    pos = np.zeros((n, m), dtype=np.intp)
    for i in range(n):
        for j in range(m):
            lst = members[j][A[i, j]]
            pos[i, j] = len(lst)
            lst.append(i)

    def remove(uid: int) -> None:
        for j in range(m):
            lst = members[j][A[uid, j]]
            p = pos[uid, j]
            last = lst[-1]
            lst[p] = last
            pos[last, j] = p
            lst.pop()

    q = np.empty((n, m))
    for j in range(m):
        sizes_j = np.array([len(members[j][o]) for o in range(cards[j])], dtype=float)
        q[:, j] = 1.0 / sizes_j[A[:, j]]
    incl = 1.0 - np.prod(1.0 - q, axis=1)
    density = incl / incl.sum()

    order: list[int] = []
    remaining = n
    while remaining > 0:
        for j in range(m):
            for o in range(cards[j]):
                lst = members[j][o]
                if not lst:
                    continue
                pick = lst[int(rng.integers(len(lst)))]
                remove(pick)
                order.append(pick)
                remaining -= 1
    return SamplePlan(
        order=tuple(order),
        g=tuple(float(density[i]) for i in order),
        kind=SamplerKind.ROUND_ROBIN,
        seed=seed,
    )


def make_plan(
    kind: SamplerKind | str,
    space: DecisionSpace,
    universes: Sequence[Universe],
    seed: int,
    sketch_pairwise: bool = False,
) -> SamplePlan:
    """Build a plan of the requested kind for a concrete multiverse."""
    kind = SamplerKind(kind)
    if kind is SamplerKind.UNIFORM:
        return plan_uniform(len(universes), seed)
    if kind is SamplerKind.ROUND_ROBIN:
        return plan_round_robin(space, universes, seed)
    design = encode_one_hot(space, universes, pairwise=sketch_pairwise)
    return plan_sketching(design, seed)

"""Synthetic multiverses with planted sensitivity structure.

Each option of each decision contributes an independent normal draw
N(mu_option, sigma^2) to a universe's outcome; the outcome is the sum of the
contributions of all decisions (plus any interaction cell shifts). An option
with mu = 0 is a baseline that adds nothing but noise; a decision whose
options are all baselines is non-sensitive. Rarity is produced by exclusion
rules that shrink an option's stratum relative to its siblings.

The presets d1..d5 mirror common benchmark scenarios; the structural prose
(counts of sensitive decisions, cardinalities, which options are rare)
is fixed, while magnitudes and rarity fractions are declared defaults
exposed through ``PresetTuning``:

* d1 simplest: one sensitive decision whose influential 6-sigma option is
  rare, plus four non-sensitive decisions.
* d2 interaction: eight binary decisions; two interact through a cell shift
  on one rare combination, the rest are non-sensitive.
* d3 high cardinality: one sensitive decision with 50 options (45 baseline,
  5 influential); half of the options, including all influential ones, rare.
* d4 distractor decisions: three sensitive decisions (one with a rare
  influential option, two dependency-free distractors) and four
  non-sensitive ones.
* d5 distractor options: like d1 but four baseline options of the sensitive
  decision are rare as well.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .model import (
    Decision,
    DecisionSpace,
    ExclusionRule,
    ManifestError,
    Universe,
    enumerate_universes,
    universes_to_outcome_csv,
)
from .sampling import default_rng

PRESET_NAMES = ("d1", "d2", "d3", "d4", "d5")


@dataclass(frozen=True)
class SynthOption:
    name: str
    mean: float = 0.0

    @property
    def baseline(self) -> bool:
        return self.mean == 0.0


@dataclass(frozen=True)
class SynthDecision:
    name: str
    options: tuple[SynthOption, ...]


@dataclass(frozen=True)
class InteractionEffect:
    """Cell-specific mean shift applied when every binding matches."""

    bindings: Mapping[str, str]
    delta: float


@dataclass(frozen=True)
class SynthSpec:
    name: str
    decisions: tuple[SynthDecision, ...]
    sigma: float = 1.0
    rules: tuple[ExclusionRule, ...] = ()
    interactions: tuple[InteractionEffect, ...] = ()

    def __post_init__(self) -> None:
        if self.sigma <= 0.0:
            raise ValueError("sigma must be positive")
        self.space()  # validates names, cardinalities, and rule references

    def space(self) -> DecisionSpace:
        return DecisionSpace(
            name=self.name,
            decisions=tuple(
                Decision(d.name, tuple(o.name for o in d.options)) for d in self.decisions
            ),
            rules=self.rules,
        )

    @property
    def true_sensitive(self) -> frozenset[str]:
        """Decisions with a non-baseline option or participating in an interaction."""
        names = {d.name for d in self.decisions if any(not o.baseline for o in d.options)}
        for eff in self.interactions:
            names.update(eff.bindings.keys())
        return frozenset(names)

    @property
    def true_ranking(self) -> tuple[str, ...]:
        """Sensitive decisions ordered by planted effect magnitude (informational)."""

        def magnitude(d: SynthDecision) -> float:
            own = max((abs(o.mean) for o in d.options), default=0.0)
            inter = max(
                (abs(e.delta) for e in self.interactions if d.name in e.bindings),
                default=0.0,
            )
            return max(own, inter)

        ranked = sorted(
            (d for d in self.decisions if d.name in self.true_sensitive),
            key=lambda d: (-magnitude(d), d.name),
        )
        return tuple(d.name for d in ranked)

    def mean_of(self, assignment: Mapping[str, str]) -> float:
        """Expected outcome of one universe (sum of option means plus shifts)."""
        by_name = {d.name: {o.name: o.mean for o in d.options} for d in self.decisions}
        total = sum(by_name[dn][on] for dn, on in assignment.items())
        for eff in self.interactions:
            if all(assignment.get(dn) == on for dn, on in eff.bindings.items()):
                total += eff.delta
        return total


@dataclass(frozen=True)
class SynthMultiverse:
    """A concrete multiverse with precomputed outcomes.

    ``spec`` and ``true_mean`` are present for generated multiverses and
    absent for tables loaded from disk (no ground truth).
    """

    space: DecisionSpace
    universes: tuple[Universe, ...]
    outcomes: np.ndarray = field(repr=False)
    spec: SynthSpec | None = None
    true_mean: float | None = None

    @property
    def n(self) -> int:
        return len(self.universes)

    @property
    def true_sensitive(self) -> frozenset[str]:
        return self.spec.true_sensitive if self.spec else frozenset()

    def to_csv(self) -> str:
        return universes_to_outcome_csv(self.space, self.universes, self.outcomes)


def generate(spec: SynthSpec, seed: int) -> SynthMultiverse:
    """Draw outcomes for every valid universe; deterministic given the seed.

    The analytic true mean is the average over valid universes of the summed
    option means (plus interaction shifts), independent of the noise draw.
    """
    space = spec.space()
    universes = enumerate_universes(space)
    n = len(universes)
    m = len(spec.decisions)
    mus = np.zeros((n, m))
    option_mean = {
        (d.name, o.name): o.mean for d in spec.decisions for o in d.options
    }
    for i, u in enumerate(universes):
        for j, dname in enumerate(space.decision_names):
            mus[i, j] = option_mean[(dname, u.assignment[dname])]
    rng = default_rng(seed)
    y = rng.normal(loc=mus, scale=spec.sigma).sum(axis=1)
    shifts = np.zeros(n)
    for eff in spec.interactions:
        for i, u in enumerate(universes):
            if all(u.assignment.get(dn) == on for dn, on in eff.bindings.items()):
                shifts[i] += eff.delta
    y = y + shifts
    true_mean = float(np.mean([spec.mean_of(u.assignment) for u in universes]))
    return SynthMultiverse(
        space=space,
        universes=tuple(universes),
        outcomes=y,
        spec=spec,
        true_mean=true_mean,
    )


@dataclass(frozen=True)
class PresetTuning:
    """Declared magnitude/rarity defaults for the presets.

    ``influential_mean`` is the planted strong effect (in units of sigma),
    ``distractor_mean`` the effect of dependency-free sensitive decisions,
    and ``interaction_delta`` the cell shift of the interacting pair. Rarity
    is structural: rules in each preset cut a rare option's stratum to
    roughly a fifth to a quarter of a sibling option's stratum.

    d4 uses its own influential magnitude: its rare option competes with two
    distractor decisions worth of outcome variance, and the over-sampling
    bias it plants must stay visible above that variance for the
    bias-correction contrast to be measurable at 50 repeats.
    """

    sigma: float = 1.0
    influential_mean: float = 6.0
    distractor_mean: float = 3.0
    interaction_delta: float = 6.0
    d4_influential_mean: float = 9.0


def _baseline(name: str, k: int) -> SynthDecision:
    letters = "abcdefghij"
    return SynthDecision(name, tuple(SynthOption(letters[i]) for i in range(k)))


def preset(name: str, tuning: PresetTuning = PresetTuning()) -> SynthSpec:
    """One of the benchmark presets d1..d5 (case-insensitive)."""
    key = name.lower()
    s = tuning.sigma
    hot = tuning.influential_mean * s
    distract = tuning.distractor_mean * s

    if key == "d1":
        # 4*3*4*3*4 = 576 combinations; exclusions cut the hot option's
        # stratum from 144 to 18 (4% of the 450 valid universes, an eighth
        # of a sibling option's stratum).
        return SynthSpec(
            name="d1",
            sigma=s,
            decisions=(
                SynthDecision(
                    "s1",
                    (
                        SynthOption("a"),
                        SynthOption("b"),
                        SynthOption("c"),
                        SynthOption("hot", hot),
                    ),
                ),
                _baseline("n1", 3),
                _baseline("n2", 4),
                _baseline("n3", 3),
                _baseline("n4", 4),
            ),
            rules=tuple(
                ExclusionRule({"s1": "hot", "n2": o}) for o in ("b", "c", "d")
            )
            + (
                ExclusionRule({"s1": "hot", "n4": "c"}),
                ExclusionRule({"s1": "hot", "n4": "d"}),
            ),
        )

    if key == "d2":
        # Eight binary decisions, 2^8 = 256 combinations pre-exclusion. The
        # two sensitive decisions carry no main effect; their sensitivity
        # comes entirely from the interaction cell, which is made rare.
        decisions = (
            _baseline("s1", 2),
            _baseline("s2", 2),
            _baseline("n1", 2),
            _baseline("n2", 2),
            _baseline("n3", 2),
            _baseline("n4", 2),
            _baseline("n5", 2),
            _baseline("n6", 2),
        )
        return SynthSpec(
            name="d2",
            sigma=s,
            decisions=decisions,
            rules=(ExclusionRule({"s1": "b", "s2": "b", "n1": "b"}),),
            interactions=(
                InteractionEffect({"s1": "b", "s2": "b"}, tuning.interaction_delta * s),
            ),
        )

    if key == "d3":
        # One 50-option decision: 45 baselines plus 5 influential options.
        # Half of the options (including all influential ones) are rare:
        # their strata shrink from 24 to 4 universes.
        options = tuple(SynthOption(f"b{i:02d}") for i in range(1, 46)) + tuple(
            SynthOption(f"h{i}", hot) for i in range(1, 6)
        )
        rare = tuple(f"b{i:02d}" for i in range(1, 21)) + tuple(f"h{i}" for i in range(1, 6))
        rules = []
        for o in rare:
            rules.extend(
                [
                    ExclusionRule({"s1": o, "n1": "a"}),
                    ExclusionRule({"s1": o, "n1": "b"}),
                    ExclusionRule({"s1": o, "n2": "a"}),
                    ExclusionRule({"s1": o, "n2": "b"}),
                ]
            )
        return SynthSpec(
            name="d3",
            sigma=s,
            decisions=(
                SynthDecision("s1", options),
                _baseline("n1", 4),
                _baseline("n2", 3),
                _baseline("n3", 2),
            ),
            rules=tuple(rules),
        )

    if key == "d4":
        # Like d1 plus two dependency-free sensitive distractors; the hot
        # option keeps 24 of its 144 universes.
        return SynthSpec(
            name="d4",
            sigma=s,
            decisions=(
                SynthDecision(
                    "s1",
                    (
                        SynthOption("a"),
                        SynthOption("b"),
                        SynthOption("c"),
                        SynthOption("hot", tuning.d4_influential_mean * s),
                    ),
                ),
                SynthDecision(
                    "s2",
                    (SynthOption("a"), SynthOption("b"), SynthOption("c", distract)),
                ),
                SynthDecision("s3", (SynthOption("a"), SynthOption("b", distract))),
                _baseline("n1", 2),
                _baseline("n2", 2),
                _baseline("n3", 3),
                _baseline("n4", 2),
            ),
            rules=(
                ExclusionRule({"s1": "hot", "n3": "b"}),
                ExclusionRule({"s1": "hot", "n3": "c"}),
                ExclusionRule({"s1": "hot", "n1": "b"}),
            ),
        )

    if key == "d5":
        # Same shape as d1, but four baseline options of the sensitive
        # decision are exactly as rare as the influential one (strata of 18
        # against a fair 144), soaking up leverage mass without signal.
        rules = []
        for o in ("r1", "r2", "r3", "r4", "hot"):
            rules.extend(ExclusionRule({"s1": o, "n2": x}) for x in ("b", "c", "d"))
            rules.extend(ExclusionRule({"s1": o, "n4": x}) for x in ("c", "d"))
        return SynthSpec(
            name="d5",
            sigma=s,
            decisions=(
                SynthDecision(
                    "s1",
                    (
                        SynthOption("c0"),
                        SynthOption("r1"),
                        SynthOption("r2"),
                        SynthOption("r3"),
                        SynthOption("r4"),
                        SynthOption("hot", hot),
                    ),
                ),
                _baseline("n1", 3),
                _baseline("n2", 4),
                _baseline("n3", 3),
                _baseline("n4", 4),
            ),
            rules=tuple(rules),
        )

    raise ValueError(f"unknown preset {name!r} (expected one of {PRESET_NAMES})")


def load_table(text: str, name: str = "table") -> SynthMultiverse:
    """Load a precomputed-outcome CSV (decision columns plus 'outcome').

    The decision space is inferred: options appear in first-occurrence order,
    missing combinations are treated as excluded, and universe ids follow row
    order. No ground truth is attached.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ManifestError("empty outcome table") from None
    if "outcome" not in header:
        raise ManifestError("outcome table is missing the 'outcome' column")
    out_col = header.index("outcome")
    decision_names = [h for i, h in enumerate(header) if i != out_col]
    if not decision_names:
        raise ManifestError("outcome table needs at least one decision column")

    options: dict[str, list[str]] = {d: [] for d in decision_names}
    rows: list[tuple[dict[str, str], float]] = []
    seen: set[tuple[str, ...]] = set()
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ManifestError(f"row {lineno}: expected {len(header)} fields")
        assignment = {}
        for i, h in enumerate(header):
            if i == out_col:
                continue
            value = row[i]
            assignment[h] = value
            if value not in options[h]:
                options[h].append(value)
        key = tuple(assignment[d] for d in decision_names)
        if key in seen:
            raise ManifestError(f"row {lineno}: duplicate universe {key}")
        seen.add(key)
        try:
            y = float(row[out_col])
        except ValueError:
            raise ManifestError(f"row {lineno}: non-numeric outcome {row[out_col]!r}") from None
        if not math.isfinite(y):
            raise ManifestError(f"row {lineno}: non-finite outcome")
        rows.append((assignment, y))
    if not rows:
        raise ManifestError("outcome table has no data rows")

    space = DecisionSpace(
        name=name,
        decisions=tuple(Decision(d, tuple(options[d])) for d in decision_names),
    )
    universes = tuple(
        Universe(id=i, assignment=assignment) for i, (assignment, _) in enumerate(rows)
    )
    outcomes = np.array([y for _, y in rows])
    return SynthMultiverse(space=space, universes=universes, outcomes=outcomes)

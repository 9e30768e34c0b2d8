"""Decision spaces, universe enumeration, and one-hot design encoding.

A multiverse is defined by a set of named decisions, each with at least two
discrete options, plus optional exclusion constraints that remove invalid
combinations from the cross product. Every valid combination is a universe.
Enumeration is deterministic (odometer order over the manifest's decision
sequence, last decision varying fastest), so universe ids are stable across
runs and machines.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np


class ManifestError(ValueError):
    """Raised for malformed or inconsistent multiverse definitions."""


class EmptyMultiverseError(ManifestError):
    """Raised when exclusion rules remove every combination."""


@dataclass(frozen=True)
class Decision:
    """One point of analytic variation with its ordered discrete options."""

    name: str
    options: tuple[str, ...]

    @property
    def cardinality(self) -> int:
        return len(self.options)


@dataclass(frozen=True)
class ExclusionRule:
    """Conjunctive partial assignment; a universe matching every binding is invalid."""

    bindings: Mapping[str, str]

    def matches(self, assignment: Mapping[str, str]) -> bool:
        return all(assignment.get(d) == o for d, o in self.bindings.items())


@dataclass(frozen=True)
class DecisionSpace:
    name: str
    decisions: tuple[Decision, ...]
    rules: tuple[ExclusionRule, ...] = ()
    command_template: str | None = None

    def __post_init__(self) -> None:
        validate_space(self)

    def decision(self, name: str) -> Decision:
        for d in self.decisions:
            if d.name == name:
                return d
        raise KeyError(f"unknown decision {name!r}")

    @property
    def decision_names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.decisions)

    @property
    def theta_size(self) -> int:
        """Size of the unconstrained cross product."""
        size = 1
        for d in self.decisions:
            size *= d.cardinality
        return size

    @property
    def total_options(self) -> int:
        return sum(d.cardinality for d in self.decisions)


@dataclass(frozen=True)
class Universe:
    """One full decision assignment; ids are dense 0..n-1 in enumeration order."""

    id: int
    assignment: Mapping[str, str]


@dataclass(frozen=True)
class EncodedDesign:
    """One-hot design matrix over universes; all option columns are kept.

    No reference level is dropped and no intercept is added, so each row sums
    to the number of decisions.
    """

    matrix: np.ndarray
    column_map: Mapping[tuple[str, str], int] = field(repr=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def d(self) -> int:
        return self.matrix.shape[1]

    def columns_for(self, decision: str) -> list[int]:
        cols = [c for (d, _), c in self.column_map.items() if d == decision]
        if not cols:
            raise KeyError(f"unknown decision {decision!r}")
        return sorted(cols)


def validate_space(space: DecisionSpace) -> None:
    seen: set[str] = set()
    for d in space.decisions:
        if not d.name:
            raise ManifestError("decision name must be non-empty")
        if d.name in seen:
            raise ManifestError(f"duplicate decision name {d.name!r}")
        seen.add(d.name)
        if d.cardinality < 2:
            raise ManifestError(
                f"decision {d.name!r}: decision cardinality < 2"
            )
        if len(set(d.options)) != d.cardinality or any(not o for o in d.options):
            raise ManifestError(f"decision {d.name!r} has empty or duplicate options")
    by_name = {d.name: d for d in space.decisions}
    for rule in space.rules:
        if len(rule.bindings) < 2:
            raise ManifestError(
                "exclusion rule needs at least 2 bindings (1 would delete an option)"
            )
        for dname, oname in rule.bindings.items():
            if dname not in by_name:
                raise ManifestError(f"rule references unknown decision {dname!r}")
            if oname not in by_name[dname].options:
                raise ManifestError(
                    f"rule references unknown option {oname!r} of decision {dname!r}"
                )


def parse_manifest(text: str) -> DecisionSpace:
    """Parse a UTF-8 JSON manifest document into a validated DecisionSpace.

    Expected shape::

        {"name": str,
         "decisions": [{"name": str, "options": [str, ...]}, ...],
         "constraints": [{"exclude": {decision: option, ...}}, ...],
         "command": str}   # optional, with {id} and {<decision>} placeholders
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"malformed manifest document: {exc}") from exc
    if not isinstance(doc, dict) or "decisions" not in doc:
        raise ManifestError("manifest must be an object with a 'decisions' list")
    decisions = []
    for entry in doc["decisions"]:
        if not isinstance(entry, dict) or "name" not in entry or "options" not in entry:
            raise ManifestError("each decision needs 'name' and 'options'")
        options = entry["options"]
        if not isinstance(options, list) or not all(isinstance(o, str) for o in options):
            raise ManifestError(f"options of {entry.get('name')!r} must be strings")
        decisions.append(Decision(name=str(entry["name"]), options=tuple(options)))
    rules = []
    for entry in doc.get("constraints", []):
        if not isinstance(entry, dict) or "exclude" not in entry:
            raise ManifestError("each constraint needs an 'exclude' object")
        exclude = entry["exclude"]
        if not isinstance(exclude, dict):
            raise ManifestError("'exclude' must map decision names to option names")
        rules.append(ExclusionRule(bindings={str(k): str(v) for k, v in exclude.items()}))
    return DecisionSpace(
        name=str(doc.get("name", "multiverse")),
        decisions=tuple(decisions),
        rules=tuple(rules),
        command_template=doc.get("command"),
    )


def is_excluded(space: DecisionSpace, assignment: Mapping[str, str]) -> bool:
    return any(rule.matches(assignment) for rule in space.rules)


def enumerate_universes(space: DecisionSpace) -> list[Universe]:
    """All valid universes in odometer order (last decision varies fastest)."""
    names = space.decision_names
    universes: list[Universe] = []
    for combo in itertools.product(*(d.options for d in space.decisions)):
        assignment = dict(zip(names, combo))
        if is_excluded(space, assignment):
            continue
        universes.append(Universe(id=len(universes), assignment=assignment))
    if not universes:
        raise EmptyMultiverseError("empty multiverse: all combinations excluded")
    return universes


def encode_one_hot(
    space: DecisionSpace,
    universes: Sequence[Universe],
    pairwise: bool = False,
) -> EncodedDesign:
    """One-hot encode universes; row i corresponds to universes[i].

    With ``pairwise=True``, columns for every two-way option combination are
    appended (used only for interaction-aware sketching; the row-sum
    invariant applies to the main-effect block alone).
    """
    column_map: dict[tuple[str, str], int] = {}
    for d in space.decisions:
        for o in d.options:
            column_map[(d.name, o)] = len(column_map)
    d_main = len(column_map)
    pair_map: dict[tuple[tuple[str, str], tuple[str, str]], int] = {}
    if pairwise:
        for (d1, d2) in itertools.combinations(space.decisions, 2):
            for o1 in d1.options:
                for o2 in d2.options:
                    pair_map[((d1.name, o1), (d2.name, o2))] = d_main + len(pair_map)
    X = np.zeros((len(universes), d_main + len(pair_map)))
    for i, u in enumerate(universes):
        for dname, oname in u.assignment.items():
            X[i, column_map[(dname, oname)]] = 1.0
        if pairwise:
            for (k1, k2), col in pair_map.items():
                if u.assignment.get(k1[0]) == k1[1] and u.assignment.get(k2[0]) == k2[1]:
                    X[i, col] = 1.0
    return EncodedDesign(matrix=X, column_map=column_map)


def stratum(
    space: DecisionSpace,
    universes: Iterable[Universe],
    decision: str,
    option: str,
) -> list[Universe]:
    """Universes whose assignment maps ``decision`` to ``option``."""
    d = space.decision(decision)
    if option not in d.options:
        raise KeyError(f"unknown option {option!r} of decision {decision!r}")
    return [u for u in universes if u.assignment[decision] == option]


def substitute_command(template: str, universe: Universe) -> str:
    """Fill {id} and {<decision>} placeholders in a command template."""
    out = template.replace("{id}", str(universe.id))
    for dname, oname in universe.assignment.items():
        out = out.replace("{" + dname + "}", oname)
    return out


def universes_to_outcome_csv(
    space: DecisionSpace,
    universes: Sequence[Universe],
    outcomes: Sequence[float],
) -> str:
    """Render the precomputed-outcome table: decision columns plus 'outcome'."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    names = list(space.decision_names)
    writer.writerow(names + ["outcome"])
    for u, y in zip(universes, outcomes):
        writer.writerow([u.assignment[d] for d in names] + [repr(float(y))])
    return buf.getvalue()

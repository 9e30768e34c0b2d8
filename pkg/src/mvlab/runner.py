"""Universe execution: subprocess protocol, state machine, and snapshots.

Universes run as subprocesses in plan order under a coordinator that owns all
run state. The universe protocol: the manifest's command template is filled
with {id} and {<decision>} placeholders, the process writes diagnostics to
stderr, and the LAST line of stdout must be a one-line JSON record

    {"outcome": number, "quality": number?, "observed": [..]?, "predicted": [..]?}

with exit code 0 on success. Results are appended to a JSON-lines log (one
result per line) so an interrupted run can resume without re-executing
completed universes.

Admission order always equals plan order regardless of worker count or
completion order; importance weights stay valid only under that guarantee.
"""

from __future__ import annotations

import json
import math
import os
import re
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .model import DecisionSpace, Universe, substitute_command
from .sampling import SamplePlan
from .stats import (
    BOOTSTRAP_LIVE,
    ConfidenceInterval,
    OutcomeSample,
    SensitivityScore,
    bootstrap_ci_bca,
    sensitivity_report,
    weighted_mean,
)

DEFAULT_ENV_ALLOWLIST = ("PATH", "HOME", "LANG", "LC_ALL", "PYTHONPATH", "TMPDIR", "VIRTUAL_ENV")

#: Trailing completions used for the moving-average duration in ETA estimates.
ETA_WINDOW = 20


class IllegalTransitionError(RuntimeError):
    """Raised on a control action not allowed from the current phase."""


class RunPhase(str, Enum):
    IDLE = "idle"
    RUNNING = "running"
    PAUSED = "paused"
    COMPLETED = "completed"


class UniverseStatus(str, Enum):
    OK = "ok"
    WARNING = "warning"
    ERROR = "error"
    TIMEOUT = "timeout"
    INVALID_OUTPUT = "invalid_output"


#: Statuses whose outcomes feed the estimates; the rest land in the
#: "no outcome" bin of the main-effect view.
COUNTED_STATUSES = (UniverseStatus.OK, UniverseStatus.WARNING)


@dataclass(frozen=True)
class RunConfig:
    workers: int = 1
    timeout: float = 60.0
    cwd: str | None = None
    env_allowlist: tuple[str, ...] = DEFAULT_ENV_ALLOWLIST

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


@dataclass(frozen=True)
class UniverseResult:
    universe_id: int
    status: UniverseStatus
    outcome: float | None = None
    quality: float | None = None
    observed: tuple[float, ...] | None = None
    predicted: tuple[float, ...] | None = None
    stderr_text: str = ""
    duration: float = 0.0
    completed_at: float = 0.0

    def __post_init__(self) -> None:
        if self.status in COUNTED_STATUSES:
            if self.outcome is None or not math.isfinite(self.outcome):
                raise ValueError(f"status {self.status} requires a finite outcome")
        elif self.status in (UniverseStatus.ERROR, UniverseStatus.TIMEOUT):
            if self.outcome is not None:
                raise ValueError(f"status {self.status} must not carry an outcome")

    def to_json(self) -> str:
        doc = {
            "universe_id": self.universe_id,
            "status": self.status.value,
            "outcome": self.outcome,
            "quality": self.quality,
            "observed": list(self.observed) if self.observed is not None else None,
            "predicted": list(self.predicted) if self.predicted is not None else None,
            "stderr_text": self.stderr_text,
            "duration": self.duration,
            "completed_at": self.completed_at,
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, line: str) -> "UniverseResult":
        doc = json.loads(line)
        return cls(
            universe_id=int(doc["universe_id"]),
            status=UniverseStatus(doc["status"]),
            outcome=doc.get("outcome"),
            quality=doc.get("quality"),
            observed=tuple(doc["observed"]) if doc.get("observed") is not None else None,
            predicted=tuple(doc["predicted"]) if doc.get("predicted") is not None else None,
            stderr_text=doc.get("stderr_text", ""),
            duration=float(doc.get("duration", 0.0)),
            completed_at=float(doc.get("completed_at", 0.0)),
        )


@dataclass(frozen=True)
class RunState:
    phase: RunPhase
    completed: int
    total: int
    cursor: int
    eta_seconds: float | None = None

    def to_doc(self) -> dict:
        return {
            "phase": self.phase.value,
            "completed": self.completed,
            "total": self.total,
            "cursor": self.cursor,
            "eta_seconds": self.eta_seconds,
        }


@dataclass(frozen=True)
class AggregatedMessage:
    normalized_text: str
    severity: str  # "error" | "warning"
    universe_ids: tuple[int, ...]

    @property
    def count(self) -> int:
        return len(self.universe_ids)

    def to_doc(self) -> dict:
        return {
            "text": self.normalized_text,
            "severity": self.severity,
            "count": self.count,
            "universe_ids": list(self.universe_ids),
        }


@dataclass(frozen=True)
class ProgressSnapshot:
    seq: int
    phase: RunPhase
    completed: int
    failed: int
    total: int
    eta_seconds: float | None
    mean: float | None
    mean_ci: ConfidenceInterval | None
    sensitivity: tuple[SensitivityScore, ...]
    elapsed_seconds: float

    def to_doc(self) -> dict:
        return {
            "seq": self.seq,
            "phase": self.phase.value,
            "completed": self.completed,
            "failed": self.failed,
            "total": self.total,
            "eta_seconds": self.eta_seconds,
            "elapsed_seconds": self.elapsed_seconds,
            "mean": self.mean,
            "mean_ci": list(self.mean_ci.as_tuple()) if self.mean_ci else None,
            "sensitivity": [
                {
                    "decision": s.decision,
                    "score": s.score if s.defined else None,
                    "ci": list(s.ci.as_tuple()) if s.ci else None,
                    "defined": s.defined,
                }
                for s in self.sensitivity
            ],
        }


_ADDR_RE = re.compile(r"0x[0-9a-fA-F]+")
_PATH_RE = re.compile(r"(?:[A-Za-z]:)?(?:/[^\s:,'\"()]+)+")
_NUM_RE = re.compile(r"\d+(?:\.\d+)?")


def normalize_message(text: str) -> str:
    """Strip volatile tokens (addresses, paths, numerals) from a message."""
    text = _ADDR_RE.sub("<ADDR>", text)
    text = _PATH_RE.sub("<PATH>", text)
    text = _NUM_RE.sub("<N>", text)
    return text.strip()


def classify_stderr(text: str) -> tuple[str | None, str | None]:
    """Heuristic severity and normalized message for a stderr stream.

    A block starting with "Traceback" classifies as an error, normalized to
    the final exception line. Otherwise the first line containing "warning"
    (case-insensitive) classifies as a warning. Returns (None, None) for
    anything else, including empty streams.
    """
    if not text or not text.strip():
        return (None, None)
    lines = text.splitlines()
    for i, line in enumerate(lines):
        if line.startswith("Traceback"):
            tail = [l for l in lines[i + 1 :] if l.strip()]
            message = tail[-1] if tail else line
            return ("error", normalize_message(message))
    for line in lines:
        if "warning" in line.lower() and line.strip():
            return ("warning", normalize_message(line))
    return (None, None)


def _failure_message(result: UniverseResult) -> str:
    severity, message = classify_stderr(result.stderr_text)
    if severity == "error" and message:
        return message
    tail = [l for l in result.stderr_text.splitlines() if l.strip()]
    if tail:
        return normalize_message(tail[-1])
    if result.status is UniverseStatus.TIMEOUT:
        return "universe timed out"
    if result.status is UniverseStatus.INVALID_OUTPUT:
        return "universe produced no parseable result line"
    return "universe exited with an error"


def aggregate_messages(results: Iterable[UniverseResult]) -> list[AggregatedMessage]:
    """Distinct normalized diagnostics, errors before warnings, then by count.

    Failed universes (error/timeout/invalid output) always contribute an
    error entry; ok universes contribute a warning entry when their stderr
    classifies as one.
    """
    buckets: dict[tuple[str, str], list[int]] = {}
    for r in results:
        if r.status in (UniverseStatus.ERROR, UniverseStatus.TIMEOUT, UniverseStatus.INVALID_OUTPUT):
            key = ("error", _failure_message(r))
        else:
            severity, message = classify_stderr(r.stderr_text)
            if severity != "warning" or not message:
                continue
            key = ("warning", message)
        buckets.setdefault(key, []).append(r.universe_id)
    entries = [
        AggregatedMessage(normalized_text=text, severity=severity, universe_ids=tuple(sorted(ids)))
        for (severity, text), ids in buckets.items()
    ]
    entries.sort(key=lambda m: (m.severity != "error", -m.count, m.normalized_text))
    return entries


def _parse_result_record(stdout: str) -> dict | None:
    lines = [l for l in stdout.splitlines() if l.strip()]
    if not lines:
        return None
    try:
        doc = json.loads(lines[-1])
    except json.JSONDecodeError:
        return None
    if not isinstance(doc, dict):
        return None
    outcome = doc.get("outcome")
    if not isinstance(outcome, (int, float)) or isinstance(outcome, bool):
        return None
    if not math.isfinite(float(outcome)):
        return None
    return doc


def _float_list(value) -> tuple[float, ...] | None:
    if not isinstance(value, list):
        return None
    try:
        return tuple(float(v) for v in value)
    except (TypeError, ValueError):
        return None


def execute_universe(
    universe: Universe,
    space: DecisionSpace,
    config: RunConfig,
) -> UniverseResult:
    """Run one universe subprocess and classify its result."""
    if not space.command_template:
        raise ValueError("decision space has no command template")
    command = substitute_command(space.command_template, universe)
    argv = shlex.split(command)
    env = {k: os.environ[k] for k in config.env_allowlist if k in os.environ}
    started = time.monotonic()
    try:
        proc = subprocess.run(
            argv,
            capture_output=True,
            text=True,
            timeout=config.timeout,
            cwd=config.cwd,
            env=env,
        )
    except subprocess.TimeoutExpired as exc:
        stderr = exc.stderr if isinstance(exc.stderr, str) else ""
        return UniverseResult(
            universe_id=universe.id,
            status=UniverseStatus.TIMEOUT,
            stderr_text=stderr,
            duration=time.monotonic() - started,
            completed_at=time.monotonic(),
        )
    except (OSError, ValueError) as exc:
        return UniverseResult(
            universe_id=universe.id,
            status=UniverseStatus.ERROR,
            stderr_text=f"failed to launch: {exc}",
            duration=time.monotonic() - started,
            completed_at=time.monotonic(),
        )
    duration = time.monotonic() - started
    if proc.returncode != 0:
        return UniverseResult(
            universe_id=universe.id,
            status=UniverseStatus.ERROR,
            stderr_text=proc.stderr,
            duration=duration,
            completed_at=time.monotonic(),
        )
    record = _parse_result_record(proc.stdout)
    if record is None:
        return UniverseResult(
            universe_id=universe.id,
            status=UniverseStatus.INVALID_OUTPUT,
            stderr_text=proc.stderr,
            duration=duration,
            completed_at=time.monotonic(),
        )
    severity, _ = classify_stderr(proc.stderr)
    status = UniverseStatus.WARNING if severity == "warning" else UniverseStatus.OK
    quality = record.get("quality")
    return UniverseResult(
        universe_id=universe.id,
        status=status,
        outcome=float(record["outcome"]),
        quality=float(quality) if isinstance(quality, (int, float)) else None,
        observed=_float_list(record.get("observed")),
        predicted=_float_list(record.get("predicted")),
        stderr_text=proc.stderr,
        duration=duration,
        completed_at=time.monotonic(),
    )


@dataclass(frozen=True)
class SnapshotPolicy:
    """Full statistics are recomputed at most this often (cheap counters on
    every completion); a forced snapshot always recomputes."""

    min_seconds: float = 2.0
    min_completions: int = 5
    bootstrap_resamples: int = BOOTSTRAP_LIVE
    bootstrap_seed: int = 0
    sensitivity_cis: bool = True


class MultiverseRunner:
    """Coordinator owning run state; workers report back through one lock.

    External callers interact via control operations (start/pause/resume/
    reset), immutable state/snapshot reads, and the event subscription API.
    """

    def __init__(
        self,
        space: DecisionSpace,
        plan: SamplePlan,
        universes: Sequence[Universe],
        config: RunConfig = RunConfig(),
        results_path: str | Path | None = None,
        snapshots_path: str | Path | None = None,
        execute_fn: Callable[[Universe, DecisionSpace, RunConfig], UniverseResult] | None = None,
        snapshot_policy: SnapshotPolicy = SnapshotPolicy(),
    ) -> None:
        if len(universes) != plan.n:
            raise ValueError("plan does not cover the universe set")
        self.space = space
        self.plan = plan
        self.universes = tuple(universes)
        self.config = config
        self.results_path = Path(results_path) if results_path else None
        self.snapshots_path = Path(snapshots_path) if snapshots_path else None
        self._execute = execute_fn or execute_universe
        self._policy = snapshot_policy
        self._by_id = {u.id: u for u in self.universes}
        self._g_by_id = {uid: g for uid, g in zip(plan.order, plan.g)}

        self._lock = threading.RLock()
        self._wake = threading.Condition(self._lock)
        self._snapshot_lock = threading.Lock()  # serializes snapshot production
        self._phase = RunPhase.IDLE
        self._cursor = 0
        self._in_flight = 0
        self._results: dict[int, UniverseResult] = {}
        self._admission_log: list[int] = []
        self._durations: list[float] = []
        self._started_at: float | None = None
        self._dispatcher: threading.Thread | None = None
        self._listeners: list[Callable[[str, dict], None]] = []
        self._snapshots: list[ProgressSnapshot] = []
        self._last_stats_at = 0.0
        self._last_stats_completed = 0
        self._stats_cache: tuple[float | None, ConfidenceInterval | None, tuple[SensitivityScore, ...]] = (
            None,
            None,
            (),
        )
        if self.results_path and self.results_path.exists():
            self._load_results(self.results_path)

    # -- persistence -------------------------------------------------------

    def _load_results(self, path: Path) -> None:
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                result = UniverseResult.from_json(line)
                self._results[result.universe_id] = result

    def _append_result(self, result: UniverseResult) -> None:
        if not self.results_path:
            return
        with open(self.results_path, "a") as fh:
            fh.write(result.to_json() + "\n")
            fh.flush()

    def _append_snapshot(self, snap: ProgressSnapshot) -> None:
        if not self.snapshots_path:
            return
        with open(self.snapshots_path, "a") as fh:
            fh.write(json.dumps(snap.to_doc()) + "\n")
            fh.flush()

    # -- events ------------------------------------------------------------

    def add_listener(self, listener: Callable[[str, dict], None]) -> None:
        with self._lock:
            self._listeners.append(listener)

    def remove_listener(self, listener: Callable[[str, dict], None]) -> None:
        with self._lock:
            if listener in self._listeners:
                self._listeners.remove(listener)

    def _emit(self, event_type: str, payload: dict) -> None:
        with self._lock:
            listeners = list(self._listeners)
        for fn in listeners:
            fn(event_type, payload)

    # -- control -----------------------------------------------------------

    def start(self) -> RunState:
        with self._lock:
            if self._phase is not RunPhase.IDLE:
                raise IllegalTransitionError(f"cannot start from {self._phase.value}")
            self._phase = RunPhase.RUNNING
            self._started_at = time.monotonic()
            self._dispatcher = threading.Thread(target=self._dispatch_loop, daemon=True)
            self._dispatcher.start()
        self._emit("state_changed", self.state().to_doc())
        return self.state()

    def pause(self) -> RunState:
        with self._lock:
            if self._phase is not RunPhase.RUNNING:
                raise IllegalTransitionError(f"cannot pause from {self._phase.value}")
            self._phase = RunPhase.PAUSED
            self._wake.notify_all()
        self._emit("state_changed", self.state().to_doc())
        return self.state()

    def resume(self) -> RunState:
        with self._lock:
            if self._phase is not RunPhase.PAUSED:
                raise IllegalTransitionError(f"cannot resume from {self._phase.value}")
            self._phase = RunPhase.RUNNING
            self._wake.notify_all()
        self._emit("state_changed", self.state().to_doc())
        return self.state()

    def reset(self) -> RunState:
        """Discard all results and return to idle (allowed when not running)."""
        with self._lock:
            if self._phase is RunPhase.RUNNING:
                raise IllegalTransitionError("cannot reset a running multiverse")
            was_paused = self._phase is RunPhase.PAUSED
            self._phase = RunPhase.IDLE
            self._wake.notify_all()
        if was_paused:
            self.join()
        with self._lock:
            self._results.clear()
            self._admission_log.clear()
            self._durations.clear()
            self._snapshots.clear()
            self._cursor = 0
            self._last_stats_at = 0.0
            self._last_stats_completed = 0
            self._stats_cache = (None, None, ())
            if self.results_path and self.results_path.exists():
                self.results_path.unlink()
            if self.snapshots_path and self.snapshots_path.exists():
                self.snapshots_path.unlink()
        self._emit("state_changed", self.state().to_doc())
        return self.state()

    def join(self, timeout: float | None = None) -> None:
        """Wait for the dispatcher (and in-flight universes) to settle."""
        thread = self._dispatcher
        if thread is not None:
            thread.join(timeout)

    # -- dispatch ----------------------------------------------------------

    def _dispatch_loop(self) -> None:
        slots = threading.BoundedSemaphore(self.config.workers)
        workers: list[threading.Thread] = []
        while True:
            with self._lock:
                while self._phase is RunPhase.PAUSED:
                    self._wake.wait()
                if self._phase is not RunPhase.RUNNING:
                    break
                if self._cursor >= self.plan.n:
                    break
                uid = self.plan.order[self._cursor]
                if uid in self._results:
                    self._cursor += 1  # already completed in a previous run
                    continue
            slots.acquire()
            with self._lock:
                if self._phase is not RunPhase.RUNNING:
                    slots.release()
                    if self._phase is RunPhase.PAUSED:
                        continue
                    break
                uid = self.plan.order[self._cursor]
                self._cursor += 1
                self._admission_log.append(uid)
                self._in_flight += 1
            universe = self._by_id[uid]
            worker = threading.Thread(
                target=self._run_one, args=(universe, slots), daemon=True
            )
            workers.append(worker)
            worker.start()
        for w in workers:
            w.join()
        with self._lock:
            done = len(self._results) >= self.plan.n and self._phase is RunPhase.RUNNING
            if done:
                self._phase = RunPhase.COMPLETED
        if done:
            self.snapshot(force=True)
            self._emit("state_changed", self.state().to_doc())

    def _run_one(self, universe: Universe, slots: threading.Semaphore) -> None:
        try:
            result = self._execute(universe, self.space, self.config)
        except Exception as exc:  # defensive: a crashing executor must not hang the run
            result = UniverseResult(
                universe_id=universe.id,
                status=UniverseStatus.ERROR,
                stderr_text=f"executor raised: {exc!r}",
                completed_at=time.monotonic(),
            )
        with self._lock:
            self._results[universe.id] = result
            self._durations.append(result.duration)
            self._in_flight -= 1
        self._append_result(result)
        slots.release()
        self._emit("universe_completed", self._result_doc(result))
        self.snapshot()

    # -- introspection -----------------------------------------------------

    @property
    def admission_log(self) -> list[int]:
        with self._lock:
            return list(self._admission_log)

    def results(self) -> dict[int, UniverseResult]:
        with self._lock:
            return dict(self._results)

    def _eta_locked(self) -> float | None:
        if not self._durations:
            return None
        remaining = self.plan.n - len(self._results)
        if remaining <= 0:
            return 0.0
        window = self._durations[-ETA_WINDOW:]
        return float(np.mean(window)) * remaining / self.config.workers

    def state(self) -> RunState:
        with self._lock:
            return RunState(
                phase=self._phase,
                completed=len(self._results),
                total=self.plan.n,
                cursor=self._cursor,
                eta_seconds=self._eta_locked(),
            )

    def counted_samples(self) -> list[OutcomeSample]:
        """Outcome samples for ok/warning universes, with plan densities."""
        with self._lock:
            results = list(self._results.values())
        return [
            OutcomeSample(universe_id=r.universe_id, y=r.outcome, g=self._g_by_id[r.universe_id])
            for r in results
            if r.status in COUNTED_STATUSES
        ]

    def messages(self, universe_ids: set[int] | None = None) -> list[AggregatedMessage]:
        with self._lock:
            results = list(self._results.values())
        entries = aggregate_messages(results)
        if universe_ids is None:
            return entries
        filtered = []
        for m in entries:
            ids = tuple(sorted(set(m.universe_ids) & universe_ids))
            if ids:
                filtered.append(
                    AggregatedMessage(m.normalized_text, m.severity, ids)
                )
        return filtered

    def snapshots(self) -> list[ProgressSnapshot]:
        with self._lock:
            return list(self._snapshots)

    def snapshot(self, force: bool = False) -> ProgressSnapshot:
        """Current progress; recomputes bootstrap statistics per the policy.

        Counters are always fresh; the mean/CI and per-decision sensitivity
        are recomputed when forced, or when both the time and completion
        thresholds since the last recomputation have been crossed. Snapshot
        production is serialized and every field derives from one atomic
        copy of the results, so successive snapshots are internally
        consistent and their completed counts never decrease.
        """
        with self._snapshot_lock:
            with self._lock:
                results = dict(self._results)
                completed = len(results)
                recompute = force or (
                    completed - self._last_stats_completed >= self._policy.min_completions
                    and time.monotonic() - self._last_stats_at >= self._policy.min_seconds
                )
                state = RunState(
                    phase=self._phase,
                    completed=completed,
                    total=self.plan.n,
                    cursor=self._cursor,
                    eta_seconds=self._eta_locked(),
                )
                elapsed = (
                    time.monotonic() - self._started_at if self._started_at is not None else 0.0
                )
                if recompute:
                    self._last_stats_at = time.monotonic()
                    self._last_stats_completed = completed
            failed = sum(1 for r in results.values() if r.status not in COUNTED_STATUSES)
            if recompute:
                self._stats_cache = self._compute_stats(results)
            mean, mean_ci, sensitivity = self._stats_cache
            with self._lock:
                snap = ProgressSnapshot(
                    seq=len(self._snapshots),
                    phase=state.phase,
                    completed=state.completed,
                    failed=failed,
                    total=state.total,
                    eta_seconds=state.eta_seconds,
                    mean=mean,
                    mean_ci=mean_ci,
                    sensitivity=sensitivity,
                    elapsed_seconds=elapsed,
                )
                self._snapshots.append(snap)
        if recompute:
            self._append_snapshot(snap)
            self._emit("snapshot", snap.to_doc())
        return snap

    def _compute_stats(self, results: dict[int, UniverseResult]):
        samples = [
            OutcomeSample(universe_id=r.universe_id, y=r.outcome, g=self._g_by_id[r.universe_id])
            for r in results.values()
            if r.status in COUNTED_STATUSES
        ]
        n = self.plan.n
        mean = mean_ci = None
        if samples:
            mean = weighted_mean(samples, n)
            if len(samples) >= 2:
                g_by_id = self._g_by_id
                data = np.array([(s.universe_id, s.y) for s in samples])

                def stat(rows: np.ndarray) -> float:
                    subset = [
                        OutcomeSample(universe_id=int(uid), y=float(y), g=g_by_id[int(uid)])
                        for uid, y in rows
                    ]
                    return weighted_mean(subset, n)

                try:
                    mean_ci = bootstrap_ci_bca(
                        data,
                        stat,
                        n_resamples=self._policy.bootstrap_resamples,
                        seed=self._policy.bootstrap_seed,
                    )
                except (ValueError, ArithmeticError):
                    mean_ci = None
        sensitivity = tuple(
            sensitivity_report(
                self.space,
                self.universes,
                samples,
                method="ad",
                with_ci=self._policy.sensitivity_cis,
                n_resamples=self._policy.bootstrap_resamples,
                seed=self._policy.bootstrap_seed,
            )
        )
        return mean, mean_ci, sensitivity

    def _result_doc(self, result: UniverseResult) -> dict:
        return {
            "universe_id": result.universe_id,
            "status": result.status.value,
            "outcome": result.outcome,
            "quality": result.quality,
            "duration": result.duration,
        }

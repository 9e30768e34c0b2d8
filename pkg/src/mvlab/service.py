"""HTTP surface for the dashboard: control, structure, snapshots, events.

All payloads are JSON; the event stream uses text/event-stream framing with
the event type in ``event:`` and the JSON payload in ``data:``. Handlers read
immutable snapshots from the runner; only POST /api/control mutates state,
serialized through the runner coordinator.
"""

from __future__ import annotations

import asyncio
import json
import queue
from dataclasses import dataclass

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import StreamingResponse

from .model import DecisionSpace
from .runner import COUNTED_STATUSES, IllegalTransitionError, MultiverseRunner

API_VERSION = "1"

SCHEMAS = {
    "space": {
        "name": "str",
        "decisions": [{"name": "str", "options": ["str"], "cardinality": "int",
                       "sensitivity": {"score": "float|null", "ci": "[lo, hi]|null", "defined": "bool"}}],
        "rules": [{"exclude": {"decision": "option"}}],
        "total_universes": "int",
    },
    "state": {"phase": "idle|running|paused|completed", "completed": "int",
              "total": "int", "cursor": "int", "eta_seconds": "float|null"},
    "control": {"action": "start|pause|resume|reset"},
    "progress": [{"seq": "int", "phase": "str", "completed": "int", "failed": "int",
                  "total": "int", "eta_seconds": "float|null", "elapsed_seconds": "float",
                  "mean": "float|null", "mean_ci": "[lo, hi]|null",
                  "sensitivity": [{"decision": "str", "score": "float|null",
                                   "ci": "[lo, hi]|null", "defined": "bool"}]}],
    "universes": [{"universe_id": "int", "status": "str", "outcome": "float|null",
                   "quality": "float|null", "duration": "float", "option": "str (with ?decision=)"}],
    "messages": [{"text": "str", "severity": "error|warning", "count": "int",
                  "universe_ids": ["int"]}],
    "quality": {"observed": ["float"], "predicted": ["float"],
                "quantile_dots": {"observed": ["float"], "predicted": ["float"]}},
    "events": {"framing": "text/event-stream", "types": ["state_changed", "universe_completed", "snapshot"],
               "data": "payload JSON with monotone per-connection seq"},
}


def quantile_dots(values: list[float], buckets: int = 100) -> list[float]:
    """One representative data point per percentile bucket of a distribution.

    Values are bucketed by rank into at most ``buckets`` percentiles; each
    non-empty bucket contributes its middle-ranked member, so the result is a
    deterministic subsample of the input no longer than ``buckets``.
    """
    if not values:
        return []
    ordered = sorted(values)
    n = len(ordered)
    by_bucket: dict[int, list[float]] = {}
    for i, v in enumerate(ordered):
        by_bucket.setdefault(min(buckets - 1, i * buckets // n), []).append(v)
    return [vals[len(vals) // 2] for _, vals in sorted(by_bucket.items())]


class _Subscription:
    """Queue-backed event listener detached from the runner's threads."""

    def __init__(self, runner: MultiverseRunner) -> None:
        self._queue: queue.Queue[tuple[str, dict]] = queue.Queue()
        self._runner = runner
        self._listener = lambda event_type, payload: self._queue.put((event_type, payload))
        runner.add_listener(self._listener)

    def get_nowait(self) -> tuple[str, dict] | None:
        try:
            return self._queue.get_nowait()
        except queue.Empty:
            return None

    def close(self) -> None:
        self._runner.remove_listener(self._listener)


@dataclass
class ServiceSession:
    """Binds one loaded manifest and its runner to the HTTP surface."""

    space: DecisionSpace
    runner: MultiverseRunner


def create_app(session: ServiceSession | None = None, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="multiverse monitor", version=API_VERSION)
    app.state.session = session

    def current() -> ServiceSession:
        if app.state.session is None:
            raise HTTPException(status_code=409, detail="no manifest loaded")
        return app.state.session

    @app.get("/api/version")
    def version() -> dict:
        return {"api_version": API_VERSION, "schemas": SCHEMAS}

    @app.get("/api/space")
    def space_doc() -> dict:
        session = current()
        space = session.space
        latest = None
        for snap in reversed(session.runner.snapshots()):
            if snap.sensitivity:
                latest = {s.decision: s for s in snap.sensitivity}
                break
        decisions = []
        for d in space.decisions:
            score = latest.get(d.name) if latest else None
            decisions.append(
                {
                    "name": d.name,
                    "options": list(d.options),
                    "cardinality": d.cardinality,
                    "sensitivity": {
                        "score": score.score if score and score.defined else None,
                        "ci": list(score.ci.as_tuple()) if score and score.ci else None,
                        "defined": bool(score and score.defined),
                    },
                }
            )
        return {
            "name": space.name,
            "decisions": decisions,
            "rules": [{"exclude": dict(r.bindings)} for r in space.rules],
            "total_universes": len(session.runner.universes),
        }

    @app.get("/api/state")
    def state_doc() -> dict:
        return current().runner.state().to_doc()

    @app.post("/api/control")
    async def control(request: Request) -> dict:
        session = current()
        body = await request.json()
        action = body.get("action") if isinstance(body, dict) else None
        actions = {
            "start": session.runner.start,
            "pause": session.runner.pause,
            "resume": session.runner.resume,
            "reset": session.runner.reset,
        }
        if action not in actions:
            raise HTTPException(status_code=400, detail=f"unknown action {action!r}")
        try:
            state = actions[action]()
        except IllegalTransitionError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return state.to_doc()

    @app.get("/api/progress")
    def progress() -> list[dict]:
        return [snap.to_doc() for snap in current().runner.snapshots()]

    @app.get("/api/universes")
    def universes(decision: str | None = None) -> list[dict]:
        session = current()
        if decision is not None:
            try:
                session.space.decision(decision)
            except KeyError:
                raise HTTPException(status_code=404, detail=f"unknown decision {decision!r}")
        results = session.runner.results()
        by_id = {u.id: u for u in session.runner.universes}
        docs = []
        for uid in sorted(results):
            r = results[uid]
            doc = {
                "universe_id": r.universe_id,
                "status": r.status.value,
                "outcome": r.outcome if r.status in COUNTED_STATUSES else None,
                "quality": r.quality,
                "duration": r.duration,
            }
            if decision is not None:
                doc["option"] = by_id[uid].assignment[decision]
            docs.append(doc)
        return docs

    @app.get("/api/messages")
    def messages(universe_ids: str | None = None) -> list[dict]:
        session = current()
        selection = None
        if universe_ids is not None and universe_ids.strip():
            try:
                selection = {int(x) for x in universe_ids.split(",") if x.strip()}
            except ValueError:
                raise HTTPException(status_code=400, detail="universe_ids must be integers")
        return [m.to_doc() for m in session.runner.messages(selection)]

    @app.get("/api/quality/{universe_id}")
    def quality(universe_id: int) -> dict:
        session = current()
        result = session.runner.results().get(universe_id)
        if result is None or result.observed is None or result.predicted is None:
            raise HTTPException(status_code=404, detail="no quality data for this universe")
        observed = list(result.observed)
        predicted = list(result.predicted)
        return {
            "observed": observed,
            "predicted": predicted,
            "quantile_dots": {
                "observed": quantile_dots(observed),
                "predicted": quantile_dots(predicted),
            },
        }

    @app.get("/api/events")
    async def events(request: Request, max_events: int | None = None) -> StreamingResponse:
        session = current()

        async def stream():
            sub = _Subscription(session.runner)
            seq = 0
            try:
                # synchronous hello so subscribers immediately know the phase
                seq += 1
                state = session.runner.state().to_doc()
                yield _sse_frame("state_changed", state, seq)
                while max_events is None or seq < max_events:
                    if await request.is_disconnected():
                        break
                    item = sub.get_nowait()
                    if item is None:
                        await asyncio.sleep(0.05)
                        continue
                    event_type, payload = item
                    seq += 1
                    yield _sse_frame(event_type, payload, seq)
            finally:
                sub.close()

        return StreamingResponse(stream(), media_type="text/event-stream")

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="dashboard")

    return app


def _sse_frame(event_type: str, payload: dict, seq: int) -> str:
    data = dict(payload)
    data["seq"] = seq
    return f"event: {event_type}\ndata: {json.dumps(data)}\n\n"

#!/usr/bin/env python3
"""Record dashboard test fixtures from a real run of the scripted multiverse.

Captures, via the service's actual HTTP surface, everything the dashboard
replay tests need: the event log one SSE connection would have seen, the
space document before and after the run, universe/message listings, one
quality document, and the offline sensitivity CSV. Deterministic given the
seeds baked in below.
"""

import csv
import io
import json
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))
sys.path.insert(0, str(REPO / "tests"))

from fastapi.testclient import TestClient

from conftest import write_scripted_multiverse
from mvlab.model import enumerate_universes, parse_manifest
from mvlab.runner import MultiverseRunner, RunConfig, SnapshotPolicy
from mvlab.sampling import make_plan
from mvlab.service import ServiceSession, create_app
from mvlab.stats import report_to_csv_rows, sensitivity_report

OUT = REPO / "frontend" / "tests" / "fixtures"
SEED = 12


def main() -> int:
    OUT.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        manifest_path = write_scripted_multiverse(Path(tmp))
        space = parse_manifest(manifest_path.read_text())
        universes = enumerate_universes(space)
        plan = make_plan("round_robin", space, universes, SEED)
        runner = MultiverseRunner(
            space, plan, universes,
            RunConfig(workers=1, timeout=60),
            snapshot_policy=SnapshotPolicy(
                min_seconds=0.0, min_completions=1,
                bootstrap_resamples=200, bootstrap_seed=SEED,
            ),
        )
        client = TestClient(create_app(ServiceSession(space=space, runner=runner)))

        (OUT / "space_initial.json").write_text(
            json.dumps(client.get("/api/space").json(), indent=1))

        events = [{"type": "state_changed",
                   "payload": {**runner.state().to_doc(), "seq": 1}}]

        def listener(event_type: str, payload: dict) -> None:
            events.append({"type": event_type,
                           "payload": {**payload, "seq": len(events) + 1}})

        runner.add_listener(listener)
        runner.start()
        runner.join()
        assert runner.state().phase.value == "completed"

        with open(OUT / "events.jsonl", "w") as fh:
            for event in events:
                fh.write(json.dumps(event) + "\n")

        (OUT / "space_final.json").write_text(
            json.dumps(client.get("/api/space").json(), indent=1))
        (OUT / "universes.json").write_text(
            json.dumps(client.get("/api/universes").json(), indent=1))
        for decision in space.decision_names:
            doc = client.get("/api/universes", params={"decision": decision}).json()
            (OUT / f"universes_{decision}.json").write_text(json.dumps(doc, indent=1))
        (OUT / "messages.json").write_text(
            json.dumps(client.get("/api/messages").json(), indent=1))

        quality_id = next(
            uid for uid, r in sorted(runner.results().items())
            if r.observed is not None and r.predicted is not None
        )
        quality = client.get(f"/api/quality/{quality_id}").json()
        (OUT / "quality.json").write_text(
            json.dumps({"universe_id": quality_id, "doc": quality}, indent=1))

        scores = sensitivity_report(
            space, universes, runner.counted_samples(), method="ad",
            with_ci=True, n_resamples=2000, seed=SEED,
        )
        buf = io.StringIO()
        csv.writer(buf).writerows(report_to_csv_rows(scores))
        (OUT / "sensitivity.csv").write_text(buf.getvalue())

        summary = {
            "events": len(events),
            "snapshots": sum(1 for e in events if e["type"] == "snapshot"),
            "completions": sum(1 for e in events if e["type"] == "universe_completed"),
            "quality_universe": quality_id,
        }
        print(json.dumps(summary, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())

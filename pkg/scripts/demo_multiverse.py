#!/usr/bin/env python3
"""Materialize a demo multiverse for driving the dashboard by hand.

Writes a manifest plus a universe script into --dir. The script sleeps a
little so progress is watchable, plants warnings and errors, and attaches
observed/predicted arrays so the model-quality view has data. Then:

    mvlab serve <dir>/manifest.json --out <dir>/out --workers 4
"""

import argparse
import json
import sys
import textwrap
from pathlib import Path

UNIVERSE = """
    import json
    import math
    import random
    import sys
    import time

    uid = int(sys.argv[1])
    model, outliers, covariates = sys.argv[2], sys.argv[3], sys.argv[4]
    rng = random.Random(uid)
    time.sleep(rng.uniform(0.1, 0.6))

    if model == "poisson" and uid % 7 == 0:
        raise RuntimeError("optimizer diverged")
    if model == "poisson":
        print(f"ConvergenceWarning: max iterations ({100 + uid}) reached",
              file=sys.stderr)

    effect = {"linear": 0.4, "log linear": 0.7, "poisson": 2.6}[model]
    effect += {"keep": 0.0, "drop extreme": 0.15, "winsorize": 0.1}[outliers]
    effect += rng.gauss(0, 0.2)
    observed = [rng.gauss(1.0, 1.0) for _ in range(120)]
    fit_quality = 0.85 if model != "poisson" else 0.35
    predicted = [rng.gauss(1.0, 1.0 if model != "poisson" else 2.2)
                 for _ in range(120)]
    print(json.dumps({
        "outcome": effect,
        "quality": fit_quality,
        "observed": observed,
        "predicted": predicted,
    }))
"""


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dir", type=Path, default=Path("demo-multiverse"))
    args = parser.parse_args()
    args.dir.mkdir(parents=True, exist_ok=True)
    script = args.dir / "universe.py"
    script.write_text(textwrap.dedent(UNIVERSE).strip() + "\n")
    manifest = args.dir / "manifest.json"
    manifest.write_text(json.dumps({
        "name": "demo",
        "decisions": [
            {"name": "model", "options": ["linear", "log linear", "poisson"]},
            {"name": "outliers", "options": ["keep", "drop extreme", "winsorize"]},
            {"name": "covariates", "options": ["none", "age", "age+income", "full"]},
        ],
        "constraints": [
            {"exclude": {"model": "poisson", "covariates": "full"}},
        ],
        "command": f"{sys.executable} {script} {{id}} '{{model}}' '{{outliers}}' '{{covariates}}'",
    }, indent=2))
    print(f"wrote {manifest}")
    print(f"next: mvlab serve {manifest} --out {args.dir / 'out'} --workers 4")
    return 0


if __name__ == "__main__":
    sys.exit(main())

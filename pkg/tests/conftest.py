import json
import sys
import textwrap
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mvlab.model import parse_manifest


TWO_BY_THREE = {
    "name": "tiny",
    "decisions": [
        {"name": "A", "options": ["a1", "a2"]},
        {"name": "B", "options": ["b1", "b2", "b3"]},
    ],
}


@pytest.fixture
def tiny_space():
    return parse_manifest(json.dumps(TWO_BY_THREE))


@pytest.fixture
def tiny_space_excluded():
    doc = dict(TWO_BY_THREE)
    doc["constraints"] = [{"exclude": {"A": "a1", "B": "b1"}}]
    return parse_manifest(json.dumps(doc))


# 36 scripted universes: 3*3*4, outcome dominated by `alpha` (z is +8);
# 3 planted errors (ids 1, 13, 25) and 6 planted warnings (ids = 0 mod 6).
SCRIPTED_ERROR_IDS = frozenset({1, 13, 25})
SCRIPTED_WARNING_IDS = frozenset({0, 6, 12, 18, 24, 30})

SCRIPTED_UNIVERSE_BODY = """
    import json
    import sys

    uid = int(sys.argv[1])
    alpha, beta, gamma = sys.argv[2], sys.argv[3], sys.argv[4]
    if uid in (1, 13, 25):
        raise ValueError("planted failure")
    if uid % 6 == 0:
        print(f"RuntimeWarning: unstable fit in cell {uid}", file=sys.stderr)
    base = {"x": 0.0, "y": 0.5, "z": 8.0}[alpha]
    jitter = 0.1 * "pqr".index(beta) + 0.05 * int(gamma[1])
    observed = [i * 0.1 for i in range(20)]
    predicted = [i * 0.1 + 0.05 for i in range(20)]
    print(json.dumps({
        "outcome": base + jitter,
        "quality": 0.8,
        "observed": observed,
        "predicted": predicted,
    }))
"""


def write_scripted_multiverse(directory: Path) -> Path:
    """Materialize the 36-universe scripted fixture; returns the manifest path."""
    script = directory / "universe.py"
    script.write_text(textwrap.dedent(SCRIPTED_UNIVERSE_BODY).strip() + "\n")
    manifest = directory / "manifest.json"
    manifest.write_text(json.dumps({
        "name": "scripted-e2e",
        "decisions": [
            {"name": "alpha", "options": ["x", "y", "z"]},
            {"name": "beta", "options": ["p", "q", "r"]},
            {"name": "gamma", "options": ["g1", "g2", "g3", "g4"]},
        ],
        "command": f"{sys.executable} {script} {{id}} {{alpha}} {{beta}} {{gamma}}",
    }))
    return manifest


@pytest.fixture
def scripted_manifest(tmp_path):
    return write_scripted_multiverse(tmp_path)

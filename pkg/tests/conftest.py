from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import soundness_violations  # noqa: E402
from ppcs.graph import CommunityResult, read_private_overlays, read_public_graph  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"

# Every nonempty community built during the session, with its view.
PRODUCED: list = []


def load_fixture(name: str):
    g = read_public_graph(FIXTURES / f"{name}_edges.txt", FIXTURES / f"{name}_attrs.txt")
    ov_path = FIXTURES / f"{name}_overlays.txt"
    overlays = read_private_overlays(ov_path, g) if ov_path.exists() else {}
    return g, overlays


@pytest.fixture
def running():
    return load_fixture("running")


@pytest.fixture
def collab():
    return load_fixture("collab")


@pytest.fixture
def layers():
    g, _ = load_fixture("layers")
    return g


@pytest.fixture(autouse=True)
def soundness_guard(monkeypatch):
    """Check every nonempty community any test produces against an independent checker."""
    original = CommunityResult.__dict__["build"].__func__
    seen = []

    def build(cls, view, q, k, members, algorithm, elapsed_ms=0.0):
        res = original(cls, view, q, k, members, algorithm, elapsed_ms)
        if not res.empty:
            seen.append((view, res))
        return res

    monkeypatch.setattr(CommunityResult, "build", classmethod(build))
    yield
    for view, res in seen:
        problems = soundness_violations(view, res, require_attrs=False)
        assert not problems, f"{res.algorithm} q={res.query} k={res.k}: {problems}"
    PRODUCED.extend(seen)

import numpy as np
import pytest

from lexigraph.norms_graph import RelationshipLayer, normalize_adjacency
from lexigraph.observations import LEVELS

RING = RelationshipLayer(
    "ring", tuple(range(6)),
    ((0, 1, 0.8), (0, 5, 0.5), (1, 2, 0.6), (2, 3, 0.9), (3, 4, 0.7), (4, 5, 0.55)),
)


def _rule_step(state, neighbours):
    """Each word not yet full moves up one level when a neighbour is at least understood."""
    out = state.copy()
    triggered = (neighbours @ (state >= 0.6)) > 0
    for i in np.flatnonzero(triggered & (state < 1.0)):
        out[i] = LEVELS[LEVELS.index(state[i]) + 1]
    return out


def tiny_dataset(seed: int = 0):
    """Two 4-step sequences on a 6-node ring, generated by a deterministic neighbour rule.

    Returns ``(normalised adjacency, inputs (2, 3, 6), targets (2, 6))``.
    """
    rng = np.random.default_rng(seed)
    neighbours = (RING.adjacency() - np.eye(RING.n_nodes)) > 0
    seqs = []
    for _ in range(2):
        s = rng.choice([0.0, 0.0, 0.6], RING.n_nodes)
        rows = [s]
        for _ in range(3):
            s = _rule_step(s, neighbours)
            rows.append(s)
        seqs.append(np.stack(rows))
    seqs = np.stack(seqs)
    return normalize_adjacency(RING), seqs[:, :3], seqs[:, 3]


@pytest.fixture
def tiny():
    return tiny_dataset(0)


def random_normalized_adjacency(rng, n):
    a = rng.uniform(0, 1, (n, n))
    a = (a + a.T) / 2
    np.fill_diagonal(a, 1.0)
    d = 1 / np.sqrt(a.sum(axis=1))
    return d[:, None] * a * d[None, :]


# --- acceptance summary ---------------------------------------------------

_criteria: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "ok": True, "seconds": 0.0})
    if report.when == "call":
        entry["seconds"] += report.duration
    if report.failed or (report.when == "call" and report.skipped):
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        e = _criteria[number]
        status = "PASS" if e["ok"] else "FAIL"
        terminalreporter.write_line(f"{status}  criterion {number}: {e['title']} ({e['seconds']:.1f} s)")

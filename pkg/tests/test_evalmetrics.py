import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lexigraph.evalmetrics import (
    PUBLISHED_GROUP_ACCURACY,
    REPORT_ORDER,
    ConfusionCounts,
    MetricsRecord,
    aggregate_candidates,
    binarize,
    confusion,
    confusion_arrays,
    f1_score,
    layer_report,
    metrics,
)
from lexigraph.exceptions import EmptyEvaluationError


@pytest.mark.parametrize("current,score,want", [
    (0.0, 0.9, True), (1.0, 2.0, False), (0.6, 0.65, False), (0.0, 0.3, True), (0.3, 0.6, True),
])
def test_binarize(current, score, want):
    assert binarize(score, current, 0.3) is want


def test_confusion_simple():
    truth = {"a": True, "b": False, "c": True}
    assert confusion(truth, truth) == ConfusionCounts(2, 0, 0, 1)
    c = confusion({w: False for w in "abcd"}, {"a": True, "b": True, "c": True, "d": False})
    assert (c.tp, c.fn) == (0, 3)


def test_confusion_arrays_matches_enumeration():
    rng = np.random.default_rng(3)
    levels = np.array([0.0, 0.3, 0.6, 1.0])
    current = rng.choice(levels, 10)
    nxt = np.maximum(current, rng.choice(levels, 10))
    scores = rng.random(10)
    got = confusion_arrays(scores, current, nxt)
    want = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
    for s, c, n in zip(scores, current, nxt):
        if c >= 1.0:
            continue
        p, a = s - c >= 0.3 - 1e-12, n > c
        want["tp" if p and a else "fp" if p else "fn" if a else "tn"] += 1
    assert got == ConfusionCounts(**want)


def test_metrics_hand_case():
    m = metrics(ConfusionCounts(tp=3, fp=1, fn=2, tn=4))
    assert m.precision == 0.75 and m.recall == 0.6 and m.accuracy == 0.7
    assert m.f1 == pytest.approx(2 / 3)


def test_metrics_undefined_and_empty():
    m = metrics(ConfusionCounts(tp=0, fp=0, fn=2, tn=3))
    assert m.precision is None and m.f1 is None
    assert m.recall == 0.0
    with pytest.raises(EmptyEvaluationError):
        metrics(ConfusionCounts())


def test_published_f1_identity():
    assert f1_score(0.450, 0.513) == pytest.approx(0.479, abs=1e-3)


@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(1, 9))
def test_metrics_scale_invariant(tp, fp, fn, tn, k):
    if tp + fp + fn + tn == 0:
        return
    a = metrics(ConfusionCounts(tp, fp, fn, tn))
    b = metrics(ConfusionCounts(k * tp, k * fp, k * fn, k * tn))
    for field in ("precision", "recall", "f1", "accuracy"):
        x, y = getattr(a, field), getattr(b, field)
        assert (x is None) == (y is None)
        if x is not None:
            assert x == pytest.approx(y)
            assert 0.0 <= x <= 1.0


def _record(name, acc):
    return MetricsRecord(0.5, 0.5, 0.5, acc, name, "optimistic")


def test_report_fourteen_rows():
    md, payload = layer_report([_record(n, 0.7) for n in reversed(REPORT_ORDER)])
    rows = [l for l in md.splitlines() if l.count("|") == 7 and not l.startswith(("| Layer ", "|---"))]
    assert len(rows) == 14
    assert [r["layer"] for r in payload["rows"]] == list(REPORT_ORDER)
    assert set(payload["group_mean_accuracy"]) == {"semantic", "sensorimotor"}


def test_report_flags_published_group_mean():
    recs = [_record("mcrae", 0.740), _record("buchanan", 0.715)]
    _, payload = layer_report(recs, PUBLISHED_GROUP_ACCURACY)
    assert payload["group_mean_accuracy"]["semantic"] == pytest.approx(0.7275)
    assert any("0.729" in n for n in payload["notes"])


def test_report_undefined_cells():
    md, _ = layer_report([MetricsRecord(None, 0.0, None, 0.5, "mcrae")])
    assert "undefined" in md


def test_aggregate_trivial_cases():
    assert aggregate_candidates([["a", "b"], ["a", "c"], ["a"]], 1) == ["a"]
    assert aggregate_candidates([["x", "y", "z"]], 2) == ["x", "y"]
    assert aggregate_candidates([["x"]], 0) == []


def test_aggregate_matches_brute_force():
    lists = [["a", "b", "c", "d"], ["c", "a", "e"], ["b", "e", "a", "c", "d"]]
    words = sorted({w for l in lists for w in l})

    def points(w):
        return sum(len(l) - l.index(w) for l in lists if w in l)

    def votes(w):
        return sum(w in l for l in lists)

    # exhaustive: the winning order is the permutation that is sorted by the tie-break key
    best = None
    for perm in itertools.permutations(words):
        key = [(-points(w), -votes(w), w) for w in perm]
        if key == sorted(key):
            best = list(perm)
    assert aggregate_candidates(lists, len(words)) == best


@given(st.floats(-2, 2), st.floats(0.0, 1.0))
def test_binarize_never_positive_for_full(score, margin):
    assert binarize(score, 1.0, margin) is False


@given(st.integers(1, 40), st.integers(0, 40), st.integers(0, 40), st.integers(0, 40))
def test_f1_is_harmonic_mean(tp, fp, fn, tn):
    m = metrics(ConfusionCounts(tp, fp, fn, tn))
    assert m.f1 == pytest.approx(2 * m.precision * m.recall / (m.precision + m.recall))

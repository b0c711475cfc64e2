"""End-to-end acceptance checks, one marked group per criterion.

Each test asserts its own wall-clock budget. The terminal summary prints one
PASS/FAIL line per criterion.
"""
import time

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import random_normalized_adjacency, tiny_dataset
from lexigraph.baseline import ffnn_loss_and_grads
from lexigraph.cli import main
from lexigraph.evalmetrics import f1_score
from lexigraph.lexicon import Lexicon
from lexigraph.norms_graph import (
    SENSORIMOTOR_DIMENSIONS,
    NormSources,
    SemanticSimilarity,
    SensorimotorScores,
    build_multiplex,
    build_semantic_layer,
    build_sensorimotor_layer,
    normalize_adjacency,
)
from lexigraph.exceptions import EmptyLayerError, InvalidScoreError
from lexigraph.numkernel import finite_diff_grad, relative_error
from lexigraph.observations import (
    LEVELS,
    VocabularySnapshot,
    prepare_sequences,
    read_observations,
    repair_matrix,
    repair_series,
    split_dataset,
)
from lexigraph.pipeline import evaluate_baseline, evaluate_layer, fit_baseline, fit_layer, sequences_to_array
from lexigraph.syndata import SynthConfig, word_keys, write_synthetic
from lexigraph.tgcn import TGCNRegressor, init_params, loss_and_grads

# Published rows: precision, recall, F1, accuracy.
PUBLISHED_ROWS = {
    "2-Layer Feedforward (ANN)": (0.283, 0.854, 0.426, 0.610),
    "McRae": (0.450, 0.513, 0.479, 0.740),
    "Buchanan": (0.403, 0.606, 0.484, 0.715),
    "Haptic (Touch)": (0.419, 0.586, 0.488, 0.730),
    "Gustatory (Taste)": (0.427, 0.598, 0.498, 0.731),
    "Olfactory (Smell)": (0.424, 0.571, 0.487, 0.733),
    "Auditory (Hearing)": (0.465, 0.395, 0.427, 0.750),
    "Visual (Vision)": (0.438, 0.618, 0.513, 0.732),
    "Interoceptive": (0.435, 0.494, 0.462, 0.739),
    "Mouth/Throat": (0.417, 0.637, 0.504, 0.716),
    "Hand/Arm": (0.404, 0.540, 0.462, 0.722),
    "Foot/Leg": (0.428, 0.548, 0.480, 0.733),
    "Head": (0.443, 0.509, 0.474, 0.737),
    "Torso": (0.438, 0.537, 0.483, 0.741),
}


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.1f} s, budget {self.seconds} s"


# --- 1 -----------------------------------------------------------------------

@pytest.mark.criterion(1, "F1 recomputed from published precision/recall")
def test_published_f1_identity():
    with Budget(1):
        assert len(PUBLISHED_ROWS) == 14
        for name, (p, r, f1, _) in PUBLISHED_ROWS.items():
            assert abs(f1_score(p, r) - f1) <= 0.002, name


# --- 2 -----------------------------------------------------------------------

def _max_relative_error(loss_fn, params):
    _, grads = loss_fn(params)
    worst = 0.0
    for name in params:
        def f(value, name=name):
            q = dict(params)
            q[name] = value
            return loss_fn(q)[0]
        worst = max(worst, relative_error(grads[name], finite_diff_grad(f, params[name])))
    return worst


@pytest.mark.criterion(2, "analytic gradients match central differences")
def test_tgcn_gradient_check():
    with Budget(10):
        rng = np.random.default_rng(7)
        adj = random_normalized_adjacency(rng, 4)
        params = init_params(1, 4, 5, rng)
        for k in params:
            params[k] = params[k] + rng.normal(0, 0.3, params[k].shape)
        X = rng.uniform(0, 1, (2, 3, 4, 1))
        y = rng.uniform(0, 1, (2, 4))
        assert _max_relative_error(lambda p: loss_and_grads(p, adj, X, y), params) < 1e-4


@pytest.mark.criterion(2, "analytic gradients match central differences")
def test_ffnn_gradient_check():
    with Budget(10):
        rng = np.random.default_rng(8)
        params = {"W1": rng.normal(size=(4, 8)), "b1": rng.normal(size=8),
                  "W2": rng.normal(size=(8, 4)), "b2": rng.normal(size=4)}
        X = rng.choice(LEVELS, (3, 4))
        Y = rng.uniform(0, 1, (3, 4))
        assert _max_relative_error(lambda p: ffnn_loss_and_grads(p, X, Y), params) < 1e-5


# --- 3 -----------------------------------------------------------------------

def _brute_force_normalize(adj):
    n = adj.shape[0]
    deg = [sum(adj[i, j] for j in range(n)) for i in range(n)]
    return np.array([[adj[i, j] / (deg[i] ** 0.5 * deg[j] ** 0.5) for j in range(n)] for i in range(n)])


def _check_layer(layer):
    adj = layer.adjacency()
    n = layer.n_nodes
    assert np.array_equal(adj, adj.T)
    assert np.all(np.diag(adj) == 1.0)
    off = adj[~np.eye(n, dtype=bool)]
    assert np.all((off == 0.0) | (off >= 0.5))
    assert all(w >= 0.5 for _, _, w in layer.edges)
    assert len(layer.edges) <= 2000
    assert len({(a, b) for a, b, _ in layer.edges}) == len(layer.edges)
    if n <= 10:
        np.testing.assert_allclose(normalize_adjacency(layer), _brute_force_normalize(adj),
                                   rtol=0, atol=1e-12)


score_tables = st.integers(2, 90).flatmap(lambda n: st.tuples(
    st.just(n),
    st.lists(st.lists(st.floats(0.0, 5.0), min_size=11, max_size=11), min_size=n, max_size=n),
))


@pytest.mark.criterion(3, "graph construction invariants")
@settings(max_examples=120, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(score_tables, st.lists(st.floats(0.0, 1.0), min_size=1, max_size=60), st.integers(0, 2**31))
def test_graph_invariants(table, cosines, seed):
    n, rows = table
    scores = [SensorimotorScores(i, tuple(r)) for i, r in enumerate(rows)]
    for dim in SENSORIMOTOR_DIMENSIONS:
        try:
            _check_layer(build_sensorimotor_layer(scores, dim))
        except EmptyLayerError:
            pass
    rng = np.random.default_rng(seed)
    sims = [SemanticSimilarity(int(a), int(b), c)
            for (a, b), c in zip(rng.integers(0, 12, (len(cosines), 2)), cosines)]
    try:
        _check_layer(build_semantic_layer(sims, "mcrae"))
    except (EmptyLayerError, InvalidScoreError):
        # random duplicate pairs may carry conflicting cosines
        pass


@pytest.mark.criterion(3, "graph construction invariants")
def test_edge_cap_binds_on_dense_layer():
    with Budget(30):
        scores = [SensorimotorScores(i, (4.5,) * 11) for i in range(80)]
        layer = build_sensorimotor_layer(scores, "vision")
        assert len(layer.edges) == 2000
        _check_layer(layer)


# --- 4 -----------------------------------------------------------------------

series_arrays = st.integers(1, 8).flatmap(lambda t: st.integers(1, 6).flatmap(
    lambda w: st.lists(st.lists(st.sampled_from(LEVELS), min_size=w, max_size=w),
                       min_size=t, max_size=t)))


@pytest.mark.criterion(4, "repair properties")
@settings(max_examples=500, deadline=None)
@given(series_arrays)
def test_repair_properties(rows):
    values = np.array(rows, dtype=float)
    opt = repair_matrix(values, "optimistic")
    pes = repair_matrix(values, "pessimistic")
    for fixed, mode in ((opt, "optimistic"), (pes, "pessimistic")):
        assert np.all(np.diff(fixed, axis=0) >= 0)
        assert np.array_equal(repair_matrix(fixed, mode), fixed)
        assert set(np.unique(fixed)) <= set(LEVELS)
    assert np.all(opt >= pes)
    snaps = [VocabularySnapshot.from_vector("k", 10 + t, row) for t, row in enumerate(values)]
    via_series = np.stack([s.vector(values.shape[1]) for s in repair_series(snaps, "optimistic")])
    assert np.array_equal(via_series, opt)


# --- 5 -----------------------------------------------------------------------

@pytest.mark.criterion(5, "T-GCN overfits the tiny synthetic set")
def test_overfit_oracle():
    with Budget(60):
        for seed in range(3):
            adj, X, y = tiny_dataset(seed)
            runs = [TGCNRegressor(adjacency=adj, epochs=500, seed=seed).fit(X, y) for _ in range(2)]
            h = runs[0].history_.train_mae
            assert h[-1] <= 0.1 * h[0], f"seed {seed}: {h[0]:.4f} -> {h[-1]:.4f}"
            assert runs[0].history_.as_dict() == runs[1].history_.as_dict()


# --- 6 -----------------------------------------------------------------------

DISCRIMINATION_EPOCHS = 300
DISCRIMINATION_LR = 3e-3


def _discrimination_gap(tmp_path, seed):
    cfg = SynthConfig(n_children=200, vocab_size=40, boost=0.4, planted_layer="mcrae", seed=seed)
    write_synthetic(tmp_path, cfg)
    lexicon = Lexicon.from_keys(word_keys(cfg.vocab_size))
    layer = build_multiplex(NormSources.discover(None, tmp_path / "semantic"), lexicon)["mcrae"]
    series = read_observations(tmp_path / "observations.csv", lexicon)
    parts = split_dataset(prepare_sequences(series, "optimistic", 4), (0.8, 0.0, 0.2), seed)
    train = sequences_to_array(parts["train"], len(lexicon))
    test = sequences_to_array(parts["test"], len(lexicon))
    model = fit_layer(layer, train, epochs=DISCRIMINATION_EPOCHS, learning_rate=DISCRIMINATION_LR, seed=seed)
    baseline = fit_baseline(train, epochs=DISCRIMINATION_EPOCHS, seed=seed)
    tgcn_acc = evaluate_layer(model, test).accuracy
    ffnn_acc = evaluate_baseline(baseline, test, 3).accuracy
    return tgcn_acc, ffnn_acc


@pytest.mark.slow
@pytest.mark.criterion(6, "planted-layer T-GCN beats the relationship-blind baseline")
def test_synthetic_discrimination(tmp_path):
    with Budget(600):
        gaps = []
        for seed in range(5):
            tgcn_acc, ffnn_acc = _discrimination_gap(tmp_path / f"s{seed}", seed)
            print(f"seed {seed}: tgcn {tgcn_acc:.4f} ffnn {ffnn_acc:.4f}")
            gaps.append(tgcn_acc - ffnn_acc)
        mean_gap = float(np.mean(gaps))
        print(f"mean accuracy gap {mean_gap:.4f}")
        assert mean_gap >= 0.03


# --- 7 -----------------------------------------------------------------------

def _brute_force_window_count(lengths, window=4):
    total = 0
    for n in lengths:
        total += sum(1 for start in range(n) if start + window <= n)
    return total


@pytest.mark.criterion(7, "windowing arithmetic")
def test_windowing_arithmetic(caplog):
    with Budget(5):
        rng = np.random.default_rng(0)
        for _ in range(100):
            lengths = rng.integers(1, 11, rng.integers(1, 15)).tolist()
            series = {f"c{i}": [VocabularySnapshot(f"c{i}", 12.0 + t) for t in range(n)]
                      for i, n in enumerate(lengths)}
            got = len(prepare_sequences(series, "optimistic", 4))
            assert got == sum(max(0, n - 3) for n in lengths) == _brute_force_window_count(lengths)


# --- 8 -----------------------------------------------------------------------

DETERMINISM_EPOCHS = 10


def _run_pipeline(root):
    data, run = root / "data", root / "run"
    assert main(["synth", "--out", str(data), "--seed", "4"]) == 0
    flags = ["--norms-dir", str(data / "norms"), "--semantic-dir", str(data / "semantic"),
             "--observations", str(data / "observations.csv"), "--seed", "4"]
    assert main(["train", *flags, "--epochs", str(DETERMINISM_EPOCHS), "--out", str(run)]) == 0
    assert main(["evaluate", "--model-dir", str(run)]) == 0
    return ((run / "evaluation" / "report.md").read_bytes(),
            (run / "evaluation" / "report.json").read_bytes())


@pytest.mark.slow
@pytest.mark.criterion(8, "synth, train and evaluate are byte-for-byte reproducible")
def test_end_to_end_determinism(tmp_path, capsys):
    with Budget(600):
        first = _run_pipeline(tmp_path / "a")
        second = _run_pipeline(tmp_path / "b")
        assert first == second
        rows = [l for l in first[0].decode().splitlines()
                if l.count("|") == 7 and not l.startswith(("| Layer ", "|---"))]
        assert len(rows) == 14

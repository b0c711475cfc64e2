import itertools

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lexigraph.exceptions import EmptyLayerError, FileFormatError, InvalidScoreError
from lexigraph.lexicon import Lexicon
from lexigraph.norms_graph import (
    SENSORIMOTOR_DIMENSIONS,
    NormSources,
    RelationshipLayer,
    SemanticSimilarity,
    SensorimotorScores,
    build_multiplex,
    build_semantic_layer,
    build_sensorimotor_layer,
    candidate_pair_count,
    layer_stats,
    normalize_adjacency,
    sensorimotor_weight,
    write_semantic_csv,
    write_sensorimotor_csv,
)

SMELL = SENSORIMOTOR_DIMENSIONS.index("smell")
score = st.floats(0.0, 5.0)


def scores_on(dim_index, values):
    out = []
    for wid, v in enumerate(values):
        row = [0.0] * len(SENSORIMOTOR_DIMENSIONS)
        row[dim_index] = v
        out.append(SensorimotorScores(wid, tuple(row)))
    return out


def test_weight_examples():
    assert sensorimotor_weight(4.5, 4.0, 5.0) == pytest.approx(0.72)
    assert sensorimotor_weight(0.0, 3.3) == 0.0
    assert sensorimotor_weight(5.0, 5.0) == 1.0


def test_weight_out_of_range():
    with pytest.raises(InvalidScoreError):
        sensorimotor_weight(5.5, 1.0)
    with pytest.raises(InvalidScoreError):
        sensorimotor_weight(-0.1, 1.0)


def test_olfactory_orange_lemon_table():
    # ids: 0 orange, 1 lemon, 2 table
    layer = build_sensorimotor_layer(scores_on(SMELL, [4.8, 4.6, 0.4]), "smell")
    assert layer.nodes == (0, 1)
    assert len(layer.edges) == 1
    a, b, w = layer.edges[0]
    assert (a, b) == (0, 1)
    assert w == pytest.approx(4.8 * 4.6 / 25)


def test_all_pruned_is_empty_layer():
    with pytest.raises(EmptyLayerError):
        build_sensorimotor_layer(scores_on(SMELL, [1.0, 2.0, 0.5]), "smell")
    with pytest.raises(EmptyLayerError):
        build_sensorimotor_layer([], "smell")


def test_edge_cap_keeps_heaviest():
    values = [5.0, 4.5, 4.0]
    layer = build_sensorimotor_layer(scores_on(SMELL, values), "smell", edge_cap=2)
    weights = {(a, b): a_v * b_v / 25 for (a, a_v), (b, b_v)
               in itertools.combinations(enumerate(values), 2)}
    expected = sorted(weights, key=weights.get, reverse=True)[:2]
    assert sorted((a, b) for a, b, _ in layer.edges) == sorted(expected)


def test_semantic_passthrough_boundary_and_dedupe():
    layer = build_semantic_layer([SemanticSimilarity(0, 1, 0.8)], "mcrae")
    assert layer.edges == ((0, 1, 0.8),)
    layer = build_semantic_layer([SemanticSimilarity(2, 3, 0.5)])
    assert layer.edges == ((2, 3, 0.5),)
    layer = build_semantic_layer([SemanticSimilarity(0, 1, 0.7), SemanticSimilarity(1, 0, 0.7)])
    assert layer.edges == ((0, 1, 0.7),)


def test_semantic_conflicting_duplicates():
    with pytest.raises(InvalidScoreError):
        build_semantic_layer([SemanticSimilarity(0, 1, 0.7), SemanticSimilarity(1, 0, 0.6)])


def test_cosine_range():
    with pytest.raises(InvalidScoreError):
        SemanticSimilarity(0, 1, 1.2)


def test_normalize_examples():
    single = RelationshipLayer("x", (0,), ())
    npt.assert_array_equal(normalize_adjacency(single), [[1.0]])
    pair = RelationshipLayer("x", (0, 1), ((0, 1, 1.0),))
    npt.assert_allclose(normalize_adjacency(pair), np.full((2, 2), 0.5), atol=1e-15)


def test_normalize_empty_layer():
    with pytest.raises(EmptyLayerError):
        normalize_adjacency(RelationshipLayer("x", (), ()))


def test_pair_count_and_stats():
    assert candidate_pair_count(390) == 75855
    layer = build_sensorimotor_layer(scores_on(SMELL, [4.0] * 5), "smell", edge_cap=3)
    stats = layer_stats(layer)
    assert stats["candidate_pairs"] == 10
    assert stats["edges"] == 3 <= layer.edge_cap
    assert sum(stats["histogram"]["counts"]) == 3
    assert layer_stats(None)["edges"] == 0


def test_layer_csv_roundtrip(tmp_path):
    lex = Lexicon.from_keys(["a", "b", "c"])
    layer = build_semantic_layer([SemanticSimilarity(0, 1, 0.61), SemanticSimilarity(1, 2, 0.9)], "mcrae")
    layer.to_csv(tmp_path / "mcrae.csv", lex)
    assert RelationshipLayer.from_csv(tmp_path / "mcrae.csv", lex) == layer


def test_build_multiplex_from_files(tmp_path):
    (tmp_path / "norms").mkdir()
    (tmp_path / "sem").mkdir()
    write_sensorimotor_csv(tmp_path / "norms" / "lancaster.csv",
                           {"orange": [0.0] * 2 + [4.8] + [0.0] * 8,
                            "lemon": [0.0] * 2 + [4.6] + [0.0] * 8,
                            "table": [4.0] * 2 + [0.4] + [4.0] * 8})
    write_semantic_csv(tmp_path / "sem" / "mcrae.csv", [("lock", "key", 0.8), ("lock", "table", 0.1)])
    lex = Lexicon.from_keys(["key", "lemon", "lock", "orange", "table"])
    layers = build_multiplex(NormSources.discover(tmp_path / "norms", tmp_path / "sem"), lex)
    assert list(layers)[0] == "mcrae"
    assert layers["smell"].nodes == (lex.id_of("lemon"), lex.id_of("orange"))
    # table is the only strong word on the other dimensions, so those layers have no edges
    assert "touch" not in layers


def test_discover_missing_dir(tmp_path):
    with pytest.raises(FileFormatError) as exc:
        NormSources.discover(tmp_path / "missing")
    assert "missing" in str(exc.value)



@given(score, score, score)
def test_weight_symmetric_and_monotone(a, b, c):
    assert sensorimotor_weight(a, b) == sensorimotor_weight(b, a)
    lo, hi = sorted((b, c))
    assert sensorimotor_weight(a, lo) <= sensorimotor_weight(a, hi)
    assert 0.0 <= sensorimotor_weight(a, b) <= 1.0

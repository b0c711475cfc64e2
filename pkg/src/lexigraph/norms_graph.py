"""Thresholded, capped, undirected relationship layers built from word norms."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .exceptions import (
    AmbiguityError,
    EmptyLayerError,
    FileFormatError,
    InvalidInputError,
    InvalidScoreError,
    LexigraphError,
)
from .lexicon import Lexicon, disambiguate, normalize_word, parse_key

logger = logging.getLogger(__name__)

SENSORIMOTOR_DIMENSIONS = (
    "touch", "taste", "smell", "hearing", "vision", "interoception",
    "mouth_throat", "hand_arm", "foot_leg", "head", "torso",
)
SEMANTIC_LAYERS = ("mcrae", "buchanan")
LAYER_NAMES = SEMANTIC_LAYERS + SENSORIMOTOR_DIMENSIONS

DEFAULT_THRESHOLD = 0.5
DEFAULT_EDGE_CAP = 2000
DEFAULT_SCALE_MAX = 5.0


@dataclass(frozen=True)
class SensorimotorScores:
    word_id: int
    scores: tuple[float, ...]
    scale_max: float = DEFAULT_SCALE_MAX

    def __post_init__(self):
        if len(self.scores) != len(SENSORIMOTOR_DIMENSIONS):
            raise InvalidScoreError(f"expected {len(SENSORIMOTOR_DIMENSIONS)} scores, got {len(self.scores)}")
        for s in self.scores:
            if not 0.0 <= s <= self.scale_max:
                raise InvalidScoreError(f"score {s} outside [0, {self.scale_max}] for word {self.word_id}")


@dataclass(frozen=True)
class SemanticSimilarity:
    word_a: int
    word_b: int
    cosine: float

    def __post_init__(self):
        if not (0.0 <= self.cosine <= 1.0):
            raise InvalidScoreError(f"cosine {self.cosine} outside [0, 1]")


@dataclass(frozen=True)
class RelationshipLayer:
    """One weighted undirected graph ``G = (V, E)`` over lexicon ids.

    ``edges`` holds each off-diagonal pair once with ``a < b``; every node
    additionally carries an implicit self-loop of weight 1.0.
    """

    layer_name: str
    nodes: tuple[int, ...]
    edges: tuple[tuple[int, int, float], ...]
    threshold: float = DEFAULT_THRESHOLD
    edge_cap: int = DEFAULT_EDGE_CAP
    n_candidate_pairs: int = 0

    SELF_LOOP_WEIGHT = 1.0

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def edge_list(self, self_loops: bool = True) -> list[tuple[int, int, float]]:
        out = list(self.edges)
        if self_loops:
            out.extend((n, n, self.SELF_LOOP_WEIGHT) for n in self.nodes)
        return out

    def position(self) -> dict[int, int]:
        return {n: i for i, n in enumerate(self.nodes)}

    def adjacency(self) -> np.ndarray:
        """Dense weighted adjacency including self-loops, in ``nodes`` order."""
        pos = self.position()
        a = np.eye(self.n_nodes) * self.SELF_LOOP_WEIGHT
        for u, v, w in self.edges:
            i, j = pos[u], pos[v]
            a[i, j] = a[j, i] = w
        return a

    def to_csv(self, path, lexicon: Lexicon) -> None:
        path = Path(path)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["word_a", "word_b", "weight"])
            for u, v, w in self.edges:
                writer.writerow([lexicon[u].key, lexicon[v].key, repr(w)])
        sidecar = {
            "layer_name": self.layer_name,
            "threshold": self.threshold,
            "edge_cap": self.edge_cap,
            "node_count": self.n_nodes,
            "edge_count": len(self.edges),
            "candidate_pairs": self.n_candidate_pairs,
        }
        path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_csv(cls, path, lexicon: Lexicon) -> "RelationshipLayer":
        path = Path(path)
        meta = json.loads(path.with_suffix(".json").read_text())
        edges = []
        with open(path, encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                a, b = lexicon.id_of(row["word_a"]), lexicon.id_of(row["word_b"])
                edges.append((min(a, b), max(a, b), float(row["weight"])))
        edges.sort(key=lambda e: (e[0], e[1]))
        nodes = tuple(sorted({e[0] for e in edges} | {e[1] for e in edges}))
        return cls(meta["layer_name"], nodes, tuple(edges), meta["threshold"], meta["edge_cap"],
                   meta.get("candidate_pairs", 0))


def sensorimotor_weight(score_a: float, score_b: float, scale_max: float = DEFAULT_SCALE_MAX) -> float:
    """Normalised product of two scores on one sensorimotor dimension."""
    if scale_max <= 0:
        raise InvalidScoreError("scale_max must be positive")
    for s in (score_a, score_b):
        if not 0.0 <= s <= scale_max:
            raise InvalidScoreError(f"score {s} outside [0, {scale_max}]")
    return (score_a * score_b) / (scale_max * scale_max)


def _select_edges(candidates, threshold: float, edge_cap: int):
    """Keep pairs at or above ``threshold``, then the ``edge_cap`` heaviest."""
    kept = [(a, b, w) for a, b, w in candidates if w >= threshold]
    if len(kept) > edge_cap:
        kept.sort(key=lambda e: (-e[2], e[0], e[1]))
        kept = kept[:edge_cap]
    kept.sort(key=lambda e: (e[0], e[1]))
    return tuple(kept)


def _finish_layer(name, edges, threshold, edge_cap, n_pairs):
    if not edges:
        raise EmptyLayerError(f"layer {name!r} has no edges at threshold {threshold}")
    nodes = tuple(sorted({e[0] for e in edges} | {e[1] for e in edges}))
    return RelationshipLayer(name, nodes, edges, threshold, edge_cap, n_pairs)


def _check_params(threshold, edge_cap):
    if not 0.0 < threshold < 1.0:
        raise InvalidScoreError(f"threshold must lie in (0, 1), got {threshold}")
    if edge_cap < 0:
        raise InvalidScoreError("edge_cap must be non-negative")


def build_sensorimotor_layer(scores: Iterable[SensorimotorScores], dimension: str,
                             threshold: float = DEFAULT_THRESHOLD,
                             edge_cap: int = DEFAULT_EDGE_CAP) -> RelationshipLayer:
    _check_params(threshold, edge_cap)
    try:
        col = SENSORIMOTOR_DIMENSIONS.index(dimension)
    except ValueError:
        raise InvalidScoreError(f"unknown sensorimotor dimension {dimension!r}") from None
    rows = sorted(scores, key=lambda s: s.word_id)
    if not rows:
        raise EmptyLayerError(f"no scores supplied for layer {dimension!r}")
    ids = np.array([r.word_id for r in rows])
    if len(set(ids.tolist())) != len(ids):
        raise InvalidScoreError(f"duplicate word ids in scores for layer {dimension!r}")
    scale = np.array([r.scale_max for r in rows])
    vals = np.array([r.scores[col] for r in rows])
    weights = np.outer(vals, vals) / np.outer(scale, scale)
    iu, ju = np.triu_indices(len(ids), k=1)
    w = weights[iu, ju]
    # vectorised prefilter; exact selection happens in _select_edges
    mask = w >= threshold
    candidates = zip(ids[iu[mask]].tolist(), ids[ju[mask]].tolist(), w[mask].tolist())
    edges = _select_edges(candidates, threshold, edge_cap)
    return _finish_layer(dimension, edges, threshold, edge_cap, len(iu))


def build_semantic_layer(sims: Iterable[SemanticSimilarity], name: str = "semantic",
                         threshold: float = DEFAULT_THRESHOLD,
                         edge_cap: int = DEFAULT_EDGE_CAP) -> RelationshipLayer:
    _check_params(threshold, edge_cap)
    pairs: dict[tuple[int, int], float] = {}
    for s in sims:
        if s.word_a == s.word_b:
            continue
        key = (min(s.word_a, s.word_b), max(s.word_a, s.word_b))
        prev = pairs.get(key)
        if prev is not None and prev != s.cosine:
            raise InvalidScoreError(f"asymmetric similarity for pair {key}: {prev} vs {s.cosine}")
        pairs[key] = s.cosine
    if not pairs:
        raise EmptyLayerError(f"no similarities supplied for layer {name!r}")
    edges = _select_edges(((a, b, w) for (a, b), w in pairs.items()), threshold, edge_cap)
    return _finish_layer(name, edges, threshold, edge_cap, len(pairs))


def normalize_adjacency(layer: RelationshipLayer) -> np.ndarray:
    """Symmetric normalisation ``D^-1/2 A D^-1/2`` of the self-looped adjacency."""
    if layer.n_nodes == 0:
        raise EmptyLayerError(f"layer {layer.layer_name!r} has no nodes")
    a = layer.adjacency()
    deg = a.sum(axis=1)
    if np.any(deg <= 0):
        raise LexigraphError("internal invariant violated: zero degree in a self-looped layer")
    d = 1.0 / np.sqrt(deg)
    return d[:, None] * a * d[None, :]


def layer_stats(layer: Optional[RelationshipLayer], bins: int = 10) -> dict:
    if layer is None or layer.n_nodes == 0:
        return {"layer_name": getattr(layer, "layer_name", ""), "nodes": 0, "edges": 0,
                "candidate_pairs": 0, "histogram": {"edges": [], "counts": []}}
    w = np.array([e[2] for e in layer.edges])
    counts, edges = np.histogram(w, bins=bins, range=(layer.threshold, 1.0))
    return {
        "layer_name": layer.layer_name,
        "nodes": layer.n_nodes,
        "edges": len(layer.edges),
        "candidate_pairs": layer.n_candidate_pairs,
        "histogram": {"edges": edges.tolist(), "counts": counts.tolist()},
    }


def candidate_pair_count(n_words: int) -> int:
    return n_words * (n_words - 1) // 2


# --- file formats ---------------------------------------------------------

def _resolve(cell, lexicon, aliases, homographs, path, lineno):
    surface, label = parse_key(cell)
    try:
        if aliases is not None:
            surface = normalize_word(surface, aliases)
        key = disambiguate(surface.strip().lower(), label, homographs or {})
        return lexicon.id_of(key)
    except (AmbiguityError, InvalidInputError) as exc:
        raise FileFormatError(path, str(exc), lineno) from exc


def read_sensorimotor_csv(path, lexicon: Lexicon, aliases=None, homographs=None,
                          scale_max: float = DEFAULT_SCALE_MAX) -> list[SensorimotorScores]:
    expected = ["word", *SENSORIMOTOR_DIMENSIONS]
    out = []
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise FileFormatError(path, str(exc)) from exc
    with fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != expected:
            raise FileFormatError(path, f"expected header {','.join(expected)}", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise FileFormatError(path, f"expected {len(expected)} fields, got {len(row)}", lineno)
            wid = _resolve(row[0], lexicon, aliases, homographs, path, lineno)
            try:
                vals = tuple(float(x) for x in row[1:])
                out.append(SensorimotorScores(wid, vals, scale_max))
            except (ValueError, InvalidScoreError) as exc:
                raise FileFormatError(path, str(exc), lineno) from exc
    return out


def read_semantic_csv(path, lexicon: Lexicon, aliases=None, homographs=None) -> list[SemanticSimilarity]:
    out = []
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise FileFormatError(path, str(exc)) from exc
    with fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != ["word_a", "word_b", "cosine"]:
            raise FileFormatError(path, "expected header word_a,word_b,cosine", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise FileFormatError(path, f"expected 3 fields, got {len(row)}", lineno)
            a = _resolve(row[0], lexicon, aliases, homographs, path, lineno)
            b = _resolve(row[1], lexicon, aliases, homographs, path, lineno)
            try:
                out.append(SemanticSimilarity(a, b, float(row[2])))
            except (ValueError, InvalidScoreError) as exc:
                raise FileFormatError(path, str(exc), lineno) from exc
    return out


def write_sensorimotor_csv(path, rows: Mapping[str, Sequence[float]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["word", *SENSORIMOTOR_DIMENSIONS])
        for word in sorted(rows):
            writer.writerow([word, *(f"{v:.4f}" for v in rows[word])])


def write_semantic_csv(path, triples: Iterable[tuple[str, str, float]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["word_a", "word_b", "cosine"])
        for a, b, c in triples:
            writer.writerow([a, b, f"{c:.4f}"])


@dataclass
class NormSources:
    """Locations of the norm files for one multiplex build."""

    sensorimotor: list[Path] = field(default_factory=list)
    semantic: dict[str, Path] = field(default_factory=dict)

    @classmethod
    def discover(cls, norms_dir=None, semantic_dir=None) -> "NormSources":
        src = cls()
        if norms_dir is not None:
            d = Path(norms_dir)
            if not d.is_dir():
                raise FileFormatError(d, "norms directory does not exist")
            src.sensorimotor = sorted(d.glob("*.csv"))
            if not src.sensorimotor:
                raise FileFormatError(d, "no sensorimotor CSV files found")
        if semantic_dir is not None:
            d = Path(semantic_dir)
            if not d.is_dir():
                raise FileFormatError(d, "semantic directory does not exist")
            src.semantic = {p.stem.lower(): p for p in sorted(d.glob("*.csv"))}
        return src

    @property
    def files(self) -> list[Path]:
        return list(self.sensorimotor) + list(self.semantic.values())


def build_multiplex(sources: NormSources, lexicon: Lexicon, threshold: float = DEFAULT_THRESHOLD,
                    edge_cap: int = DEFAULT_EDGE_CAP, aliases=None, homographs=None,
                    scale_max: float = DEFAULT_SCALE_MAX) -> dict[str, RelationshipLayer]:
    """Build every available layer; layers whose edges are all pruned are skipped."""
    layers: dict[str, RelationshipLayer] = {}
    for name, path in sources.semantic.items():
        sims = read_semantic_csv(path, lexicon, aliases, homographs)
        try:
            layers[name] = build_semantic_layer(sims, name, threshold, edge_cap)
        except EmptyLayerError as exc:
            logger.warning("skipping layer: %s", exc)
    if sources.sensorimotor:
        merged: dict[int, SensorimotorScores] = {}
        for path in sources.sensorimotor:
            for s in read_sensorimotor_csv(path, lexicon, aliases, homographs, scale_max):
                merged[s.word_id] = s
        scores = list(merged.values())
        for dim in SENSORIMOTOR_DIMENSIONS:
            try:
                layers[dim] = build_sensorimotor_layer(scores, dim, threshold, edge_cap)
            except EmptyLayerError as exc:
                logger.warning("skipping layer: %s", exc)
    order = {n: i for i, n in enumerate(LAYER_NAMES)}
    return dict(sorted(layers.items(), key=lambda kv: (order.get(kv[0], math.inf), kv[0])))

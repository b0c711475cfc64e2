"""Seeded synthetic vocabulary trajectories with a planted relational driver.

Each unknown word steps one level up the ladder none -> understands -> full
with probability ``base + boost * f``, where ``f`` is the weight-averaged
encoded knowledge of the word's neighbours in the planted layer.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .exceptions import InvalidInputError
from .lexicon import Lexicon
from .norms_graph import (
    SEMANTIC_LAYERS,
    SENSORIMOTOR_DIMENSIONS,
    NormSources,
    RelationshipLayer,
    build_multiplex,
    write_semantic_csv,
    write_sensorimotor_csv,
)
from .observations import VocabularySnapshot, write_observations

LADDER = (0.0, 0.6, 1.0)


@dataclass(frozen=True)
class SynthConfig:
    n_children: int = 200
    n_observations: int = 5
    vocab_size: int = 40
    planted_layer: str = "mcrae"
    boost: float = 0.4
    base: float = 0.25
    initial_known: float = 0.2
    seed: int = 0
    start_age: float = 12.0
    age_step: float = 2.0

    def validate(self) -> None:
        for name in ("n_children", "n_observations", "vocab_size"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"{name} must be positive")
        for name in ("boost", "base", "initial_known"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidInputError(f"{name} must lie in [0, 1], got {v}")
        if self.start_age <= 0 or self.age_step <= 0:
            raise InvalidInputError("ages must be positive")


def word_keys(vocab_size: int) -> list[str]:
    width = max(2, len(str(vocab_size - 1)))
    return [f"w{i:0{width}d}" for i in range(vocab_size)]


def _neighbour_weights(layer: RelationshipLayer, n_words: int) -> np.ndarray:
    """Off-diagonal weight matrix of ``layer`` over the full lexicon index."""
    W = np.zeros((n_words, n_words))
    for a, b, w in layer.edges:
        if a >= n_words or b >= n_words:
            raise InvalidInputError("planted layer references words outside the vocabulary")
        W[a, b] = W[b, a] = w
    return W


def step_probabilities(W: np.ndarray, state: np.ndarray, base: float, boost: float) -> np.ndarray:
    deg = W.sum(axis=1)
    frac = np.divide(W @ state, deg, out=np.zeros_like(deg), where=deg > 0)
    return np.clip(base + boost * frac, 0.0, 1.0)


def _step_up(state: np.ndarray, up: np.ndarray) -> np.ndarray:
    out = state.copy()
    out[up & (state == 0.0)] = LADDER[1]
    out[up & (state == LADDER[1])] = LADDER[2]
    return out


def generate(config: SynthConfig, layers) -> dict[str, list[VocabularySnapshot]]:
    """Per-child age-ordered snapshots over word ids ``0 .. vocab_size - 1``."""
    config.validate()
    by_name = layers if isinstance(layers, Mapping) else {l.layer_name: l for l in layers}
    if config.planted_layer not in by_name:
        raise InvalidInputError(f"planted layer {config.planted_layer!r} not among the supplied layers")
    V = config.vocab_size
    W = _neighbour_weights(by_name[config.planted_layer], V)
    rng = np.random.default_rng(config.seed)
    width = len(str(config.n_children - 1))
    series = {}
    for c in range(config.n_children):
        child = f"c{c:0{width}d}"
        init = rng.random(V)
        state = np.where(init < config.initial_known / 2, 1.0,
                         np.where(init < config.initial_known, LADDER[1], 0.0))
        snaps = []
        for t in range(config.n_observations):
            if t:
                p = step_probabilities(W, state, config.base, config.boost)
                up = (rng.random(V) < p) & (state < 1.0)
                state = _step_up(state, up)
            age = config.start_age + t * config.age_step
            snaps.append(VocabularySnapshot.from_vector(child, age, state))
        series[child] = snaps
    return series


def synth_norms(vocab_size: int, seed: int = 0, degree: int = 1):
    """Random sensorimotor scores and two semantic similarity tables.

    Semantic layers are sparse: each word links to ``degree`` random partners
    above the default threshold, plus as many weak pairs below it.
    Sensorimotor scores mark a random third of the words as strong on each
    dimension.
    """
    rng = np.random.default_rng(seed)
    keys = word_keys(vocab_size)
    sensorimotor = {}
    strong = rng.random((vocab_size, len(SENSORIMOTOR_DIMENSIONS))) < 1 / 3
    hi = rng.uniform(3.6, 5.0, strong.shape)
    lo = rng.uniform(0.0, 3.0, strong.shape)
    scores = np.where(strong, hi, lo)
    # every dimension needs at least two strong words to have an edge
    for d in range(scores.shape[1]):
        if strong[:, d].sum() < 2:
            scores[rng.choice(vocab_size, 2, replace=False), d] = 4.5
    for i, k in enumerate(keys):
        sensorimotor[k] = scores[i].tolist()
    semantic = {}
    for name in SEMANTIC_LAYERS:
        pairs = {}
        for i in range(vocab_size):
            others = [j for j in range(vocab_size) if j != i]
            for j in rng.choice(others, size=min(degree, len(others)), replace=False):
                pairs[(min(i, j), max(i, j))] = float(np.round(rng.uniform(0.55, 1.0), 4))
            for j in rng.choice(others, size=min(degree, len(others)), replace=False):
                pairs.setdefault((min(i, j), max(i, j)), float(np.round(rng.uniform(0.0, 0.45), 4)))
        semantic[name] = [(keys[a], keys[b], c) for (a, b), c in sorted(pairs.items())]
    return keys, sensorimotor, semantic


def write_synthetic(out_dir, config: SynthConfig, degree: int = 1) -> dict:
    """Write norms, observations and a manifest under ``out_dir``.

    Layout: ``norms/sensorimotor.csv``, ``semantic/<name>.csv``,
    ``observations.csv`` and ``manifest.json``.
    """
    config.validate()
    out = Path(out_dir)
    (out / "norms").mkdir(parents=True, exist_ok=True)
    (out / "semantic").mkdir(parents=True, exist_ok=True)
    keys, sensorimotor, semantic = synth_norms(config.vocab_size, config.seed, degree)
    write_sensorimotor_csv(out / "norms" / "sensorimotor.csv", sensorimotor)
    for name, triples in semantic.items():
        write_semantic_csv(out / "semantic" / f"{name}.csv", triples)
    lexicon = Lexicon.from_keys(keys)
    layers = build_multiplex(NormSources.discover(out / "norms", out / "semantic"), lexicon)
    series = generate(config, layers)
    write_observations(out / "observations.csv", series, lexicon)
    manifest = {"config": asdict(config), "degree": degree,
                "layers": {n: {"nodes": l.n_nodes, "edges": len(l.edges)} for n, l in layers.items()}}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest

"""Glue between datasets, layer models, the baseline and the metrics."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .baseline import FFNNBaseline
from .evalmetrics import BASELINE_NAME, ConfusionCounts, confusion_arrays, metrics, MetricsRecord
from .exceptions import InvalidInputError
from .norms_graph import RelationshipLayer, normalize_adjacency
from .observations import ObservationSequence
from .tgcn import LayerModel, train_layer


def sequences_to_array(sequences: Sequence[ObservationSequence], n_words: int) -> np.ndarray:
    """Stack sequences into a ``(n, window, n_words)`` array of encoded values."""
    if not sequences:
        return np.zeros((0, 0, n_words))
    return np.stack([s.matrix(n_words) for s in sequences])


def consecutive_pairs(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Every (current, next) snapshot pair inside each sequence."""
    if arr.shape[0] == 0:
        return np.zeros((0, arr.shape[-1])), np.zeros((0, arr.shape[-1]))
    X = arr[:, :-1].reshape(-1, arr.shape[-1])
    y = arr[:, 1:].reshape(-1, arr.shape[-1])
    return X, y


def fit_layer(layer: RelationshipLayer, train: np.ndarray, validation: Optional[np.ndarray] = None,
              **params) -> LayerModel:
    return train_layer(layer.layer_name, layer.nodes, normalize_adjacency(layer), train,
                       validation, **params)


def fit_baseline(train: np.ndarray, **params) -> FFNNBaseline:
    X, y = consecutive_pairs(train)
    if X.shape[0] == 0:
        raise InvalidInputError("no training pairs for the baseline")
    return FFNNBaseline(**params).fit(X, y)


def layer_scores(model: LayerModel, test: np.ndarray) -> np.ndarray:
    """Lexicon-wide next-step scores for every test sequence."""
    k = model.estimator.n_input_steps
    inputs = test[:, :k]
    out = inputs[:, -1].copy()
    nodes = list(model.nodes)
    out[:, nodes] = model.estimator.predict(inputs[:, :, nodes])
    return out


def baseline_scores(model: FFNNBaseline, test: np.ndarray, n_input_steps: int) -> np.ndarray:
    return model.predict(test[:, n_input_steps - 1])


def evaluate_scores(scores: np.ndarray, test: np.ndarray, n_input_steps: int,
                    margin: float = 0.3) -> ConfusionCounts:
    current = test[:, n_input_steps - 1]
    nxt = test[:, n_input_steps]
    return confusion_arrays(scores, current, nxt, margin)


def evaluate_layer(model: LayerModel, test: np.ndarray, margin: float = 0.3, mode: str = "") -> MetricsRecord:
    k = model.estimator.n_input_steps
    c = evaluate_scores(layer_scores(model, test), test, k, margin)
    return metrics(c, model.layer_name, mode)


def evaluate_baseline(model: FFNNBaseline, test: np.ndarray, n_input_steps: int, margin: float = 0.3,
                      mode: str = "") -> MetricsRecord:
    c = evaluate_scores(baseline_scores(model, test, n_input_steps), test, n_input_steps, margin)
    return metrics(c, BASELINE_NAME, mode)

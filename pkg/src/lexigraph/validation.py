"""Input validation helpers for the estimators."""
from __future__ import annotations

from typing import Optional

import numpy as np

from .exceptions import InvalidInputError, ShapeError


def check_adjacency(adj) -> np.ndarray:
    if adj is None:
        raise InvalidInputError("an adjacency matrix is required")
    a = np.asarray(adj, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ShapeError(f"adjacency must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ShapeError("adjacency contains non-finite entries")
    if not np.allclose(a, a.T, rtol=0, atol=1e-12):
        raise ShapeError("adjacency must be symmetric")
    if np.any(np.diag(a) <= 0):
        raise ShapeError("adjacency diagonal must be strictly positive")
    return a


def check_sequences(X, n_nodes: Optional[int] = None, n_steps: Optional[int] = None,
                    n_features: Optional[int] = None) -> np.ndarray:
    """Coerce ``X`` to ``(n_sequences, steps, nodes, features)``.

    A 3-d input is treated as single-feature.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 3:
        X = X[..., None]
    if X.ndim != 4:
        raise ShapeError(f"expected (sequences, steps, nodes[, features]), got shape {X.shape}")
    if X.shape[0] == 0:
        raise InvalidInputError("empty dataset")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("input contains non-finite values")
    if n_steps is not None and X.shape[1] != n_steps:
        raise ShapeError(f"expected {n_steps} input steps, got {X.shape[1]}")
    if n_nodes is not None and X.shape[2] != n_nodes:
        raise ShapeError(f"input has {X.shape[2]} nodes but the adjacency has {n_nodes}")
    if n_features is not None and X.shape[3] != n_features:
        raise ShapeError(f"expected {n_features} features per node, got {X.shape[3]}")
    return X


def check_targets(y, X: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != X.shape[:1] + X.shape[2:3]:
        raise ShapeError(f"targets must have shape {(X.shape[0], X.shape[2])}, got {y.shape}")
    if not np.all(np.isfinite(y)):
        raise InvalidInputError("targets contain non-finite values")
    return y


def check_vocab_matrix(X, n_words: Optional[int] = None, name: str = "X") -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ShapeError(f"{name} must be (samples, words), got shape {X.shape}")
    if X.shape[0] == 0:
        raise InvalidInputError(f"{name} is empty")
    if n_words is not None and X.shape[1] != n_words:
        raise ShapeError(f"{name} has {X.shape[1]} words, expected {n_words}")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return X

"""Relationship-blind two-layer feedforward baseline."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import InvalidInputError, TrainingError
from .numkernel import glorot_uniform, mae, mae_grad, sigmoid
from .validation import check_vocab_matrix


def ffnn_forward(params, X):
    """``sigmoid(sigmoid(X W1 + b1) W2 + b2)`` with the hidden activations."""
    hidden = sigmoid(X @ params["W1"] + params["b1"])
    return sigmoid(hidden @ params["W2"] + params["b2"]), hidden


def ffnn_loss_and_grads(params, X, Y):
    out, hidden = ffnn_forward(params, X)
    loss = mae(out, Y)
    d2 = mae_grad(out, Y) * out * (1.0 - out)
    d1 = (d2 @ params["W2"].T) * hidden * (1.0 - hidden)
    grads = {
        "W2": hidden.T @ d2,
        "b2": d2.sum(axis=0),
        "W1": X.T @ d1,
        "b1": d1.sum(axis=0),
    }
    return loss, grads


class FFNNBaseline(RegressorMixin, BaseEstimator):
    """Predicts the next vocabulary vector from the current one.

    Trained by minibatch SGD with classical momentum under MAE loss.
    """

    def __init__(self, hidden_units=500, learning_rate=0.8, momentum=0.9, epochs=1000,
                 batch_size=4, seed=0):
        self.hidden_units = hidden_units
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed

    def fit(self, X, y):
        X = check_vocab_matrix(X)
        y = check_vocab_matrix(y, n_words=X.shape[1], name="y")
        if y.shape[0] != X.shape[0]:
            raise InvalidInputError("X and y need the same number of rows")
        if self.epochs < 1 or self.batch_size < 1 or self.hidden_units < 1:
            raise InvalidInputError("epochs, batch_size and hidden_units must be positive")
        rng = np.random.default_rng(self.seed)
        V = X.shape[1]
        params = {
            "W1": glorot_uniform(rng, V, self.hidden_units),
            "b1": np.zeros(self.hidden_units),
            "W2": glorot_uniform(rng, self.hidden_units, V),
            "b2": np.zeros(V),
        }
        velocity = {k: np.zeros_like(v) for k, v in params.items()}
        losses = []
        n = X.shape[0]
        for epoch in range(1, self.epochs + 1):
            order = rng.permutation(n)
            total = 0.0
            for bi, start in enumerate(range(0, n, self.batch_size), start=1):
                idx = order[start:start + self.batch_size]
                loss, grads = ffnn_loss_and_grads(params, X[idx], y[idx])
                if not np.isfinite(loss):
                    raise TrainingError(f"baseline loss diverged at epoch {epoch}, batch {bi}")
                for k in params:
                    if not np.all(np.isfinite(grads[k])):
                        raise TrainingError(f"non-finite gradient in tensor {k!r} at epoch {epoch}, batch {bi}")
                    velocity[k] *= self.momentum
                    velocity[k] -= self.learning_rate * grads[k]
                    params[k] += velocity[k]
                total += loss * len(idx)
            losses.append(total / n)
        self.params_ = params
        self.loss_curve_ = losses
        self.n_words_ = V
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "params_")
        X = check_vocab_matrix(X, n_words=self.n_words_)
        return ffnn_forward(self.params_, X)[0]

    def score(self, X, y, sample_weight=None):
        """Negative MAE, so that larger is better."""
        return -mae(self.predict(X), np.asarray(y, dtype=float))

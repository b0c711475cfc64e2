"""Per-layer spatio-temporal model: a graph convolution feeding a GRU.

At each input step the node features are mixed over the normalised adjacency
(``relu(A X W)``), the result is the GRU input for every node, and after the
last step a per-node affine head with a sigmoid predicts the next encoded
comprehension level. Gradients are written out by hand.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import InvalidInputError, ShapeError, TrainingError
from .numkernel import AdamState, adam_step, glorot_uniform, mae, mae_grad, mse, relu, sigmoid
from .validation import check_adjacency, check_sequences, check_targets

GRU_GATES = ("z", "r", "c")


def gcn_forward(features, adj, weights) -> np.ndarray:
    """``relu(adj @ features @ weights)`` for a ``(nodes, in_dim)`` feature matrix."""
    features = np.asarray(features, dtype=float)
    adj = np.asarray(adj, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if adj.shape[1] != features.shape[-2]:
        raise ShapeError(f"adjacency {adj.shape} does not match {features.shape[-2]} feature rows")
    if features.shape[-1] != weights.shape[0]:
        raise ShapeError(f"features {features.shape} do not match weights {weights.shape}")
    return relu(adj @ features @ weights)


def gru_step(h_prev, x, params: Mapping[str, np.ndarray]) -> np.ndarray:
    """One GRU update applied row-wise (one row per node)."""
    h_prev = np.asarray(h_prev, dtype=float)
    x = np.asarray(x, dtype=float)
    if h_prev.shape[:-1] != x.shape[:-1]:
        raise ShapeError(f"hidden state {h_prev.shape} and input {x.shape} disagree on rows")
    if x.shape[-1] != params["W_z"].shape[0] or h_prev.shape[-1] != params["U_z"].shape[0]:
        raise ShapeError("GRU weights do not match input or hidden width")
    z = sigmoid(x @ params["W_z"] + h_prev @ params["U_z"] + params["b_z"])
    r = sigmoid(x @ params["W_r"] + h_prev @ params["U_r"] + params["b_r"])
    c = np.tanh(x @ params["W_c"] + (r * h_prev) @ params["U_c"] + params["b_c"])
    return z * h_prev + (1.0 - z) * c


def init_params(n_features: int, gcn_units: int, gru_units: int, rng: np.random.Generator,
                skip: bool = True) -> dict:
    p = {"W_gcn": glorot_uniform(rng, n_features, gcn_units)}
    step_in = gcn_units + (n_features if skip else 0)
    for g in GRU_GATES:
        p[f"W_{g}"] = glorot_uniform(rng, step_in, gru_units)
        p[f"U_{g}"] = glorot_uniform(rng, gru_units, gru_units)
        p[f"b_{g}"] = np.zeros(gru_units)
    p["W_out"] = glorot_uniform(rng, gru_units, 1)
    p["b_out"] = np.zeros(1)
    return p


def zero_params(n_features: int, gcn_units: int, gru_units: int, skip: bool = True) -> dict:
    rng = np.random.default_rng(0)
    return {k: np.zeros_like(v) for k, v in init_params(n_features, gcn_units, gru_units, rng, skip).items()}


def _pack(params: dict) -> tuple[dict, np.ndarray]:
    """Copy ``params`` into one flat buffer and return views into it."""
    flat = np.concatenate([v.ravel() for v in params.values()])
    views, offset = {}, 0
    for k, v in params.items():
        views[k] = flat[offset:offset + v.size].reshape(v.shape)
        offset += v.size
    return views, flat


def forward_batch(params, adj, X, masks=None):
    """Forward pass over a ``(batch, time, nodes, features)`` array.

    When the GRU input is wider than the graph-convolution output, the raw
    node features are appended to it as a skip connection.

    Returns predictions of shape ``(batch, nodes)`` and the cache needed by
    :func:`backward_batch`.
    """
    B, T, N, F = X.shape
    H = params["U_z"].shape[0]
    skip = params["W_z"].shape[0] != params["W_gcn"].shape[1]
    AX = np.matmul(adj, X)  # (B, T, N, F)
    h = np.zeros((B * N, H))
    steps = []
    for t in range(T):
        ax = AX[:, t].reshape(B * N, -1)
        pre = ax @ params["W_gcn"]
        g = relu(pre)
        if masks is not None:
            g = g * masks[t]
        if skip:
            g = np.concatenate([g, X[:, t].reshape(B * N, F)], axis=1)
        z = sigmoid(g @ params["W_z"] + h @ params["U_z"] + params["b_z"])
        r = sigmoid(g @ params["W_r"] + h @ params["U_r"] + params["b_r"])
        rh = r * h
        c = np.tanh(g @ params["W_c"] + rh @ params["U_c"] + params["b_c"])
        h_new = z * h + (1.0 - z) * c
        steps.append((ax, pre, g, h, z, r, rh, c))
        h = h_new
    y = sigmoid(h @ params["W_out"] + params["b_out"]).reshape(B, N)
    return y, (steps, h, y, masks)


def backward_batch(params, cache, dy) -> dict:
    """Gradients of a scalar loss given ``dy = dLoss/dy`` of shape ``(batch, nodes)``."""
    steps, h_last, y, masks = cache
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    yf = y.reshape(-1, 1)
    do = dy.reshape(-1, 1) * yf * (1.0 - yf)
    grads["W_out"] = h_last.T @ do
    grads["b_out"] = do.sum(axis=0)
    dh = do @ params["W_out"].T
    for t in range(len(steps) - 1, -1, -1):
        ax, pre, g, h_prev, z, r, rh, c = steps[t]
        dz = dh * (h_prev - c)
        dc = dh * (1.0 - z)
        dh_prev = dh * z
        dac = dc * (1.0 - c * c)
        grads["W_c"] += g.T @ dac
        grads["U_c"] += rh.T @ dac
        grads["b_c"] += dac.sum(axis=0)
        dg = dac @ params["W_c"].T
        drh = dac @ params["U_c"].T
        dr = drh * h_prev
        dh_prev += drh * r
        dar = dr * r * (1.0 - r)
        grads["W_r"] += g.T @ dar
        grads["U_r"] += h_prev.T @ dar
        grads["b_r"] += dar.sum(axis=0)
        dg += dar @ params["W_r"].T
        dh_prev += dar @ params["U_r"].T
        daz = dz * z * (1.0 - z)
        grads["W_z"] += g.T @ daz
        grads["U_z"] += h_prev.T @ daz
        grads["b_z"] += daz.sum(axis=0)
        dg += daz @ params["W_z"].T
        dh_prev += daz @ params["U_z"].T
        dg = dg[:, :pre.shape[1]]
        if masks is not None:
            dg = dg * masks[t]
        dpre = dg * (pre > 0)
        grads["W_gcn"] += ax.T @ dpre
        dh = dh_prev
    return grads


def loss_and_grads(params, adj, X, y_true, masks=None):
    """MAE loss of a batch and its gradient with respect to every parameter."""
    y, cache = forward_batch(params, adj, X, masks)
    loss = mae(y, y_true)
    grads = backward_batch(params, cache, mae_grad(y, y_true))
    return loss, grads


@dataclass
class TrainingHistory:
    train_mae: list = field(default_factory=list)
    train_mse: list = field(default_factory=list)
    val_mae: list = field(default_factory=list)
    val_mse: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.train_mae)

    def as_dict(self) -> dict:
        return {"train_mae": list(self.train_mae), "train_mse": list(self.train_mse),
                "val_mae": list(self.val_mae), "val_mse": list(self.val_mse)}

    @classmethod
    def from_dict(cls, d) -> "TrainingHistory":
        return cls(list(d.get("train_mae", [])), list(d.get("train_mse", [])),
                   list(d.get("val_mae", [])), list(d.get("val_mse", [])))


class TGCNRegressor(RegressorMixin, BaseEstimator):
    """T-GCN next-step regressor over one relationship layer.

    Parameters
    ----------
    adjacency : array of shape (n_nodes, n_nodes)
        Normalised adjacency of the layer, in the node order used by ``X``.
    sequence_length : int
        Window length; the model reads ``sequence_length - prediction_length``
        input steps.
    epochs, batch_size : int
        Passes over the data and whole sequences per ADAM step.
    dropout : float or None
        Drop rate on the graph-convolution output during training.
    skip_features : bool
        Append each node's raw features to the graph-convolution output
        before the GRU. Without it a node's own level is blended with its
        neighbours' and cannot be recovered.

    ``fit(X, y)`` takes ``X`` of shape ``(n_sequences, steps, n_nodes)`` (or
    with a trailing feature axis) and ``y`` of shape ``(n_sequences, n_nodes)``.
    """

    def __init__(self, adjacency=None, sequence_length=4, prediction_length=1, epochs=1000,
                 batch_size=4, gcn_units=16, gru_units=32, dropout=None, learning_rate=1e-3,
                 beta1=0.9, beta2=0.999, epsilon=1e-8, skip_features=True, seed=0):
        self.adjacency = adjacency
        self.sequence_length = sequence_length
        self.prediction_length = prediction_length
        self.epochs = epochs
        self.batch_size = batch_size
        self.gcn_units = gcn_units
        self.gru_units = gru_units
        self.dropout = dropout
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.skip_features = skip_features
        self.seed = seed

    @property
    def n_input_steps(self) -> int:
        return self.sequence_length - self.prediction_length

    def _validate_config(self):
        if self.sequence_length < 2:
            raise InvalidInputError("sequence_length must be at least 2")
        if self.prediction_length != 1:
            raise InvalidInputError("only prediction_length = 1 is supported")
        if self.epochs < 1 or self.batch_size < 1:
            raise InvalidInputError("epochs and batch_size must be positive")
        if self.dropout is not None and not 0.0 <= self.dropout < 1.0:
            raise InvalidInputError("dropout must be None or in [0, 1)")

    def fit(self, X, y, validation_data=None):
        self._validate_config()
        adj = check_adjacency(self.adjacency)
        X = check_sequences(X, n_nodes=adj.shape[0], n_steps=self.n_input_steps)
        y = check_targets(y, X)
        rng = np.random.default_rng(self.seed)
        params, flat = _pack(init_params(X.shape[-1], self.gcn_units, self.gru_units, rng,
                                           self.skip_features))
        packed = {"theta": flat}
        state = AdamState(lr=self.learning_rate, beta1=self.beta1, beta2=self.beta2, eps=self.epsilon)
        if validation_data is not None:
            Xv = check_sequences(validation_data[0], n_nodes=adj.shape[0], n_steps=self.n_input_steps)
            yv = check_targets(validation_data[1], Xv)
        history = TrainingHistory()
        drop = self.dropout or 0.0
        n = X.shape[0]
        for epoch in range(1, self.epochs + 1):
            order = rng.permutation(n)
            abs_sum = sq_sum = 0.0
            for bi, start in enumerate(range(0, n, self.batch_size), start=1):
                idx = order[start:start + self.batch_size]
                xb, yb = X[idx], y[idx]
                masks = None
                if drop > 0.0:
                    rows = len(idx) * adj.shape[0]
                    masks = [(rng.random((rows, self.gcn_units)) >= drop) / (1.0 - drop)
                             for _ in range(xb.shape[1])]
                pred, cache = forward_batch(params, adj, xb, masks)
                loss = mae(pred, yb)
                if not np.isfinite(loss):
                    raise TrainingError(f"non-finite loss at epoch {epoch}, batch {bi}")
                grads = backward_batch(params, cache, mae_grad(pred, yb))
                gflat = np.concatenate([grads[k].ravel() for k in params])
                if not np.all(np.isfinite(gflat)):
                    bad = next(k for k in params if not np.all(np.isfinite(grads[k])))
                    raise TrainingError(f"non-finite gradient in tensor {bad!r} at epoch {epoch}, batch {bi}")
                adam_step(packed, {"theta": gflat}, state)
                abs_sum += loss * pred.size
                sq_sum += mse(pred, yb) * pred.size
            history.train_mae.append(abs_sum / y.size)
            history.train_mse.append(sq_sum / y.size)
            if validation_data is not None and len(Xv):
                pv, _ = forward_batch(params, adj, Xv)
                history.val_mae.append(mae(pv, yv))
                history.val_mse.append(mse(pv, yv))
        self.params_ = {k: v.copy() for k, v in params.items()}
        self.history_ = history
        self.n_nodes_ = adj.shape[0]
        self.n_features_ = X.shape[-1]
        self.adam_steps_ = state.t
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "params_")
        adj = check_adjacency(self.adjacency)
        X = check_sequences(X, n_nodes=self.n_nodes_, n_steps=self.n_input_steps,
                            n_features=self.n_features_)
        y, _ = forward_batch(self.params_, adj, X)
        return y

    def score(self, X, y, sample_weight=None):
        """Negative MAE, so that larger is better."""
        return -mae(self.predict(X), np.asarray(y, dtype=float))


@dataclass
class LayerModel:
    """A fitted :class:`TGCNRegressor` bound to one layer's node ordering."""

    layer_name: str
    nodes: tuple[int, ...]
    estimator: TGCNRegressor

    @property
    def history(self) -> TrainingHistory:
        return self.estimator.history_

    def predict_layer(self, window) -> np.ndarray:
        """Scores for the layer's nodes from a ``(steps, n_words)`` lexicon-indexed window."""
        window = np.asarray(window, dtype=float)
        if window.ndim != 2:
            raise ShapeError("window must have shape (steps, n_words)")
        if self.nodes and max(self.nodes) >= window.shape[1]:
            raise ShapeError("window is narrower than the layer's largest node id")
        return self.estimator.predict(window[None, :, list(self.nodes)])[0]


def project(windows: np.ndarray, nodes: Sequence[int]) -> np.ndarray:
    """Restrict lexicon-indexed arrays ``(..., n_words)`` to a layer's nodes."""
    return np.asarray(windows)[..., list(nodes)]


def train_layer(layer_name: str, nodes: Sequence[int], adj: np.ndarray, sequences: np.ndarray,
                validation: Optional[np.ndarray] = None, **params) -> LayerModel:
    """Fit one layer model on ``(n, window, n_words)`` arrays of encoded sequences."""
    if len(sequences) == 0:
        raise InvalidInputError(f"no training sequences for layer {layer_name!r}")
    seqs = project(sequences, nodes)
    est = TGCNRegressor(adjacency=adj, **params)
    if seqs.shape[1] != est.sequence_length:
        raise InvalidInputError(f"sequences have length {seqs.shape[1]}, expected {est.sequence_length}")
    k = est.n_input_steps
    val = None
    if validation is not None and len(validation):
        v = project(validation, nodes)
        val = (v[:, :k], v[:, k])
    est.fit(seqs[:, :k], seqs[:, k], validation_data=val)
    return LayerModel(layer_name, tuple(nodes), est)


def predict_next(model: LayerModel, window, n_words: Optional[int] = None) -> np.ndarray:
    """Lexicon-wide next-step scores; words outside the layer keep their current value."""
    try:
        check_is_fitted(model.estimator, "params_")
    except Exception as exc:
        raise InvalidInputError(f"layer model {model.layer_name!r} is not trained") from exc
    window = np.asarray(window, dtype=float)
    n_words = window.shape[1] if n_words is None else n_words
    out = window[-1, :n_words].copy()
    out[list(model.nodes)] = model.predict_layer(window)
    return out


def candidate_words(scores: Mapping[str, float], current: Mapping[str, float], k: int,
                    threshold: float = 0.5) -> list[str]:
    """Words not yet at full comprehension, ranked by predicted score."""
    if k <= 0:
        return []
    pool = [(w, s) for w, s in scores.items() if current.get(w, 0.0) < 1.0 and s >= threshold]
    pool.sort(key=lambda ws: (-ws[1], ws[0]))
    return [w for w, _ in pool[:k]]

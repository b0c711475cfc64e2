"""Dense numeric core: activations, losses, ADAM and a finite-difference checker.

Arrays are plain float64 ``numpy.ndarray`` objects. All reductions run in a
fixed order so repeated calls on identical inputs give identical results.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .exceptions import ShapeError, TrainingError

DTYPE = np.float64


def as_matrix(x) -> np.ndarray:
    a = np.asarray(x, dtype=DTYPE)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ShapeError("matrix contains non-finite entries")
    return a


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def sigmoid(x):
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=DTYPE)))


def tanh(x):
    return np.tanh(np.asarray(x, dtype=DTYPE))


def relu(x):
    return np.maximum(np.asarray(x, dtype=DTYPE), 0.0)


def _check_same_shape(pred, target):
    pred = np.asarray(pred, dtype=DTYPE)
    target = np.asarray(target, dtype=DTYPE)
    if pred.shape != target.shape:
        raise ShapeError(f"prediction shape {pred.shape} != target shape {target.shape}")
    return pred, target


def mae(pred, target) -> float:
    pred, target = _check_same_shape(pred, target)
    return float(np.mean(np.abs(pred - target)))


def mse(pred, target) -> float:
    pred, target = _check_same_shape(pred, target)
    return float(np.mean((pred - target) ** 2))


def mae_grad(pred, target) -> np.ndarray:
    """Gradient of :func:`mae` w.r.t. ``pred``; zero where the residual is zero."""
    pred, target = _check_same_shape(pred, target)
    return np.sign(pred - target) / pred.size


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(
    params: dict[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """Apply one bias-corrected ADAM update in place and return ``(params, state)``."""
    if state.lr <= 0:
        raise ValueError("learning rate must be positive")
    for name in params:
        g = grads[name]
        if g.shape != params[name].shape:
            raise ShapeError(f"gradient for {name!r} has shape {g.shape}, expected {params[name].shape}")
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient in tensor {name!r}")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for name in sorted(params):
        g = grads[name]
        m = state.m.get(name)
        if m is None:
            m = np.zeros_like(params[name])
            state.v[name] = np.zeros_like(params[name])
        v = state.v[name]
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        state.m[name] = m
        state.v[name] = v
        params[name] -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


def finite_diff_grad(f: Callable[[np.ndarray], float], params, h: float = 1e-6) -> np.ndarray:
    """Central-difference estimate of the gradient of scalar ``f`` at ``params``."""
    if h <= 0:
        raise ValueError("step size h must be positive")
    x = np.array(params, dtype=DTYPE)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    g = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        g[i] = (fp - fm) / (2.0 * h)
    return grad


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def relative_error(a, b) -> float:
    """``||a - b|| / (||a|| + ||b||)``, the usual gradient-check statistic."""
    a = np.asarray(a, dtype=DTYPE).ravel()
    b = np.asarray(b, dtype=DTYPE).ravel()
    denom = np.linalg.norm(a) + np.linalg.norm(b)
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(a - b) / denom)

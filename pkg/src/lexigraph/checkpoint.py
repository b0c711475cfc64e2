"""Versioned JSON checkpoints for trained layer models and the baseline.

Floats are written with ``repr`` precision, so a save/load round trip is
bit-exact.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .baseline import FFNNBaseline
from .exceptions import FileFormatError
from .tgcn import LayerModel, TGCNRegressor, TrainingHistory

FORMAT = "lexigraph-checkpoint"
VERSION = 1


def _tensor(a: np.ndarray) -> dict:
    a = np.asarray(a, dtype=float)
    return {"shape": list(a.shape), "data": a.ravel().tolist()}


def _array(d: dict) -> np.ndarray:
    return np.array(d["data"], dtype=float).reshape(d["shape"])


def layer_model_to_dict(model: LayerModel) -> dict:
    est = model.estimator
    config = {k: v for k, v in est.get_params().items() if k != "adjacency"}
    return {
        "format": FORMAT,
        "version": VERSION,
        "kind": "tgcn",
        "layer_name": model.layer_name,
        "nodes": list(model.nodes),
        "config": config,
        "seed": est.seed,
        "adjacency": _tensor(est.adjacency),
        "tensors": {k: _tensor(v) for k, v in est.params_.items()},
        "metadata": {"history": est.history_.as_dict(), "n_features": est.n_features_,
                     "adam_steps": est.adam_steps_},
    }


def layer_model_from_dict(d: dict) -> LayerModel:
    _check_header(d, "tgcn")
    est = TGCNRegressor(adjacency=_array(d["adjacency"]), **d["config"])
    est.params_ = {k: _array(v) for k, v in d["tensors"].items()}
    est.history_ = TrainingHistory.from_dict(d["metadata"]["history"])
    est.n_nodes_ = est.adjacency.shape[0]
    est.n_features_ = d["metadata"]["n_features"]
    est.adam_steps_ = d["metadata"].get("adam_steps", 0)
    return LayerModel(d["layer_name"], tuple(d["nodes"]), est)


def baseline_to_dict(model: FFNNBaseline, vocabulary=None) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "kind": "ffnn",
        "config": model.get_params(),
        "seed": model.seed,
        "vocabulary": list(vocabulary) if vocabulary is not None else None,
        "tensors": {k: _tensor(v) for k, v in model.params_.items()},
        "metadata": {"loss_curve": list(model.loss_curve_)},
    }


def baseline_from_dict(d: dict) -> FFNNBaseline:
    _check_header(d, "ffnn")
    model = FFNNBaseline(**d["config"])
    model.params_ = {k: _array(v) for k, v in d["tensors"].items()}
    model.loss_curve_ = list(d["metadata"]["loss_curve"])
    model.n_words_ = model.params_["W1"].shape[0]
    return model


def _check_header(d: dict, kind: str) -> None:
    if d.get("format") != FORMAT:
        raise FileFormatError("<checkpoint>", "not a lexigraph checkpoint")
    if d.get("version") != VERSION:
        raise FileFormatError("<checkpoint>", f"unsupported checkpoint version {d.get('version')}")
    if d.get("kind") != kind:
        raise FileFormatError("<checkpoint>", f"expected a {kind} checkpoint, got {d.get('kind')}")


def save(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")


def load(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FileFormatError(path, f"cannot read checkpoint: {exc}") from exc


def save_layer_model(path, model: LayerModel) -> None:
    save(path, layer_model_to_dict(model))


def load_layer_model(path) -> LayerModel:
    return layer_model_from_dict(load(path))


def save_baseline(path, model: FFNNBaseline, vocabulary=None) -> None:
    save(path, baseline_to_dict(model, vocabulary))


def load_baseline(path) -> FFNNBaseline:
    return baseline_from_dict(load(path))

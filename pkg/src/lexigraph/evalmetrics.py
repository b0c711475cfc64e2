"""Learned/not-learned decisions, confusion counts, metrics and reports."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .exceptions import EmptyEvaluationError, InvalidInputError
from .norms_graph import SEMANTIC_LAYERS, SENSORIMOTOR_DIMENSIONS

DEFAULT_MARGIN = 0.3
BASELINE_NAME = "baseline"
REPORT_ORDER = (BASELINE_NAME,) + SEMANTIC_LAYERS + SENSORIMOTOR_DIMENSIONS
GROUPS = {"semantic": SEMANTIC_LAYERS, "sensorimotor": SENSORIMOTOR_DIMENSIONS}

DISPLAY_NAMES = {
    BASELINE_NAME: "2-Layer Feedforward (ANN)",
    "mcrae": "McRae",
    "buchanan": "Buchanan",
    "touch": "Haptic (Touch)",
    "taste": "Gustatory (Taste)",
    "smell": "Olfactory (Smell)",
    "hearing": "Auditory (Hearing)",
    "vision": "Visual (Vision)",
    "interoception": "Interoceptive",
    "mouth_throat": "Mouth/Throat",
    "hand_arm": "Hand/Arm",
    "foot_leg": "Foot/Leg",
    "head": "Head",
    "torso": "Torso",
}

# Group mean accuracies as published alongside per-layer results.
PUBLISHED_GROUP_ACCURACY = {"semantic": 0.729, "sensorimotor": 0.733}


def binarize(score: float, current: float, margin: float = DEFAULT_MARGIN) -> bool:
    """True when the model predicts increased comprehension of the word."""
    if current >= 1.0:
        return False
    # tolerance keeps one-level margins exact despite binary floats
    return score - current >= margin - 1e-12


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise InvalidInputError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp,
                               self.fn + other.fn, self.tn + other.tn)


def confusion(predicted: Mapping[object, bool], actual: Mapping[object, bool]) -> ConfusionCounts:
    if set(predicted) != set(actual):
        raise InvalidInputError("predictions and outcomes cover different words")
    tp = fp = fn = tn = 0
    for w, p in predicted.items():
        a = actual[w]
        if p and a:
            tp += 1
        elif p:
            fp += 1
        elif a:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fp, fn, tn)


def confusion_arrays(scores, current, nxt, margin: float = DEFAULT_MARGIN) -> ConfusionCounts:
    """Vectorised confusion over words not already at full comprehension."""
    scores = np.asarray(scores, dtype=float)
    current = np.asarray(current, dtype=float)
    nxt = np.asarray(nxt, dtype=float)
    if not (scores.shape == current.shape == nxt.shape):
        raise InvalidInputError("scores, current and next values must share a shape")
    eligible = current < 1.0
    pred = (scores - current >= margin - 1e-12) & eligible
    act = (nxt > current) & eligible
    return ConfusionCounts(
        int(np.sum(pred & act)), int(np.sum(pred & ~act & eligible)),
        int(np.sum(~pred & act)), int(np.sum(~pred & ~act & eligible)),
    )


@dataclass(frozen=True)
class MetricsRecord:
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    accuracy: float
    layer_name: str = ""
    mode: str = ""
    counts: Optional[ConfusionCounts] = None

    def as_dict(self) -> dict:
        d = asdict(self)
        d["counts"] = asdict(self.counts) if self.counts is not None else None
        return d


def f1_score(precision: Optional[float], recall: Optional[float]) -> Optional[float]:
    if precision is None or recall is None:
        return None
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def metrics(c: ConfusionCounts, layer_name: str = "", mode: str = "") -> MetricsRecord:
    """Precision, recall, F1 and accuracy; zero denominators give ``None``."""
    if c.total == 0:
        raise EmptyEvaluationError("no decisions to evaluate")
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else None
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else None
    return MetricsRecord(precision, recall, f1_score(precision, recall),
                         (c.tp + c.tn) / c.total, layer_name, mode, c)


def _fmt(x: Optional[float]) -> str:
    return "undefined" if x is None else f"{x:.3f}"


def _mean(values: Iterable[Optional[float]]) -> Optional[float]:
    vals = [v for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None


def layer_report(records: Sequence[MetricsRecord],
                 published: Optional[Mapping[str, float]] = None) -> tuple[str, dict]:
    """Markdown table and JSON payload, rows ordered baseline, semantic, sensorimotor."""
    if not records:
        raise InvalidInputError("layer_report needs at least one record")
    rank = {n: i for i, n in enumerate(REPORT_ORDER)}
    rows = sorted(records, key=lambda r: (rank.get(r.layer_name, len(rank)), r.layer_name))
    by_name = {r.layer_name: r for r in rows}

    group_means = {}
    notes = []
    for group, names in GROUPS.items():
        members = [by_name[n] for n in names if n in by_name]
        if not members:
            continue
        mean = _mean(r.accuracy for r in members)
        group_means[group] = mean
        if published and group in published and round(mean, 3) != published[group]:
            notes.append(f"{group} mean accuracy {mean:.4f} rounds to {mean:.3f}, "
                         f"not the published {published[group]:.3f}")

    lines = ["| Layer | Precision | Recall | F1 | Accuracy | Mode |",
             "|---|---|---|---|---|---|"]
    for r in rows:
        name = DISPLAY_NAMES.get(r.layer_name, r.layer_name)
        lines.append(f"| {name} | {_fmt(r.precision)} | {_fmt(r.recall)} | {_fmt(r.f1)} "
                     f"| {_fmt(r.accuracy)} | {r.mode} |")
    if group_means:
        lines.append("")
        lines.append("| Group | Mean accuracy |")
        lines.append("|---|---|")
        for g, m in group_means.items():
            lines.append(f"| {g} | {m:.4f} |")
    if notes:
        lines.append("")
        lines.extend(f"Note: {n}" for n in notes)
    markdown = "\n".join(lines) + "\n"

    payload = {
        "rows": [
            {"layer": r.layer_name, "precision": r.precision, "recall": r.recall, "f1": r.f1,
             "accuracy": r.accuracy, "mode": r.mode,
             "counts": asdict(r.counts) if r.counts is not None else None}
            for r in rows
        ],
        "group_mean_accuracy": group_means,
        "notes": notes,
    }
    return markdown, payload


def report_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def aggregate_candidates(per_layer_lists: Sequence[Sequence[str]], k: int) -> list[str]:
    """Borda-style combination of ranked candidate lists.

    A word at position ``i`` of a list of length ``L`` earns ``L - i`` points.
    Ties go to the word proposed by more layers, then lexicographic order.
    """
    if k <= 0:
        return []
    points: dict[str, int] = {}
    votes: dict[str, int] = {}
    for ranked in per_layer_lists:
        L = len(ranked)
        for i, w in enumerate(ranked):
            points[w] = points.get(w, 0) + (L - i)
            votes[w] = votes.get(w, 0) + 1
    order = sorted(points, key=lambda w: (-points[w], -votes[w], w))
    return order[:k]

"""Longitudinal vocabulary observations: encoding, repair, windowing, splits."""
from __future__ import annotations

import csv
import enum
import json
import logging
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .exceptions import (
    AmbiguityError,
    FileFormatError,
    InvalidInputError,
    OrderingError,
    SplitConflictError,
)
from .lexicon import AliasMap, Lexicon, disambiguate, normalize_word

logger = logging.getLogger(__name__)

DEFAULT_WINDOW = 4
REPAIR_MODES = ("optimistic", "pessimistic")


class ComprehensionState(enum.Enum):
    NONE = "none"
    PRODUCES = "produces"
    UNDERSTANDS = "understands"
    FULL = "full"

    @property
    def encoded(self) -> float:
        return _ENCODING[self]

    @classmethod
    def parse(cls, text: str) -> "ComprehensionState":
        key = " ".join(text.strip().lower().replace("_", " ").split())
        try:
            return _LABELS[key]
        except KeyError:
            raise InvalidInputError(f"unknown comprehension state {text!r}") from None

    @classmethod
    def decode(cls, value: float) -> "ComprehensionState":
        for state, v in _ENCODING.items():
            if v == value:
                return state
        raise InvalidInputError(f"{value} is not an encoded comprehension level")


_ENCODING = {
    ComprehensionState.NONE: 0.0,
    ComprehensionState.PRODUCES: 0.3,
    ComprehensionState.UNDERSTANDS: 0.6,
    ComprehensionState.FULL: 1.0,
}
# CDI forms report "understands" / "understands and says"
_LABELS = {
    "none": ComprehensionState.NONE,
    "produces": ComprehensionState.PRODUCES,
    "says": ComprehensionState.PRODUCES,
    "understands": ComprehensionState.UNDERSTANDS,
    "full": ComprehensionState.FULL,
    "understands and says": ComprehensionState.FULL,
    "produces and understands": ComprehensionState.FULL,
}
LEVELS = (0.0, 0.3, 0.6, 1.0)
FULL = 1.0


def encode_state(state: ComprehensionState) -> float:
    return _ENCODING[state]


@dataclass(frozen=True)
class VocabularySnapshot:
    child_id: str
    age_months: float
    states: Mapping[int, ComprehensionState] = field(default_factory=dict)

    def __post_init__(self):
        if not self.age_months > 0:
            raise InvalidInputError(f"age_months must be positive, got {self.age_months}")

    def state(self, word_id: int) -> ComprehensionState:
        return self.states.get(word_id, ComprehensionState.NONE)

    def vector(self, n_words: int) -> np.ndarray:
        v = np.zeros(n_words)
        for wid, st in self.states.items():
            v[wid] = st.encoded
        return v

    @classmethod
    def from_vector(cls, child_id: str, age_months: float, values) -> "VocabularySnapshot":
        states = {i: ComprehensionState.decode(float(v)) for i, v in enumerate(values) if v != 0.0}
        return cls(child_id, age_months, states)


@dataclass(frozen=True)
class ObservationSequence:
    child_id: str
    snapshots: tuple[VocabularySnapshot, ...]

    def __post_init__(self):
        ages = [s.age_months for s in self.snapshots]
        if any(b <= a for a, b in zip(ages, ages[1:])):
            raise OrderingError(f"sequence for child {self.child_id!r} is not strictly age-ordered")
        if any(s.child_id != self.child_id for s in self.snapshots):
            raise InvalidInputError("all snapshots in a sequence must belong to one child")

    def __len__(self) -> int:
        return len(self.snapshots)

    def matrix(self, n_words: int) -> np.ndarray:
        """Encoded values as a ``(time, words)`` array."""
        return np.stack([s.vector(n_words) for s in self.snapshots])


def _check_ordered(snapshots: Sequence[VocabularySnapshot]) -> None:
    if not snapshots:
        return
    child = snapshots[0].child_id
    for prev, cur in zip(snapshots, snapshots[1:]):
        if cur.child_id != child:
            raise InvalidInputError("repair_series expects snapshots from a single child")
        if cur.age_months <= prev.age_months:
            raise OrderingError(
                f"snapshots for child {child!r} are not strictly age-ordered "
                f"({prev.age_months} then {cur.age_months})"
            )


def repair_matrix(values: np.ndarray, mode: str = "optimistic") -> np.ndarray:
    """Make each column of a ``(time, words)`` array non-decreasing over time.

    ``optimistic`` raises later values to the running maximum; ``pessimistic``
    lowers earlier values to the running minimum taken from the right.
    """
    values = np.asarray(values, dtype=float)
    if mode == "optimistic":
        return np.maximum.accumulate(values, axis=0)
    if mode == "pessimistic":
        return np.minimum.accumulate(values[::-1], axis=0)[::-1]
    raise InvalidInputError(f"repair mode must be one of {REPAIR_MODES}, got {mode!r}")


def repair_series(snapshots: Sequence[VocabularySnapshot], mode: str = "optimistic") -> list[VocabularySnapshot]:
    _check_ordered(snapshots)
    if mode not in REPAIR_MODES:
        raise InvalidInputError(f"repair mode must be one of {REPAIR_MODES}, got {mode!r}")
    if not snapshots:
        return []
    word_ids = sorted({w for s in snapshots for w in s.states})
    col = {w: j for j, w in enumerate(word_ids)}
    values = np.zeros((len(snapshots), len(word_ids)))
    for t, snap in enumerate(snapshots):
        for w, st in snap.states.items():
            values[t, col[w]] = st.encoded
    fixed = repair_matrix(values, mode)
    out = []
    for t, snap in enumerate(snapshots):
        states = {w: ComprehensionState.decode(fixed[t, col[w]]) for w in word_ids if fixed[t, col[w]] != 0.0}
        out.append(VocabularySnapshot(snap.child_id, snap.age_months, states))
    return out


def window_series(snapshots: Sequence[VocabularySnapshot], window: int = DEFAULT_WINDOW) -> list[ObservationSequence]:
    """All contiguous windows of ``window`` snapshots, stride 1."""
    if window < 2:
        raise InvalidInputError("window must be at least 2")
    _check_ordered(snapshots)
    n = len(snapshots)
    if n < window:
        child = snapshots[0].child_id if snapshots else "?"
        warnings.warn(f"child {child!r} has {n} observations, fewer than the window of {window}",
                      stacklevel=2)
        return []
    child = snapshots[0].child_id
    return [ObservationSequence(child, tuple(snapshots[i:i + window])) for i in range(n - window + 1)]


SplitSpec = Union[Sequence[float], Mapping[str, Iterable[str]]]
PARTITIONS = ("train", "validation", "test")


def split_dataset(sequences: Sequence[ObservationSequence], split: SplitSpec = (0.8, 0.1, 0.1),
                  seed: int = 0) -> dict[str, list[ObservationSequence]]:
    """Partition sequences by child so no child appears in two partitions.

    ``split`` is either train/validation/test fractions or a mapping from
    partition name to an explicit list of child ids.
    """
    children = sorted({s.child_id for s in sequences})
    assignment: dict[str, str] = {}
    if isinstance(split, Mapping):
        for part in PARTITIONS:
            for child in split.get(part, ()):
                if child in assignment and assignment[child] != part:
                    raise SplitConflictError(f"child {child!r} listed in both {assignment[child]} and {part}")
                assignment[child] = part
        unknown = set(split) - set(PARTITIONS)
        if unknown:
            raise InvalidInputError(f"unknown partitions {sorted(unknown)}")
    else:
        fractions = [float(f) for f in split]
        if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
            raise InvalidInputError(f"split fractions must be three non-negative values summing to 1, got {split}")
        order = np.random.default_rng(seed).permutation(len(children))
        n = len(children)
        n_train = int(round(fractions[0] * n))
        n_val = min(int(round(fractions[1] * n)), n - n_train)
        for rank, idx in enumerate(order):
            part = "train" if rank < n_train else "validation" if rank < n_train + n_val else "test"
            assignment[children[idx]] = part
    out: dict[str, list[ObservationSequence]] = {p: [] for p in PARTITIONS}
    for seq in sequences:
        part = assignment.get(seq.child_id)
        if part is not None:
            out[part].append(seq)
    for part in PARTITIONS:
        kids = {s.child_id for s in out[part]}
        logger.info("%s: %d sequences from %d children", part, len(out[part]), len(kids))
    return out


def split_counts(parts: Mapping[str, Sequence[ObservationSequence]]) -> dict:
    return {p: {"sequences": len(seqs), "children": len({s.child_id for s in seqs})}
            for p, seqs in parts.items()}


# --- file formats ---------------------------------------------------------

OBS_HEADER = ["child_id", "age_months", "word", "context_label", "state"]


def read_observations(path, lexicon: Lexicon, aliases: Optional[AliasMap] = None,
                      homographs=None) -> dict[str, list[VocabularySnapshot]]:
    """Read an observations CSV into age-ordered snapshots per child."""
    raw: dict[tuple[str, float], dict[int, ComprehensionState]] = {}
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise FileFormatError(path, str(exc)) from exc
    with fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != OBS_HEADER:
            raise FileFormatError(path, f"expected header {','.join(OBS_HEADER)}", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(OBS_HEADER):
                raise FileFormatError(path, f"expected {len(OBS_HEADER)} fields, got {len(row)}", lineno)
            child, age, word, label, state = row
            try:
                age_f = float(age)
                surface = normalize_word(word, aliases) if aliases is not None else word.strip().lower()
                wid = lexicon.id_of(disambiguate(surface, label, homographs or {}))
                st = ComprehensionState.parse(state)
            except (ValueError, AmbiguityError, InvalidInputError) as exc:
                raise FileFormatError(path, str(exc), lineno) from exc
            if not age_f > 0:
                raise FileFormatError(path, f"age_months must be positive, got {age}", lineno)
            states = raw.setdefault((child.strip(), age_f), {})
            if wid in states and states[wid] != st:
                raise FileFormatError(path, f"conflicting states for word {word!r}", lineno)
            if st is not ComprehensionState.NONE:
                states[wid] = st
    out: dict[str, list[VocabularySnapshot]] = {}
    for (child, age) in sorted(raw):
        out.setdefault(child, []).append(VocabularySnapshot(child, age, raw[(child, age)]))
    return out


def write_observations(path, series: Mapping[str, Sequence[VocabularySnapshot]], lexicon: Lexicon) -> None:
    """Write every (child, age, word) row, including explicit ``none`` states."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(OBS_HEADER)
        for child in sorted(series):
            for snap in series[child]:
                for w in lexicon:
                    writer.writerow([child, _fmt_age(snap.age_months), w.surface, w.context_label,
                                     snap.state(w.id).value])


def _fmt_age(age: float) -> str:
    return str(int(age)) if float(age).is_integer() else repr(float(age))


def prepare_sequences(series: Mapping[str, Sequence[VocabularySnapshot]], mode: str = "optimistic",
                      window: int = DEFAULT_WINDOW) -> list[ObservationSequence]:
    """Repair each child's series then cut it into windows."""
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        short = []
        for child in sorted(series):
            snaps = series[child]
            fixed = repair_series(snaps, mode)
            if len(fixed) < window:
                short.append(child)
            out.extend(window_series(fixed, window))
    if short:
        logger.warning("%d children have fewer than %d observations and yield no sequences",
                       len(short), window)
    return out


def dataset_manifest(series: Mapping[str, Sequence[VocabularySnapshot]], mode: str, window: int,
                     seed: int, parts: Optional[Mapping[str, Sequence[ObservationSequence]]] = None) -> dict:
    manifest = {
        "children": {c: len(series[c]) for c in sorted(series)},
        "repair_mode": mode,
        "window": window,
        "split_seed": seed,
    }
    if parts is not None:
        manifest["split"] = {p: sorted({s.child_id for s in seqs}) for p, seqs in parts.items()}
        manifest["counts"] = split_counts(parts)
    return manifest


def write_manifest(path, manifest: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

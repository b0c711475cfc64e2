"""Standardised, disambiguated vocabulary shared by every layer and dataset."""
from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .exceptions import AmbiguityError, FileFormatError, InvalidInputError

logger = logging.getLogger(__name__)

_KEY_RE = re.compile(r"^\s*(?P<surface>[^()]+?)\s*\(\s*(?P<label>[^()]*?)\s*\)\s*$")


@dataclass(frozen=True, order=True)
class StandardWord:
    id: int
    surface: str
    context_label: str = ""

    @property
    def key(self) -> str:
        return format_key(self.surface, self.context_label)


def format_key(surface: str, context_label: str = "") -> str:
    return f"{surface}({context_label})" if context_label else surface


def parse_key(text: str) -> tuple[str, str]:
    """Split ``"drink(beverage)"`` into ``("drink", "beverage")``."""
    m = _KEY_RE.match(text)
    if m:
        return m.group("surface"), m.group("label")
    return text.strip(), ""


class AliasMap:
    """Mapping from ``(raw form, dialect tag)`` to a canonical surface string.

    Lookups without a dialect use the wildcard (``*`` or empty) entry if
    present, otherwise any entry when all dialects agree on the canonical form.
    """

    WILDCARDS = ("", "*")

    def __init__(self, entries: Optional[Mapping[tuple[str, str], str]] = None):
        self.entries: dict[tuple[str, str], str] = {}
        self._by_raw: dict[str, dict[str, str]] = {}
        self._canonical: set[str] = set()
        for (raw, dialect), canonical in (entries or {}).items():
            self.add(raw, dialect, canonical)

    def add(self, raw: str, dialect: str, canonical: str) -> None:
        raw = raw.strip().lower()
        canonical = canonical.strip().lower()
        dialect = dialect.strip()
        self.entries[(raw, dialect)] = canonical
        self._by_raw.setdefault(raw, {})[dialect] = canonical
        self._canonical.add(canonical)

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, raw: str, dialect: Optional[str] = None) -> Optional[str]:
        options = self._by_raw.get(raw)
        if options is None:
            return raw if raw in self._canonical else None
        if dialect is not None and dialect in options:
            return options[dialect]
        for wild in self.WILDCARDS:
            if wild in options:
                return options[wild]
        targets = set(options.values())
        if len(targets) == 1:
            return targets.pop()
        raise InvalidInputError(
            f"raw form {raw!r} maps to {sorted(targets)} depending on dialect; specify a dialect"
        )

    @classmethod
    def from_tsv(cls, path) -> "AliasMap":
        amap = cls()
        for lineno, fields in _read_tsv(path):
            if len(fields) != 3:
                raise FileFormatError(path, "expected raw<TAB>dialect<TAB>canonical", lineno)
            amap.add(*fields)
        return amap

    @classmethod
    def starter(cls) -> "AliasMap":
        with resources.as_file(resources.files("lexigraph.data") / "aliases.tsv") as p:
            return cls.from_tsv(p)


def _read_tsv(path):
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                yield lineno, line.split("\t")
    except OSError as exc:
        raise FileFormatError(path, str(exc)) from exc


def load_homographs(path) -> dict[str, tuple[str, ...]]:
    out = {}
    for lineno, fields in _read_tsv(path):
        if len(fields) != 2:
            raise FileFormatError(path, "expected surface<TAB>label1,label2,...", lineno)
        labels = tuple(sorted(l.strip() for l in fields[1].split(",") if l.strip()))
        if len(labels) < 2:
            raise FileFormatError(path, "a homograph needs at least two labels", lineno)
        out[fields[0].strip().lower()] = labels
    return out


def starter_homographs() -> dict[str, tuple[str, ...]]:
    with resources.as_file(resources.files("lexigraph.data") / "homographs.tsv") as p:
        return load_homographs(p)


def normalize_word(raw: str, aliases: AliasMap, dialect: Optional[str] = None,
                   unmapped: Optional[set] = None) -> str:
    """Return the canonical surface form of ``raw``.

    Forms with no alias entry are lowercased and trimmed; they are added to
    ``unmapped`` when a set is supplied, so callers can report them.
    """
    if raw is None or not raw.strip():
        raise InvalidInputError("cannot normalise an empty word")
    text = raw.strip().lower()
    canonical = aliases.lookup(text, dialect)
    if canonical is None:
        if unmapped is not None:
            unmapped.add(text)
        return text
    return canonical


def disambiguate(surface: str, context_label: str, homographs: Mapping[str, Iterable[str]]) -> str:
    """Return the lexicon key for ``(surface, context_label)``."""
    label = (context_label or "").strip()
    candidates = homographs.get(surface)
    if candidates is not None:
        candidates = tuple(candidates)
        if not label:
            raise AmbiguityError(surface, candidates)
        if label not in candidates:
            raise InvalidInputError(
                f"{label!r} is not a known context label for {surface!r}; expected one of {sorted(candidates)}"
            )
        return format_key(surface, label)
    if label:
        # a label on an unlisted word is kept; it is still a distinct node
        return format_key(surface, label)
    return surface


@dataclass
class CoverageReport:
    words_per_source: dict[str, int] = field(default_factory=dict)
    unmapped: dict[str, list[str]] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"words_per_source": dict(self.words_per_source), "unmapped": dict(self.unmapped)}


class Lexicon:
    """Immutable ordered vocabulary; ids follow the sort of ``(surface, label)``."""

    def __init__(self, pairs: Iterable[tuple[str, str]] = ()):
        unique = sorted(set((s, l or "") for s, l in pairs))
        self._words = tuple(StandardWord(i, s, l) for i, (s, l) in enumerate(unique))
        self._index = {w.key: w.id for w in self._words}

    @classmethod
    def from_keys(cls, keys: Iterable[str]) -> "Lexicon":
        return cls(parse_key(k) for k in keys)

    def __len__(self) -> int:
        return len(self._words)

    def __iter__(self):
        return iter(self._words)

    def __getitem__(self, idx: int) -> StandardWord:
        return self._words[idx]

    def __contains__(self, key) -> bool:
        return key in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, Lexicon) and self._words == other._words

    @property
    def keys(self) -> list[str]:
        return [w.key for w in self._words]

    def id_of(self, key: str) -> int:
        try:
            return self._index[key]
        except KeyError:
            raise InvalidInputError(f"word {key!r} is not in the lexicon") from None

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["id", "surface", "context_label"])
            for w in self._words:
                writer.writerow([w.id, w.surface, w.context_label])

    @classmethod
    def from_csv(cls, path) -> "Lexicon":
        pairs = []
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                pairs.append((row["surface"], row["context_label"]))
        lex = cls(pairs)
        return lex


def _vocab_from_file(path: Path):
    """Yield ``(line, raw word, context label)`` from a norms or observations CSV."""
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise FileFormatError(path, str(exc)) from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return
        header = [h.strip() for h in header]
        if "child_id" in header:
            try:
                wi, li = header.index("word"), header.index("context_label")
            except ValueError:
                raise FileFormatError(path, "observation header needs word and context_label", 1) from None
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(header):
                    raise FileFormatError(path, f"expected {len(header)} fields, got {len(row)}", lineno)
                yield lineno, row[wi], row[li]
        elif header[:2] == ["word_a", "word_b"]:
            for lineno, row in enumerate(reader, start=2):
                if len(row) < 2:
                    raise FileFormatError(path, "expected word_a,word_b,cosine", lineno)
                for cell in row[:2]:
                    s, l = parse_key(cell)
                    yield lineno, s, l
        elif header and header[0] == "word":
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                s, l = parse_key(row[0])
                yield lineno, s, l
        else:
            raise FileFormatError(path, f"unrecognised header {header}", 1)


def build_lexicon(norm_vocab_files: Iterable, observation_vocab_files: Iterable,
                  aliases: Optional[AliasMap] = None,
                  homographs: Optional[Mapping[str, Iterable[str]]] = None,
                  ) -> tuple[Lexicon, CoverageReport]:
    """Union of the normalised, disambiguated words found in every input file."""
    aliases = aliases if aliases is not None else AliasMap()
    homographs = homographs if homographs is not None else {}
    files = [Path(p) for p in list(norm_vocab_files) + list(observation_vocab_files)]
    if not files:
        logger.warning("build_lexicon called with no input files; lexicon is empty")
    pairs: set[tuple[str, str]] = set()
    report = CoverageReport()
    for path in files:
        seen: set[tuple[str, str]] = set()
        unmapped: set[str] = set()
        for lineno, raw, label in _vocab_from_file(path):
            try:
                surface = normalize_word(raw, aliases, unmapped=unmapped)
                key = disambiguate(surface, label, homographs)
            except (InvalidInputError, AmbiguityError) as exc:
                raise FileFormatError(path, str(exc), lineno) from exc
            seen.add(parse_key(key))
        pairs |= seen
        report.words_per_source[str(path)] = len(seen)
        if unmapped:
            report.unmapped[str(path)] = sorted(unmapped)
    if report.unmapped:
        n = sum(len(v) for v in report.unmapped.values())
        logger.info("%d raw forms had no alias entry and were kept lowercased", n)
    return Lexicon(pairs), report

"""Core record types and the line-record dataset file format.

A dataset file is UTF-8 text, one record per line::

    label<TAB>source_id<TAB>text

Lines starting with ``#`` are comments. Comments of the form
``# key=value`` at the top of the file carry dataset metadata (label
scheme, binarization strategy, split tag) so that a test split stays
tagged after a round trip through disk.
"""

from __future__ import annotations

import io
import os
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .errors import DataError

EMOTION_RANKS = (-2, -1, 0, 1, 2)
EMOTION_NAMES = {-2: "furious", -1: "angry", 0: "neutral", 1: "happy", 2: "delighted"}

FIVE_CLASS = "five_class"
TERNARY = "ternary"
BINARY = "binary"
STRATEGIES = ("NR", "NP", "NN")

_RANK_RE = re.compile(r"^[+-]?[0-9]+$")


def parse_rank(value) -> int:
    """Parse ``"-2".."+2"`` (``+`` optional) into an emotion rank; raise ValueError otherwise."""
    if isinstance(value, bool):
        raise ValueError(f"not an emotion rank: {value!r}")
    if isinstance(value, int):
        rank = value
    else:
        text = str(value).strip()
        if not _RANK_RE.match(text):
            raise ValueError(f"not an emotion rank: {value!r}")
        rank = int(text)
    if rank not in EMOTION_RANKS:
        raise ValueError(f"emotion rank out of range: {value!r}")
    return rank


def format_rank(rank: int) -> str:
    return f"+{rank}" if rank > 0 else str(rank)


@dataclass(frozen=True)
class AnnotatedSentence:
    text: str
    label: int
    source_id: str = ""

    def __post_init__(self):
        if not isinstance(self.text, str) or not self.text.strip():
            raise ValueError("sentence text is empty")
        object.__setattr__(self, "label", parse_rank(self.label))

    @property
    def tokens(self) -> list[str]:
        return self.text.split()


@dataclass(frozen=True)
class LabelScheme:
    kind: str = FIVE_CLASS
    strategy: str | None = None

    def __post_init__(self):
        if self.kind not in (FIVE_CLASS, TERNARY, BINARY):
            raise ValueError(f"unknown label scheme {self.kind!r}")
        if self.kind == BINARY and self.strategy not in STRATEGIES:
            raise ValueError("binary datasets must record the NR/NP/NN strategy")
        if self.kind != BINARY and self.strategy is not None:
            raise ValueError("only binary schemes carry a strategy")

    @property
    def classes(self) -> tuple[int, ...]:
        if self.kind == FIVE_CLASS:
            return EMOTION_RANKS
        if self.kind == TERNARY:
            return (-1, 0, 1)
        return (-1, 1)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def index(self, label: int) -> int:
        try:
            return self.classes.index(label)
        except ValueError:
            raise DataError(f"label {label} is not valid for scheme {self.kind}") from None

    def label(self, index: int) -> int:
        return self.classes[index]

    def class_names(self) -> list[str]:
        if self.kind == FIVE_CLASS:
            return [format_rank(c) for c in self.classes]
        names = {-1: "negative", 0: "neutral", 1: "positive"}
        return [names[c] for c in self.classes]


@dataclass
class Dataset(Sequence):
    """Ordered labeled sentences plus the label scheme and split tag."""

    sentences: list = field(default_factory=list)
    scheme: LabelScheme = field(default_factory=LabelScheme)
    split: str | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.sentences = list(self.sentences)
        allowed = set(self.scheme.classes)
        for i, s in enumerate(self.sentences):
            if s.label not in allowed:
                raise DataError(f"record {i}: label {s.label} not in scheme {self.scheme.kind}")

    def __len__(self) -> int:
        return len(self.sentences)

    def __getitem__(self, item):
        return self.sentences[item]

    def __iter__(self) -> Iterator[AnnotatedSentence]:
        return iter(self.sentences)

    @property
    def labels(self) -> list[int]:
        return [s.label for s in self.sentences]

    def class_indices(self) -> list[int]:
        return [self.scheme.index(s.label) for s in self.sentences]

    def counts(self) -> dict[int, int]:
        out = {c: 0 for c in self.scheme.classes}
        for s in self.sentences:
            out[s.label] += 1
        return out

    def derive(self, sentences: Iterable[AnnotatedSentence], **changes) -> "Dataset":
        """Copy of this dataset with new records; scheme/split/meta carried unless overridden."""
        kwargs = dict(scheme=self.scheme, split=self.split, meta=dict(self.meta))
        kwargs.update(changes)
        return Dataset(list(sentences), **kwargs)


def _header(dataset: Dataset) -> list[str]:
    lines = [f"# scheme={dataset.scheme.kind}"]
    if dataset.scheme.strategy:
        lines.append(f"# strategy={dataset.scheme.strategy}")
    if dataset.split:
        lines.append(f"# split={dataset.split}")
    for key in sorted(dataset.meta):
        value = str(dataset.meta[key])
        if "\n" in value or "=" in key:
            raise DataError(f"metadata entry {key!r} cannot be written to a dataset header")
        lines.append(f"# {key}={value}")
    return lines


def write_dataset(sentences, path) -> None:
    """Write a Dataset (or plain sequence of AnnotatedSentence) to ``path``."""
    dataset = sentences if isinstance(sentences, Dataset) else Dataset(list(sentences))
    buf = io.StringIO()
    for line in _header(dataset):
        buf.write(line + "\n")
    for i, s in enumerate(dataset):
        for name, value in (("source_id", s.source_id), ("text", s.text)):
            if any(ch in value for ch in "\t\n\r"):
                raise DataError(f"record {i}: {name} contains a tab or newline")
        buf.write(f"{format_rank(s.label)}\t{s.source_id}\t{s.text}\n")
    with open(os.fspath(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(buf.getvalue())


def read_dataset(path) -> Dataset:
    with open(os.fspath(path), encoding="utf-8", newline="") as fh:
        return parse_dataset_lines(fh)


def parse_dataset_lines(lines: Iterable[str]) -> Dataset:
    header: dict[str, str] = {}
    sentences = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body and not sentences:
                key, _, value = body.partition("=")
                header[key.strip()] = value
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise DataError(f"line {lineno}: expected 3 tab-separated fields, got {len(fields)}")
        label, source_id, text = fields
        try:
            sentences.append(AnnotatedSentence(text, parse_rank(label), source_id))
        except ValueError as exc:
            raise DataError(f"line {lineno}: {exc}") from None
    kind = header.pop("scheme", FIVE_CLASS)
    strategy = header.pop("strategy", None)
    split = header.pop("split", None)
    try:
        scheme = LabelScheme(kind, strategy)
    except ValueError as exc:
        raise DataError(f"dataset header: {exc}") from None
    return Dataset(sentences, scheme=scheme, split=split, meta=header)

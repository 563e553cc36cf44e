"""SentiPers-style XML parsing, distribution statistics and dataset file IO."""

from __future__ import annotations

import json
import os
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import asdict, dataclass, field
from xml.parsers import expat

from .dataset import (
    EMOTION_RANKS,
    AnnotatedSentence,
    Dataset,
    parse_rank,
    read_dataset,
    write_dataset,
)
from .errors import ConfigError, DataError

__all__ = [
    "CorpusSchema",
    "CorpusStats",
    "ParseResult",
    "SkippedSentence",
    "parse_corpus",
    "load_schema",
    "stats",
    "read_dataset",
    "write_dataset",
]


@dataclass(frozen=True)
class CorpusSchema:
    """Where sentences and their polarity live in the XML.

    ``sentence_path`` is an ElementTree path evaluated from the root.
    ``text_path`` (optional) selects a child element holding the text;
    otherwise the sentence element's full text content is used.
    """

    sentence_path: str = ".//Sentence"
    polarity_attr: str = "Polarity"
    id_attr: str | None = "ID"
    text_path: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "CorpusSchema":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown corpus schema keys: {sorted(unknown)}")
        return cls(**data)


def load_schema(path) -> CorpusSchema:
    if path is None:
        return CorpusSchema()
    with open(os.fspath(path), encoding="utf-8") as fh:
        try:
            return CorpusSchema.from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"schema file {path}: {exc}") from None


@dataclass(frozen=True)
class SkippedSentence:
    position: int
    source_id: str
    reason: str
    value: str | None = None


@dataclass
class ParseResult:
    sentences: list
    skipped: list = field(default_factory=list)
    total_elements: int = 0

    def dataset(self) -> Dataset:
        return Dataset(self.sentences)


@dataclass
class CorpusStats:
    counts: dict
    total: int

    def as_dict(self) -> dict:
        return asdict(self)


def _byte_offset(data: bytes) -> int:
    parser = expat.ParserCreate()
    try:
        parser.Parse(data, True)
    except expat.ExpatError:
        return parser.ErrorByteIndex
    return -1


def parse_corpus(xml_source, schema: CorpusSchema | None = None) -> ParseResult:
    """Extract every sentence element whose polarity is a valid emotion rank.

    ``xml_source`` may be bytes, a path or a binary file object. Sentences
    with missing, unparseable or out-of-range polarity, or with empty text,
    are listed in ``ParseResult.skipped``; ``len(sentences) + len(skipped)``
    always equals the number of matched sentence elements.
    """
    schema = schema or CorpusSchema()
    if isinstance(xml_source, (bytes, bytearray)):
        data = bytes(xml_source)
    elif hasattr(xml_source, "read"):
        data = xml_source.read()
    else:
        with open(os.fspath(xml_source), "rb") as fh:
            data = fh.read()

    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        offset = _byte_offset(data)
        raise DataError(f"malformed XML at byte offset {offset}: {exc}") from None

    elements = root.findall(schema.sentence_path)
    if root.tag == schema.sentence_path.rsplit("/", 1)[-1]:
        elements = [root] + elements
    result = ParseResult(sentences=[], total_elements=len(elements))
    for pos, elem in enumerate(elements):
        source_id = elem.get(schema.id_attr, "") if schema.id_attr else ""
        source_id = source_id or str(pos)
        if schema.text_path:
            node = elem.find(schema.text_path)
            raw = "".join(node.itertext()) if node is not None else ""
        else:
            raw = "".join(elem.itertext())
        text = raw.replace("\t", " ").replace("\r", " ").replace("\n", " ").strip()
        source_id = source_id.replace("\t", " ").replace("\n", " ")
        value = elem.get(schema.polarity_attr)
        if value is None:
            result.skipped.append(SkippedSentence(pos, source_id, "missing_polarity"))
            continue
        try:
            rank = parse_rank(value)
        except ValueError:
            result.skipped.append(SkippedSentence(pos, source_id, "invalid_polarity", value))
            continue
        if not text:
            result.skipped.append(SkippedSentence(pos, source_id, "empty_text", value))
            continue
        result.sentences.append(AnnotatedSentence(text, rank, source_id))
    return result


def stats(sentences) -> CorpusStats:
    counts = Counter(s.label for s in sentences)
    full = {rank: counts.get(rank, 0) for rank in EMOTION_RANKS}
    for label, n in counts.items():
        full.setdefault(label, n)
    return CorpusStats(counts=full, total=sum(full.values()))

"""Five-step text cleaning: normalize, punctuation, single characters, digits, lemma.

The normalizer is a small documented subset of what Persian toolkits do:

* Arabic code points that have Persian counterparts are mapped
  (``ي ى`` to ``ی``, ``ك`` to ``ک``, ``ة`` to ``ه``) and tatweel is removed.
* runs of ZWNJ collapse to one; ZWNJ next to whitespace or at either end
  of the text is dropped.
* runs of whitespace collapse to a single space; ends are trimmed.
* whitespace between a word and a detached suffix (``ها``, ``های``,
  ``تر``, ``ترین`` ...) or after the verbal prefixes ``می``/``نمی`` becomes
  a ZWNJ.

Tokens are split on whitespace only, so ZWNJ-joined compounds stay one
token.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field

from .dataset import AnnotatedSentence, Dataset
from .errors import DataError

ZWNJ = "‌"

CHAR_MAP = {
    "ي": "ی",  # ARABIC YEH -> FARSI YEH
    "ى": "ی",  # ALEF MAKSURA -> FARSI YEH
    "ك": "ک",  # ARABIC KAF -> KEHEH
    "ة": "ه",  # TEH MARBUTA -> HEH
    "ـ": None,  # TATWEEL
}
_CHAR_TABLE = str.maketrans(CHAR_MAP)

SUFFIXES = (
    "ها", "های", "هایی", "هایم", "هایت", "هایش", "هایمان", "هایتان", "هایشان",
    "تر", "ترین", "تری",
)
PREFIXES = ("می", "نمی")

PERSIAN_PUNCTUATION = "؟،؛«»٪٫٬…–—“”‘’"
PUNCTUATION = frozenset(string.punctuation + PERSIAN_PUNCTUATION)
DIGITS = frozenset("0123456789" "۰۱۲۳۴۵۶۷۸۹" "٠١٢٣٤٥٦٧٨٩")

_LETTER = "[ء-غف-يپچژکگی]"
_SUFFIX_RE = re.compile(
    rf"(?<={_LETTER})\s+(?=(?:{'|'.join(sorted(SUFFIXES, key=len, reverse=True))})(?:\s|$))"
)
_PREFIX_RE = re.compile(rf"(?:(?<=\s)|^)({'|'.join(PREFIXES)})\s+(?={_LETTER})")
_ZWNJ_RUN = re.compile(f"{ZWNJ}+")
_ZWNJ_EDGE = re.compile(rf"{ZWNJ}(?=\s|$)|(?:(?<=\s)|^){ZWNJ}")
_WS = re.compile(r"\s+")

STEPS = ("normalize", "punctuation", "single_chars", "digits", "lemmatize")


def normalize(text: str) -> str:
    text = text.translate(_CHAR_TABLE)
    text = _ZWNJ_RUN.sub(ZWNJ, text)
    text = _ZWNJ_EDGE.sub("", text)
    text = _WS.sub(" ", text).strip()
    text = _SUFFIX_RE.sub(ZWNJ, text)
    text = _PREFIX_RE.sub(lambda m: m.group(1) + ZWNJ, text)
    return text


def tokenize(text: str) -> list[str]:
    return text.split()


def strip_punctuation(text: str) -> str:
    """Replace every punctuation character with a space (so words stay apart)."""
    return "".join(" " if ch in PUNCTUATION else ch for ch in text)


def strip_single_chars(tokens: list[str]) -> list[str]:
    return [t for t in tokens if len(t.replace(ZWNJ, "")) > 1]


def strip_digits(text: str) -> str:
    return "".join(ch for ch in text if ch not in DIGITS)


@dataclass(frozen=True)
class Token:
    surface: str
    lemma: str = ""

    def __post_init__(self):
        if not self.surface:
            raise ValueError("empty token")
        if not self.lemma:
            object.__setattr__(self, "lemma", self.surface)


class LemmaDictionary(dict):
    """surface form -> lemma. Keys and values are stored normalized."""

    def __init__(self, entries=None):
        super().__init__()
        for surface, lemma in dict(entries or {}).items():
            self[normalize(surface)] = normalize(lemma)

    @classmethod
    def load(cls, path) -> "LemmaDictionary":
        entries = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\r\n")
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                    raise DataError(f"{path}:{lineno}: expected 'surface<TAB>lemma'")
                entries[parts[0].strip()] = parts[1].strip()
        return cls(entries)


def lemmatize(tokens, dictionary: LemmaDictionary | None = None) -> list[Token]:
    dictionary = dictionary or {}
    out = []
    for tok in tokens:
        surface = tok.surface if isinstance(tok, Token) else tok
        out.append(Token(surface, dictionary.get(surface, surface)))
    return out


@dataclass
class TokenizedSentence:
    tokens: list
    label: int
    source_id: str = ""
    trace: dict | None = None

    @property
    def empty(self) -> bool:
        return not self.tokens

    @property
    def lemmas(self) -> list[str]:
        return [t.lemma for t in self.tokens]

    def to_annotated(self) -> AnnotatedSentence:
        if self.empty:
            raise DataError(f"sentence {self.source_id!r} is empty after preprocessing")
        return AnnotatedSentence(" ".join(self.lemmas), self.label, self.source_id)


def clean_tokens(text: str, dictionary=None, trace: dict | None = None) -> list[Token]:
    """Run the five steps on raw text, in order, and return the lemmatized tokens."""
    normalized = normalize(text)
    tokens = tokenize(normalized)
    if trace is not None:
        trace["normalize"] = list(tokens)
    tokens = [piece for tok in tokens for piece in strip_punctuation(tok).split()]
    if trace is not None:
        trace["punctuation"] = list(tokens)
    tokens = strip_single_chars(tokens)
    if trace is not None:
        trace["single_chars"] = list(tokens)
    # a token that digit removal shrinks to one character is dropped too
    tokens = strip_single_chars([strip_digits(tok) for tok in tokens])
    if trace is not None:
        trace["digits"] = list(tokens)
    lemmas = lemmatize(tokens, dictionary)
    if trace is not None:
        trace["lemmatize"] = [t.lemma for t in lemmas]
    return lemmas


def pipeline(sentence: AnnotatedSentence, dictionary=None, trace: bool = False) -> TokenizedSentence:
    steps: dict | None = {} if trace else None
    tokens = clean_tokens(sentence.text, dictionary, steps)
    return TokenizedSentence(tokens, sentence.label, sentence.source_id, steps)


@dataclass
class PreprocessReport:
    input_count: int = 0
    output_count: int = 0
    empty_after_preprocess: list = field(default_factory=list)


def preprocess_dataset(dataset: Dataset, dictionary=None) -> tuple[Dataset, PreprocessReport]:
    """Apply :func:`pipeline` to every sentence; empty results are dropped and listed."""
    report = PreprocessReport(input_count=len(dataset))
    kept = []
    for s in dataset:
        result = pipeline(s, dictionary)
        if result.empty:
            report.empty_after_preprocess.append(s.source_id)
            continue
        kept.append(result.to_annotated())
    report.output_count = len(kept)
    meta = dict(dataset.meta)
    meta["preprocessed"] = "1"
    return dataset.derive(kept, meta=meta), report

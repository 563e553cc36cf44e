"""Vocabulary, fixed-width integer encoding and pretrained vector loading."""

from __future__ import annotations

import hashlib
import os
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError

PAD, UNK = 0, 1
PAD_TOKEN, UNK_TOKEN = "<pad>", "<unk>"
MAX_LEN = 257


class Vocabulary:
    """word -> index with ``<pad>`` at 0 and ``<unk>`` at 1."""

    def __init__(self, words=()):
        self.itos = [PAD_TOKEN, UNK_TOKEN]
        self.stoi = {PAD_TOKEN: PAD, UNK_TOKEN: UNK}
        for w in words:
            if w in self.stoi:
                raise DataError(f"duplicate vocabulary entry {w!r}")
            self.stoi[w] = len(self.itos)
            self.itos.append(w)

    def __len__(self):
        return len(self.itos)

    def __contains__(self, word):
        return word in self.stoi

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.itos == other.itos

    def index(self, word: str) -> int:
        return self.stoi.get(word, UNK)

    @property
    def words(self) -> list[str]:
        return self.itos[2:]

    def digest(self) -> str:
        h = hashlib.sha256()
        for w in self.itos:
            h.update(w.encode("utf-8") + b"\n")
        return h.hexdigest()

    def save(self, path):
        with open(os.fspath(path), "w", encoding="utf-8", newline="\n") as fh:
            for w in self.words:
                fh.write(w + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(os.fspath(path), encoding="utf-8") as fh:
            return cls(line.rstrip("\r\n") for line in fh if line.rstrip("\r\n"))


def _token_lists(data):
    for item in data:
        if isinstance(item, str):
            yield item.split()
        elif hasattr(item, "text"):
            yield item.text.split()
        else:
            yield list(item)


def build_vocab(train_data, max_size: int = 2000) -> Vocabulary:
    """Rank words by frequency, ties broken by first appearance; keep ``max_size - 2``."""
    if max_size < 2:
        raise ConfigError("max_size must leave room for <pad> and <unk>")
    freq: Counter = Counter()
    first: dict[str, int] = {}
    for tokens in _token_lists(train_data):
        for tok in tokens:
            if tok not in first:
                first[tok] = len(first)
            freq[tok] += 1
    if not freq:
        raise DataError("cannot build a vocabulary from an empty corpus")
    ranked = sorted(first, key=lambda w: (-freq[w], first[w]))
    ranked = [w for w in ranked if w not in (PAD_TOKEN, UNK_TOKEN)]
    return Vocabulary(ranked[: max_size - 2])


@dataclass
class EncodedSentence:
    indices: np.ndarray
    true_length: int


def encode(tokens, vocab: Vocabulary, max_len: int = MAX_LEN) -> EncodedSentence:
    if isinstance(tokens, str):
        tokens = tokens.split()
    ids = [vocab.index(t) for t in list(tokens)[:max_len]]
    out = np.zeros(max_len, dtype=np.int64)
    out[: len(ids)] = ids
    return EncodedSentence(out, len(ids))


def decode(encoded: EncodedSentence, vocab: Vocabulary) -> list[str]:
    return [vocab.itos[i] for i in encoded.indices[: encoded.true_length]]


def encode_batch(sentences, vocab: Vocabulary, max_len: int = MAX_LEN) -> tuple[np.ndarray, np.ndarray]:
    """Encode a list of token lists/texts into ``([N, max_len] ids, [N] lengths)``."""
    rows = [encode(s.text if hasattr(s, "text") else s, vocab, max_len) for s in sentences]
    ids = np.stack([r.indices for r in rows]) if rows else np.zeros((0, max_len), dtype=np.int64)
    lengths = np.array([r.true_length for r in rows], dtype=np.int64)
    return ids, lengths


@dataclass
class EmbeddingMatrix:
    matrix: np.ndarray
    trainable: bool = True
    coverage: float | None = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


def random_embedding(vocab_size: int, dim: int, seed: int = 0, scale: float = 0.05) -> EmbeddingMatrix:
    rng = np.random.default_rng(seed)
    m = rng.uniform(-scale, scale, size=(vocab_size, dim))
    m[PAD] = 0.0
    return EmbeddingMatrix(m, trainable=True)


def read_vectors(path) -> tuple[dict[str, np.ndarray], int]:
    """Parse a textual vector file (optional ``count dim`` header line)."""
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with open(os.fspath(path), encoding="utf-8", errors="strict") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip().split(" ")
            if not parts or parts == [""]:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                dim = int(parts[1])
                continue
            word, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
            if len(values) != dim:
                raise DataError(f"{path}:{lineno}: expected {dim} values, got {len(values)}")
            try:
                vectors[word] = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric vector component") from None
    if dim is None:
        raise DataError(f"{path}: no vectors found")
    return vectors, dim


def load_pretrained(vec_file, vocab: Vocabulary, seed: int = 0, scale: float = 0.05,
                    trainable: bool = False) -> EmbeddingMatrix:
    """Copy file vectors for covered words; other rows get seeded uniform noise, padding stays zero."""
    vectors, dim = read_vectors(vec_file)
    rng = np.random.default_rng(seed)
    matrix = rng.uniform(-scale, scale, size=(len(vocab), dim))
    matrix[PAD] = 0.0
    covered = 0
    for i, w in enumerate(vocab.itos):
        if i in (PAD, UNK):
            continue
        vec = vectors.get(w)
        if vec is not None:
            matrix[i] = vec
            covered += 1
    n_words = len(vocab) - 2
    return EmbeddingMatrix(matrix, trainable=trainable, coverage=covered / n_words if n_words else 0.0)

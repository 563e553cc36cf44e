"""Synthetic corpora and side files for tests, demos and acceptance runs.

None of this is real SentiPers data; words are random strings over the
Persian alphabet.
"""

from __future__ import annotations

import os
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .dataset import AnnotatedSentence, Dataset, format_rank

PERSIAN_LETTERS = "ابپتثجچحخدذرزژسشصضطظعغفقکگلمنوهی"
REFERENCE_COUNTS = {-2: 40, -1: 697, 0: 3152, 1: 2184, 2: 1342}


def pseudo_words(n: int, seed: int = 0, min_len: int = 3, max_len: int = 7, exclude=()) -> list[str]:
    rng = np.random.default_rng(seed)
    seen = set(exclude)
    out = []
    while len(out) < n:
        size = int(rng.integers(min_len, max_len + 1))
        word = "".join(PERSIAN_LETTERS[i] for i in rng.integers(0, len(PERSIAN_LETTERS), size))
        if word not in seen:
            seen.add(word)
            out.append(word)
    return out


def corpus_xml(sentences) -> bytes:
    """Serialize sentences in the default corpus schema (``<Sentence ID= Polarity=>``)."""
    parts = ['<?xml version="1.0" encoding="UTF-8"?>', "<Corpus>", "<Document ID=\"d0\">"]
    for s in sentences:
        parts.append(f"<Sentence ID={quoteattr(s.source_id)} Polarity={quoteattr(format_rank(s.label))}>"
                     f"{escape(s.text)}</Sentence>")
    parts += ["</Document>", "</Corpus>"]
    return "\n".join(parts).encode("utf-8")


def distribution_corpus(counts=None, seed: int = 0, min_len: int = 3, max_len: int = 12) -> Dataset:
    """Random sentences with exactly ``counts[rank]`` sentences per emotion rank."""
    counts = dict(REFERENCE_COUNTS if counts is None else counts)
    rng = np.random.default_rng(seed)
    words = pseudo_words(300, seed)
    labels = np.concatenate([np.full(n, r) for r, n in sorted(counts.items())]).astype(int)
    rng.shuffle(labels)
    sentences = []
    for i, label in enumerate(labels):
        k = int(rng.integers(min_len, max_len + 1))
        text = " ".join(words[j] for j in rng.integers(0, len(words), k))
        sentences.append(AnnotatedSentence(text, int(label), f"s{i}"))
    return Dataset(sentences)


def separable_corpus(n: int = 200, seed: int = 0, n_fillers: int = 10, min_len: int = 2,
                     max_len: int = 6) -> tuple[Dataset, dict]:
    """Balanced two-polarity corpus; every sentence contains its class's marker word.

    Filler words are drawn without replacement within a sentence, so no
    filler carries a term-frequency spike that could compete with the marker.

    Negative sentences carry ranks -2/-1, positive ones +1/+2, so the NR
    reduction keeps all of them. Returns the dataset and ``{"negative",
    "positive", "fillers"}`` word lists.
    """
    rng = np.random.default_rng(seed)
    markers = pseudo_words(2, seed + 1000, min_len=5, max_len=5)
    fillers = pseudo_words(n_fillers, seed, exclude=markers)
    sentences = []
    for i in range(n):
        positive = i % 2 == 1
        rank = int(rng.choice([1, 2])) if positive else int(rng.choice([-2, -1]))
        k = int(rng.integers(min_len, max_len + 1))
        tokens = [fillers[j] for j in rng.choice(n_fillers, k, replace=False)]
        tokens.insert(int(rng.integers(0, k + 1)), markers[1] if positive else markers[0])
        if rng.random() < 0.3:
            tokens[-1] += "!"
        sentences.append(AnnotatedSentence(" ".join(tokens), rank, f"sep{i}"))
    order = rng.permutation(n)
    return Dataset([sentences[i] for i in order]), {
        "negative": [markers[0]], "positive": [markers[1]], "fillers": fillers}


def noisy_corpus(n: int = 400, seed: int = 0, positive_fraction: float = 0.8, label_noise: float = 0.1,
                 family_size: int = 10, zipf: float = 1.2, n_fillers: int = 60, cue_words: int = 1,
                 min_len: int = 5, max_len: int = 12) -> tuple[Dataset, str, list[str]]:
    """Imbalanced corpus with label noise and Zipf-distributed sentiment synonyms.

    Each polarity owns a family of ``family_size`` synonymous cue words;
    the first is common, the rest are progressively rarer. The returned
    translation table (``fa>en`` / ``en>fa`` sections) maps cue ``j`` to an
    English gloss and that gloss back to cue ``j+1`` of the same family,
    so a round trip swaps a word for one of its synonyms, much as a real
    back-translation paraphrases. Filler words pass through unchanged.

    Returns ``(dataset, table_text, vocabulary_words)``.
    """
    rng = np.random.default_rng(seed)
    cues = pseudo_words(2 * family_size, seed + 7919, min_len=4, max_len=6)
    families = {-1: cues[:family_size], 1: cues[family_size:]}
    fillers = pseudo_words(n_fillers, seed + 31, exclude=cues)
    weights = 1.0 / np.arange(1, family_size + 1) ** zipf
    weights /= weights.sum()
    sentences = []
    for i in range(n):
        polarity = 1 if rng.random() < positive_fraction else -1
        k = int(rng.integers(min_len, max_len + 1))
        tokens = [fillers[j] for j in rng.integers(0, n_fillers, k)]
        for _ in range(cue_words):
            cue = families[polarity][int(rng.choice(family_size, p=weights))]
            tokens.insert(int(rng.integers(0, len(tokens) + 1)), cue)
        label = polarity if rng.random() >= label_noise else -polarity
        rank = label * int(rng.choice([1, 2]))
        sentences.append(AnnotatedSentence(" ".join(tokens), rank, f"noisy{i}"))

    lines = ["[fa>en]"]
    glosses = {}
    for polarity, family in families.items():
        tag = "pos" if polarity > 0 else "neg"
        for j, word in enumerate(family):
            glosses[word] = f"{tag}{j}"
            lines.append(f"{word}\t{tag}{j}")
    lines.append("[en>fa]")
    for polarity, family in families.items():
        tag = "pos" if polarity > 0 else "neg"
        for j in range(family_size):
            lines.append(f"{tag}{j}\t{family[(j + 1) % family_size]}")
    lines.append("[synonyms]")
    for family in families.values():
        for word in family:
            lines.append(f"{word}\t{','.join(w for w in family if w != word)}")
    return Dataset(sentences), "\n".join(lines) + "\n", cues + fillers


def write_vectors(words, path, dim: int = 300, seed: int = 0, header: bool = True) -> None:
    """Write random vectors in the textual ``word v1 ... v_dim`` format."""
    rng = np.random.default_rng(seed)
    words = list(words)
    with open(os.fspath(path), "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(f"{len(words)} {dim}\n")
        for w in words:
            vec = rng.standard_normal(dim) * 0.5
            fh.write(w + " " + " ".join(f"{v:.6f}" for v in vec) + "\n")


def write_lemma_dict(entries: dict, path) -> None:
    with open(os.fspath(path), "w", encoding="utf-8", newline="\n") as fh:
        for surface, lemma in entries.items():
            fh.write(f"{surface}\t{lemma}\n")

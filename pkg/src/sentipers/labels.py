"""Label scheme reductions (five-class -> ternary -> binary) and the train/test split."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .dataset import (
    BINARY,
    FIVE_CLASS,
    STRATEGIES,
    TERNARY,
    AnnotatedSentence,
    Dataset,
    LabelScheme,
)
from .errors import ConfigError

logger = logging.getLogger(__name__)

NEGATIVE, NEUTRAL, POSITIVE = -1, 0, 1


def _polarity(rank: int) -> int:
    return (rank > 0) - (rank < 0)


def _relabel(s: AnnotatedSentence, label: int) -> AnnotatedSentence:
    return AnnotatedSentence(s.text, label, s.source_id)


def to_ternary(dataset: Dataset) -> Dataset:
    if dataset.scheme.kind == TERNARY:
        return dataset.derive(dataset.sentences)
    if dataset.scheme.kind != FIVE_CLASS:
        raise ConfigError(f"to_ternary expects a five-class dataset, got {dataset.scheme.kind}")
    return dataset.derive(
        [_relabel(s, _polarity(s.label)) for s in dataset], scheme=LabelScheme(TERNARY)
    )


def binarize(dataset: Dataset, strategy: str) -> Dataset:
    """Reduce to {negative, positive}.

    NR drops neutral rows, NP folds them into positive, NN into negative.
    """
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown binarization strategy {strategy!r}; expected one of {STRATEGIES}")
    if dataset.scheme.kind == BINARY:
        raise ConfigError("dataset is already binary")
    out = []
    for s in to_ternary(dataset):
        label = s.label
        if label == NEUTRAL:
            if strategy == "NR":
                continue
            label = POSITIVE if strategy == "NP" else NEGATIVE
        out.append(s if label == s.label else _relabel(s, label))
    return dataset.derive(out, scheme=LabelScheme(BINARY, strategy))


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.75
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


def _allocate(sizes: list[int], fraction: float) -> list[int]:
    """Per-class train counts summing to floor(fraction * total) (largest remainder)."""
    target = math.floor(fraction * sum(sizes))
    exact = [fraction * n for n in sizes]
    alloc = [math.floor(x) for x in exact]
    order = sorted(range(len(sizes)), key=lambda i: (-(exact[i] - alloc[i]), i))
    for i in order:
        if sum(alloc) >= target:
            break
        if alloc[i] < sizes[i]:
            alloc[i] += 1
    return alloc


def split(dataset: Dataset, spec: SplitSpec | None = None) -> tuple[Dataset, Dataset]:
    """Deterministic (stratified by default) train/test partition; record order is kept."""
    spec = spec or SplitSpec()
    n = len(dataset)
    if n == 0:
        raise ConfigError("cannot split an empty dataset")
    rng = np.random.default_rng(spec.seed)
    train_idx: list[int] = []
    if spec.stratified:
        by_class: dict[int, list[int]] = {}
        for i, s in enumerate(dataset):
            by_class.setdefault(s.label, []).append(i)
        labels = sorted(by_class)
        small = [c for c in labels if len(by_class[c]) < 2]
        for c in small:
            logger.warning("class %s has fewer than 2 members; it goes entirely to train", c)
            train_idx.extend(by_class[c])
        regular = [c for c in labels if c not in small]
        alloc = _allocate([len(by_class[c]) for c in regular], spec.train_fraction)
        for c, k in zip(regular, alloc):
            members = np.array(by_class[c])
            rng.shuffle(members)
            train_idx.extend(members[:k].tolist())
    else:
        perm = rng.permutation(n)
        train_idx = perm[: math.floor(spec.train_fraction * n)].tolist()
    chosen = set(train_idx)
    meta = dict(dataset.meta)
    meta.update(split_seed=str(spec.seed), stratified=str(int(spec.stratified)),
                train_fraction=repr(spec.train_fraction))
    train = dataset.derive([s for i, s in enumerate(dataset) if i in chosen], split="train", meta=meta)
    test = dataset.derive([s for i, s in enumerate(dataset) if i not in chosen], split="test", meta=meta)
    return train, test

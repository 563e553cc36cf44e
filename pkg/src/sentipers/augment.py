"""Training-set augmentation: class rebalancing, back-translation, synonym substitution."""

from __future__ import annotations

import logging
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dataset import AnnotatedSentence, Dataset
from .errors import ConfigError, DataError
from .preprocess import normalize

logger = logging.getLogger(__name__)

METHODS = ("balanced", "translation", "synonym")


@dataclass
class AugmentationReport:
    method: str
    input_count: int = 0
    output_count: int = 0
    before: dict = field(default_factory=dict)
    after: dict = field(default_factory=dict)
    skipped: int = 0
    failures: int = 0

    @property
    def failure_rate(self) -> float:
        return self.failures / self.input_count if self.input_count else 0.0

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "input_count": self.input_count,
            "output_count": self.output_count,
            "before": {str(k): v for k, v in self.before.items()},
            "after": {str(k): v for k, v in self.after.items()},
            "skipped": self.skipped,
            "failures": self.failures,
            "failure_rate": self.failure_rate,
        }


def _check_train(dataset: Dataset):
    if dataset.split == "test":
        raise DataError("refusing to augment a dataset tagged as a test split")


def _finish(report: AugmentationReport, dataset: Dataset, out: list, method: str) -> Dataset:
    result = dataset.derive(out)
    result.meta["augmented"] = method
    report.output_count = len(result)
    report.after = result.counts()
    return result


# -- balancing ---------------------------------------------------------------

def resolve_policy(policy, counts: dict) -> dict:
    """Turn a policy into per-class targets.

    ``policy`` is ``"median"``, ``"mean"``, ``"max"`` (raise every class to the
    richest, trimming nothing), ``("uniform", n)``, ``"uniform:n"``, an int
    (uniform) or an explicit ``{label: count}`` map.
    """
    present = {c: n for c, n in counts.items() if n > 0}
    if isinstance(policy, str) and policy.startswith("uniform:"):
        policy = ("uniform", int(policy.split(":", 1)[1]))
    if isinstance(policy, int):
        policy = ("uniform", policy)
    if policy == "median":
        target = int(round(statistics.median(present.values())))
        return {c: target for c in present}
    if policy == "max":
        target = max(present.values(), default=0)
        return {c: target for c in present}
    if policy == "mean":
        target = int(round(statistics.mean(present.values())))
        return {c: target for c in present}
    if isinstance(policy, tuple) and len(policy) == 2 and policy[0] == "uniform":
        n = int(policy[1])
        if n < 0:
            raise ConfigError("uniform target must be non-negative")
        return {c: n for c in present}
    if isinstance(policy, dict):
        targets = {int(c): int(n) for c, n in policy.items()}
        for c, n in targets.items():
            if n < 0:
                raise ConfigError(f"negative target for class {c}")
            if n > 0 and counts.get(c, 0) == 0:
                raise ConfigError(f"target {n} requested for empty class {c}")
        return targets
    raise ConfigError(f"unknown balance policy {policy!r}")


def balance(dataset: Dataset, policy="median", seed: int = 0):
    """Resample each class to its target count.

    Rich classes are subsampled without replacement (kept rows stay in
    their original order); poor classes keep every row and get extra
    duplicates drawn with replacement, appended after the originals.
    """
    _check_train(dataset)
    counts = dataset.counts()
    targets = resolve_policy(policy, counts)
    report = AugmentationReport("balanced", input_count=len(dataset), before=counts)
    rng = np.random.default_rng(seed)
    by_class: dict[int, list[int]] = {}
    for i, s in enumerate(dataset):
        by_class.setdefault(s.label, []).append(i)
    keep: set[int] = set()
    extras: list[int] = []
    for c in dataset.scheme.classes:
        members = by_class.get(c, [])
        target = targets.get(c, len(members))
        if target <= len(members):
            chosen = rng.choice(len(members), size=target, replace=False) if target < len(members) else range(len(members))
            keep.update(members[j] for j in chosen)
        else:
            keep.update(members)
            extras.extend(members[j] for j in rng.integers(0, len(members), size=target - len(members)))
    out = [s for i, s in enumerate(dataset) if i in keep]
    out.extend(AnnotatedSentence(dataset[i].text, dataset[i].label, f"{dataset[i].source_id}#dup")
               for i in extras)
    return _finish(report, dataset, out, "balanced"), report


# -- variant generation -------------------------------------------------------

def _default_clean(text: str) -> str:
    return normalize(text)


def _generate(dataset: Dataset, make_variant, workers: int):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(make_variant, range(len(dataset))))
    return [make_variant(i) for i in range(len(dataset))]


def _assemble(dataset: Dataset, results, report: AugmentationReport, tag: str) -> list:
    out = []
    for s, (status, text) in zip(dataset, results):
        out.append(s)
        if status == "ok":
            out.append(AnnotatedSentence(text, s.label, f"{s.source_id}#{tag}"))
        elif status == "failed":
            report.failures += 1
            report.skipped += 1
        else:
            report.skipped += 1
    return out


def translate_augment(dataset: Dataset, translator, middle_lang: str = "en", source_lang: str = "fa",
                      clean=None, workers: int = 1):
    """Append one round-trip translation variant after every sentence.

    ``clean`` maps a raw variant to the form it is compared and stored in
    (normally the preprocessing chain); variants that come back identical
    to the source, or empty, are skipped.
    """
    _check_train(dataset)
    clean = clean or _default_clean
    report = AugmentationReport("translation", input_count=len(dataset), before=dataset.counts())

    def make_variant(i):
        s = dataset[i]
        try:
            middle = translator.translate(s.text, source_lang, middle_lang)
            back = translator.translate(middle, middle_lang, source_lang)
        except Exception as exc:  # backend failures are counted, never fatal
            logger.debug("translation failed for %s: %s", s.source_id, exc)
            return ("failed", None)
        variant = clean(back)
        if not variant or not variant.strip() or variant.split() == clean(s.text).split():
            return ("identical", None)
        return ("ok", variant)

    out = _assemble(dataset, _generate(dataset, make_variant, workers), report, "bt")
    return _finish(report, dataset, out, "translation"), report


def substitution_count(length: int, rate) -> int:
    """floor(rate * length), computed exactly."""
    return math.floor(Fraction(str(rate)) * length)


def synonym_variant(tokens: list[str], translator, rate, rng, source_lang: str = "fa") -> tuple[list[str], list[int]]:
    """Substitute floor(rate*L) distinct random positions with random synonyms.

    Returns the new token list and the positions that were drawn. A word
    with no synonyms is left as is.
    """
    k = substitution_count(len(tokens), rate)
    if k == 0:
        return list(tokens), []
    positions = sorted(rng.choice(len(tokens), size=k, replace=False).tolist())
    out = list(tokens)
    for p in positions:
        options = [w for w in translator.synonyms(tokens[p], source_lang) if w]
        if options:
            out[p] = options[int(rng.integers(len(options)))]
    return out, positions


def synonym_augment(dataset: Dataset, translator, rate: float = 0.20, seed: int = 0,
                    source_lang: str = "fa", workers: int = 1):
    _check_train(dataset)
    if not 0.0 <= rate <= 1.0:
        raise ConfigError(f"rate must lie in [0, 1], got {rate}")
    report = AugmentationReport("synonym", input_count=len(dataset), before=dataset.counts())

    def make_variant(i):
        tokens = dataset[i].text.split()
        rng = np.random.default_rng([seed, i])
        try:
            variant, positions = synonym_variant(tokens, translator, rate, rng, source_lang)
        except Exception as exc:
            logger.debug("synonym lookup failed for %s: %s", dataset[i].source_id, exc)
            return ("failed", None)
        if not positions or variant == tokens:
            return ("identical", None)
        return ("ok", " ".join(variant))

    out = _assemble(dataset, _generate(dataset, make_variant, workers), report, "syn")
    return _finish(report, dataset, out, "synonym"), report


def augment(dataset: Dataset, method: str, translator=None, *, seed: int = 0, rate: float = 0.20,
            policy="median", middle_lang: str = "en", clean=None, workers: int = 1):
    if method == "balanced":
        return balance(dataset, policy, seed)
    if translator is None:
        raise ConfigError(f"method {method!r} needs a translator backend")
    if method == "translation":
        return translate_augment(dataset, translator, middle_lang, clean=clean, workers=workers)
    if method == "synonym":
        return synonym_augment(dataset, translator, rate, seed, workers=workers)
    raise ConfigError(f"unknown augmentation method {method!r}; expected one of {METHODS}")

"""Single runs and the dataset-variant x model result grid."""

from __future__ import annotations

import contextlib
import csv
import dataclasses
import hashlib
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .augment import augment
from .classifiers import BASELINE, NEURAL, SentimentClassifier, check_model_options
from .corpus import load_schema, parse_corpus
from .dataset import FIVE_CLASS, Dataset, read_dataset
from .errors import ConfigError, DataError, SentiPersError, StageError
from .labels import SplitSpec, binarize, split
from .metrics import MetricReport, confusion
from .preprocess import LemmaDictionary, clean_tokens, preprocess_dataset
from .translators import make_translator

logger = logging.getLogger(__name__)

VARIANTS = ("original", "balanced", "translation", "synonym")
DEFAULT_VARIANTS = ("original", "balanced", "translation")
GRID_COLUMNS = (
    ("NB", "nb", None),
    ("SVM", "svm", None),
    ("SGD", "sgd", None),
    ("B-LSTM (online)", "blstm", "online"),
    ("CNN (online)", "cnn", "online"),
    ("B-LSTM (pretrained)", "blstm", "pretrained"),
    ("CNN (pretrained)", "cnn", "pretrained"),
)
INPUT_FILES = ("corpus", "schema", "lemma_dict", "table", "vectors")
VARIANT_LABELS = {"original": "Original", "balanced": "Balanced", "translation": "Translation", "synonym": "Synonym"}


@dataclass
class ExperimentConfig:
    corpus: str
    model: str = "blstm"
    embedding: str | None = "online"
    variant: str = "original"
    classes: int = 2
    strategy: str = "NR"
    schema: str | None = None
    lemma_dict: str | None = None
    table: str | None = None
    backend: str = "dict"
    vectors: str | None = None
    features: str | None = None  # None: count for NB, tf-idf for SVM/SGD
    seed: int = 0
    train_fraction: float = 0.75
    stratified: bool = True
    valid_fraction: float = 0.1
    balance_policy: str = "median"
    synonym_rate: float = 0.20
    middle_lang: str = "en"
    vocab_size: int = 2000
    model_params: dict = field(default_factory=dict)
    deterministic: bool = True

    def validate(self) -> "ExperimentConfig":
        check_model_options(self.model, self.embedding, self.classes)
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown dataset variant {self.variant!r}; expected one of {VARIANTS}")
        if self.classes == 2 and self.strategy != "NR":
            logger.warning("binary results in the reference grid use NR; running with %s", self.strategy)
        if self.variant in ("translation", "synonym") and self.backend == "dict" and not self.table:
            raise ConfigError(f"variant {self.variant!r} with the dict backend needs a table file")
        if self.embedding == "pretrained" and not self.vectors:
            raise ConfigError("pretrained embedding needs a vector file")
        if not 0.0 <= self.valid_fraction < 1.0:
            raise ConfigError("valid_fraction must lie in [0, 1)")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown experiment config keys: {sorted(unknown)}")
        return cls(**data)

    def run_id(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:12]


@dataclass
class ExperimentResult:
    report: MetricReport
    metadata: dict
    classifier: SentimentClassifier | None = None

    @property
    def weighted_f1(self) -> float:
        return self.report.weighted_f1


def file_digest(path) -> str | None:
    if not path:
        return None
    h = hashlib.sha256()
    with open(os.fspath(path), "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@contextlib.contextmanager
def _stage(name):
    try:
        yield
    except StageError:
        raise
    except (SentiPersError, OSError, ValueError, KeyError, ArithmeticError) as exc:
        raise StageError(name, exc) from exc


@contextlib.contextmanager
def _single_thread(enabled: bool):
    if not enabled:
        yield
        return
    from threadpoolctl import threadpool_limits
    with threadpool_limits(limits=1):
        yield


BASELINE_PARAMS = ("l2", "alpha", "schedule")


def model_params_for(model: str, params: dict) -> dict:
    """The shared ``model_params`` split by family: baselines take only their own keys, neural models the rest."""
    if model in NEURAL:
        return {k: v for k, v in params.items() if k not in BASELINE_PARAMS}
    return {k: v for k, v in params.items() if k in BASELINE_PARAMS}


def load_corpus(config: ExperimentConfig) -> tuple[Dataset, dict]:
    path = config.corpus
    info: dict = {}
    if str(path).lower().endswith(".xml"):
        result = parse_corpus(path, load_schema(config.schema))
        info["parsed"] = len(result.sentences)
        info["skipped"] = len(result.skipped)
        return result.dataset(), info
    dataset = read_dataset(path)
    if dataset.scheme.kind != FIVE_CLASS:
        raise DataError("the experiment corpus must carry five-class labels")
    return dataset, info


def run_experiment(config: ExperimentConfig, out_dir=None, keep_model: bool = False) -> ExperimentResult:
    """parse -> preprocess -> binarize -> split -> augment (train only) -> embed/featurize -> train -> evaluate."""
    config.validate()
    meta: dict = {"run_id": config.run_id(), "config": config.to_dict(), "version": __version__, "stages": {}}
    meta["inputs"] = {}
    for key in INPUT_FILES:
        try:
            meta["inputs"][key] = file_digest(getattr(config, key))
        except OSError as exc:
            raise DataError(f"cannot read {key} input {getattr(config, key)!r}: {exc.strerror}") from None
    stages = meta["stages"]

    with _single_thread(config.deterministic):
        with _stage("load"):
            corpus, info = load_corpus(config)
            stages["load"] = {"sentences": len(corpus), **info}
        with _stage("preprocess"):
            lemmas = LemmaDictionary.load(config.lemma_dict) if config.lemma_dict else LemmaDictionary()
            if corpus.meta.get("preprocessed") != "1":
                corpus, pre = preprocess_dataset(corpus, lemmas)
                stages["preprocess"] = {"kept": pre.output_count, "empty_after_preprocess": len(pre.empty_after_preprocess)}
        with _stage("labels"):
            data = binarize(corpus, config.strategy) if config.classes == 2 else corpus
            stages["labels"] = {"scheme": data.scheme.kind, "strategy": data.scheme.strategy,
                                "counts": {str(k): v for k, v in data.counts().items()}}
        with _stage("split"):
            train_set, test_set = split(data, SplitSpec(config.train_fraction, config.seed, config.stratified))
            valid_set = None
            if config.model in NEURAL and config.valid_fraction > 0:
                train_set, valid_set = split(train_set, SplitSpec(1.0 - config.valid_fraction, config.seed + 1,
                                                                  config.stratified))
                train_set.split, valid_set.split = "train", "valid"
            stages["split"] = {"train": len(train_set), "test": len(test_set),
                               "valid": len(valid_set) if valid_set is not None else 0,
                               "stratified": config.stratified}
        with _stage("augment"):
            if config.variant != "original":
                translator = None
                if config.variant in ("translation", "synonym"):
                    translator = make_translator(config.backend, config.table)

                def clean(text):
                    return " ".join(t.lemma for t in clean_tokens(text, lemmas))

                train_set, report = augment(train_set, config.variant, translator, seed=config.seed,
                                            rate=config.synonym_rate, policy=config.balance_policy,
                                            middle_lang=config.middle_lang, clean=clean)
                stages["augment"] = report.as_dict()
        with _stage("train"):
            classifier = SentimentClassifier.fit(
                config.model, train_set, valid_set, embedding=config.embedding, vectors=config.vectors,
                features=config.features, vocab_size=config.vocab_size, seed=config.seed,
                model_params=model_params_for(config.model, config.model_params))
            if classifier.trained is not None:
                stages["train"] = {"history": classifier.trained.history,
                                   "initial_loss": classifier.trained.initial_loss,
                                   "best_epoch": classifier.trained.best_epoch,
                                   "model_config": classifier.model.config.to_dict(),
                                   "coverage": classifier.params.get("coverage")}
            else:
                stages["train"] = {"params": classifier.params}
        with _stage("evaluate"):
            y_true = np.array(test_set.class_indices(), dtype=np.int64)
            y_pred = classifier.predict(test_set)
            report = MetricReport.from_confusion(confusion(y_true, y_pred, data.scheme.n_classes),
                                                 data.scheme.class_names())
    meta["report"] = report.as_dict()
    meta["weighted_f1"] = report.weighted_f1
    meta["weighted_f1_hex"] = float(report.weighted_f1).hex()
    if out_dir is not None:
        write_run_metadata(meta, out_dir)
    return ExperimentResult(report, meta, classifier if keep_model else None)


def write_run_metadata(meta: dict, out_dir) -> Path:
    runs = Path(out_dir) / "runs"
    runs.mkdir(parents=True, exist_ok=True)
    path = runs / f"{meta['run_id']}.json"
    path.write_text(json.dumps(meta, indent=2, sort_keys=True, ensure_ascii=False), encoding="utf-8")
    return path


def rerun_from_metadata(path, check_inputs: bool = True) -> tuple[ExperimentResult, bool]:
    """Regenerate a run from its stored metadata; returns (result, F1 bit-identical?)."""
    meta = json.loads(Path(path).read_text(encoding="utf-8"))
    config = ExperimentConfig.from_dict(meta["config"])
    if check_inputs:
        for key, digest in meta.get("inputs", {}).items():
            try:
                current = file_digest(getattr(config, key))
            except OSError:
                current = None
            if current != digest:
                raise DataError(f"input {key!r} changed since the run was recorded")
    result = run_experiment(config)
    return result, float(result.weighted_f1).hex() == meta["weighted_f1_hex"]


# -- grid ------------------------------------------------------------------------

@dataclass
class GridCell:
    f1: float | None
    run_id: str | None
    status: str = "ok"

    def text(self) -> str:
        if self.status != "ok":
            return "FAILED"
        return f"{100.0 * self.f1:.3f}"


@dataclass
class ResultGrid:
    rows: list
    columns: list
    cells: dict = field(default_factory=dict)  # (row, column) -> GridCell

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["dataset"] + list(self.columns))
        for r in self.rows:
            out = [r]
            for c in self.columns:
                cell = self.cells.get((r, c))
                if cell is None:
                    out.append("")
                else:
                    out.append(f"{cell.text()}|{cell.run_id or ''}")
            writer.writerow(out)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ResultGrid":
        reader = list(csv.reader(io.StringIO(text)))
        columns = reader[0][1:]
        grid = cls(rows=[], columns=columns)
        for line in reader[1:]:
            row = line[0]
            grid.rows.append(row)
            for c, value in zip(columns, line[1:]):
                if not value:
                    continue
                shown, _, run_id = value.partition("|")
                if shown == "FAILED":
                    grid.cells[(row, c)] = GridCell(None, run_id or None, "FAILED")
                else:
                    grid.cells[(row, c)] = GridCell(float(shown) / 100.0, run_id or None)
        return grid

    def to_text(self) -> str:
        header = ["Dataset"] + list(self.columns)
        body = [[r] + [self.cells[(r, c)].text() if (r, c) in self.cells else "-" for c in self.columns]
                for r in self.rows]
        widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
        lines = ["  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() for row in [header] + body]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def grid_configs(base: ExperimentConfig, variants=DEFAULT_VARIANTS, columns=GRID_COLUMNS,
                 include_synonym: bool = False):
    variants = list(variants)
    if include_synonym and "synonym" not in variants:
        variants.append("synonym")
    out = []
    for v in variants:
        for label, model, embedding in columns:
            cfg = dataclasses.replace(base, variant=v, model=model, embedding=embedding,
                                      model_params=dict(base.model_params))
            out.append((VARIANT_LABELS[v], label, cfg))
    return out


def _run_cell(args):
    cfg, out_dir = args
    try:
        result = run_experiment(cfg, out_dir)
        return GridCell(result.weighted_f1, result.metadata["run_id"]), None
    except Exception as exc:  # a failed cell must not sink the grid
        return GridCell(None, cfg.run_id(), "FAILED"), f"{type(exc).__name__}: {exc}"


def run_matrix(base: ExperimentConfig, out_dir=None, variants=DEFAULT_VARIANTS, columns=GRID_COLUMNS,
               include_synonym: bool = False, workers: int = 1) -> ResultGrid:
    """Run every (variant, model column) cell; failures become FAILED cells."""
    jobs = grid_configs(base, variants, columns, include_synonym)
    for _, _, cfg in jobs:
        cfg.validate()
    rows = list(dict.fromkeys(r for r, _, _ in jobs))
    cols = list(dict.fromkeys(c for _, c, _ in jobs))
    grid = ResultGrid(rows, cols)
    payload = [(cfg, out_dir) for _, _, cfg in jobs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, payload))
    else:
        results = [_run_cell(p) for p in payload]
    for (row, col, _), (cell, error) in zip(jobs, results):
        if error:
            logger.error("cell %s / %s failed: %s", row, col, error)
        grid.cells[(row, col)] = cell
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "grid.csv").write_text(grid.to_csv(), encoding="utf-8")
        (out / "grid.txt").write_text(grid.to_text(), encoding="utf-8")
    return grid


def load_grid_from_runs(out_dir, rows=None, columns=GRID_COLUMNS) -> ResultGrid:
    """Rebuild a grid from the run-metadata records stored under ``out_dir/runs``."""
    label_of = {(m, e): label for label, m, e in columns}
    records = []
    for path in sorted((Path(out_dir) / "runs").glob("*.json")):
        meta = json.loads(path.read_text(encoding="utf-8"))
        cfg = meta["config"]
        key = (cfg["model"], cfg["embedding"])
        if key in label_of:
            records.append((VARIANT_LABELS[cfg["variant"]], label_of[key], meta))
    row_order = rows or [VARIANT_LABELS[v] for v in VARIANTS if any(r == VARIANT_LABELS[v] for r, _, _ in records)]
    col_order = [label for label, _, _ in columns if any(c == label for _, c, _ in records)]
    grid = ResultGrid(list(row_order), col_order)
    for r, c, meta in records:
        grid.cells[(r, c)] = GridCell(meta["weighted_f1"], meta["run_id"])
    return grid

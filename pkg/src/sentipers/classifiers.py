"""One fit/predict/save/load surface over the neural models and the baselines."""

from __future__ import annotations

import dataclasses

import numpy as np

from . import baselines
from .checkpoint import load_checkpoint, save_checkpoint
from .dataset import Dataset, LabelScheme
from .embed import Vocabulary, build_vocab, encode_batch, load_pretrained, random_embedding
from .errors import ConfigError, DataError
from .nn.models import ModelConfig, build_model
from .nn.train import EncodedSet, TrainedModel, train

NEURAL = ("blstm", "cnn")
BASELINE = ("nb", "svm", "sgd")
MODELS = BASELINE + NEURAL
NEURAL_ALIASES = {"lr": "learning_rate"}


def check_model_options(model: str, embedding: str | None, classes: int):
    if model not in MODELS:
        raise ConfigError(f"unknown model {model!r}; expected one of {MODELS}")
    if model in NEURAL and embedding not in ("online", "pretrained"):
        raise ConfigError(f"{model} needs --embed online|pretrained")
    if model in BASELINE and embedding is not None:
        raise ConfigError(f"{model} is a bag-of-words baseline and takes no embedding ({embedding!r})")
    if classes not in (2, 5):
        raise ConfigError("classes must be 2 or 5")


def default_features(model: str) -> str:
    """Multinomial NB is defined over counts; the linear baselines default to tf-idf."""
    return "count" if model == "nb" else "tfidf"


def _scheme_dict(scheme: LabelScheme) -> dict:
    return {"kind": scheme.kind, "strategy": scheme.strategy}


class SentimentClassifier:
    def __init__(self, name: str, scheme: LabelScheme, *, model=None, vocab=None, vectorizer=None,
                 params: dict | None = None, trained: TrainedModel | None = None):
        self.name = name
        self.scheme = scheme
        self.model = model
        self.vocab = vocab
        self.vectorizer = vectorizer
        self.params = dict(params or {})
        self.trained = trained

    @property
    def is_neural(self) -> bool:
        return self.name in NEURAL

    @classmethod
    def fit(cls, name: str, train_set: Dataset, valid_set: Dataset | None = None, *,
            embedding: str | None = None, vectors=None, features: str | None = None,
            vocab_size: int = 2000, seed: int = 0, model_params: dict | None = None) -> "SentimentClassifier":
        scheme = train_set.scheme
        check_model_options(name, embedding, scheme.n_classes)
        y = np.array(train_set.class_indices(), dtype=np.int64)
        model_params = dict(model_params or {})
        if name in BASELINE:
            features = features or default_features(name)
            vectorizer = baselines.BowVectorizer(features).fit(train_set)
            X = vectorizer.transform(train_set)
            model = baselines.train_baseline(name, X, y, scheme.n_classes, seed=seed, **model_params)
            params = {"features": features, "seed": seed, **model_params}
            return cls(name, scheme, model=model, vectorizer=vectorizer, params=params)

        vocab = build_vocab(train_set, vocab_size)
        overrides = {NEURAL_ALIASES.get(k, k): v for k, v in model_params.items() if k != "embed_dim"}
        unknown = set(overrides) - {f.name for f in dataclasses.fields(ModelConfig)}
        if unknown:
            raise ConfigError(f"{name} does not take {sorted(unknown)}")
        if embedding == "pretrained":
            if vectors is None:
                raise ConfigError("pretrained embedding needs a vector file")
            matrix = load_pretrained(vectors, vocab, seed=seed)
            embed_dim = matrix.dim
        else:
            embed_dim = int(model_params.get("embed_dim", ModelConfig.embed_dim))
            matrix = random_embedding(len(vocab), embed_dim, seed=seed)
        config = ModelConfig(architecture=name, embedding=embedding, vocab_size=vocab_size, embed_dim=embed_dim,
                             output_classes=scheme.n_classes, seed=seed, **overrides)
        model = build_model(config, matrix.matrix, trainable=matrix.trainable)
        train_enc = EncodedSet(*encode_batch(train_set, vocab, config.max_len), y)
        valid_enc = None
        if valid_set is not None and len(valid_set):
            valid_enc = EncodedSet(*encode_batch(valid_set, vocab, config.max_len),
                                   np.array(valid_set.class_indices(), dtype=np.int64))
        trained = train(model, train_enc, valid_enc, vocab=vocab)
        params = {"coverage": matrix.coverage}
        return cls(name, scheme, model=model, vocab=vocab, params=params, trained=trained)

    def predict_proba(self, dataset) -> np.ndarray:
        if self.is_neural:
            ids, lengths = encode_batch(dataset, self.vocab, self.model.config.max_len)
            return self.model.predict_proba(ids, lengths)
        X = self.vectorizer.transform(dataset)
        if self.name == "nb":
            return self.model.predict_proba(X)
        # linear models: one-hot of the decision (no calibrated probabilities)
        pred = self.model.predict(X)
        out = np.zeros((len(pred), self.scheme.n_classes))
        out[np.arange(len(pred)), pred] = 1.0
        return out

    def predict(self, dataset) -> np.ndarray:
        if self.is_neural or self.name == "nb":
            return self.predict_proba(dataset).argmax(axis=1)
        return self.model.predict(self.vectorizer.transform(dataset))

    def predict_encoded(self, ids, lengths, vocab_hash: str):
        """Predict on pre-encoded ids; refuses ids built with a different vocabulary."""
        if not self.is_neural:
            raise ConfigError("pre-encoded input only applies to neural models")
        if vocab_hash != self.vocab.digest():
            raise DataError("vocabulary mismatch between encoded input and model")
        return self.model.predict(ids, lengths)

    # -- persistence -----------------------------------------------------------
    def save(self, path) -> None:
        meta = {"model": self.name, "scheme": _scheme_dict(self.scheme), "params": self.params}
        if self.is_neural:
            meta["kind"] = "neural"
            meta["config"] = self.model.config.to_dict()
            meta["vocab"] = self.vocab.itos
            meta["vocab_hash"] = self.vocab.digest()
            meta["trainable_embedding"] = self.model.embedding.trainable
            if self.trained is not None:
                meta["history"] = self.trained.history
            arrays = self.model.state_dict()
        else:
            meta["kind"] = "baseline"
            meta["features"] = self.vectorizer.scheme
            words = sorted(self.vectorizer.vocabulary, key=self.vectorizer.vocabulary.get)
            meta["vocab"] = words
            meta["vocab_hash"] = Vocabulary(words).digest()
            arrays = dict(self.model.state())
            arrays["idf"] = self.vectorizer.idf
        meta["train_params"] = meta.pop("params")
        save_checkpoint(path, meta, arrays)

    @classmethod
    def load(cls, path) -> "SentimentClassifier":
        meta, arrays = load_checkpoint(path)
        scheme = LabelScheme(meta["scheme"]["kind"], meta["scheme"]["strategy"])
        name = meta["model"]
        if meta["kind"] == "neural":
            vocab = Vocabulary(meta["vocab"][2:])
            if vocab.digest() != meta["vocab_hash"]:
                raise DataError(f"{path}: vocabulary hash mismatch")
            config = ModelConfig.from_dict(meta["config"])
            model = build_model(config, arrays["embedding.weight"], trainable=meta["trainable_embedding"])
            model.load_state_dict(arrays)
            return cls(name, scheme, model=model, vocab=vocab, params=meta.get("train_params"))
        vectorizer = baselines.BowVectorizer(meta["features"])
        vectorizer.vocabulary = {w: i for i, w in enumerate(meta["vocab"])}
        vectorizer.idf = arrays.pop("idf")
        model = baselines.restore(name, arrays, meta.get("train_params"))
        return cls(name, scheme, model=model, vectorizer=vectorizer, params=meta.get("train_params"))

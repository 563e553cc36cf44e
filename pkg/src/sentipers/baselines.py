"""Bag-of-words baselines: multinomial naive Bayes and one-vs-rest linear SGD (hinge / logistic)."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DataError, NumericError

SCHEMES = ("count", "tfidf")


class BowVectorizer:
    """Fixed feature space built from the training split only.

    Features are word counts, or tf-idf with smoothed idf
    ``ln((1 + N) / (1 + df)) + 1``. Unknown words are ignored.
    """

    def __init__(self, scheme: str = "tfidf"):
        if scheme not in SCHEMES:
            raise ConfigError(f"unknown feature scheme {scheme!r}")
        self.scheme = scheme
        self.vocabulary: dict[str, int] = {}
        self.idf: np.ndarray | None = None

    @staticmethod
    def _tokens(doc):
        if isinstance(doc, str):
            return doc.split()
        if hasattr(doc, "text"):
            return doc.text.split()
        return list(doc)

    def fit(self, docs) -> "BowVectorizer":
        docs = [self._tokens(d) for d in docs]
        vocab: dict[str, int] = {}
        df: Counter = Counter()
        for toks in docs:
            for t in toks:
                if t not in vocab:
                    vocab[t] = len(vocab)
            df.update(set(toks))
        self.vocabulary = vocab
        n = len(docs)
        df_arr = np.array([df[w] for w in vocab], dtype=np.float64)
        self.idf = np.log((1.0 + n) / (1.0 + df_arr)) + 1.0
        return self

    def transform(self, docs) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        n_docs = 0
        for r, doc in enumerate(docs):
            n_docs += 1
            counts = Counter(t for t in self._tokens(doc) if t in self.vocabulary)
            for w, c in sorted(counts.items(), key=lambda kv: self.vocabulary[kv[0]]):
                rows.append(r)
                cols.append(self.vocabulary[w])
                vals.append(float(c))
        X = sp.csr_matrix((vals, (rows, cols)), shape=(n_docs, len(self.vocabulary)), dtype=np.float64)
        if self.scheme == "tfidf":
            X = X @ sp.diags(self.idf)
            X = sp.csr_matrix(X)
        return X

    def fit_transform(self, docs):
        docs = list(docs)
        return self.fit(docs).transform(docs)

    def to_sparse_maps(self, X) -> list[dict[int, float]]:
        """Per-document ``{feature index: weight}`` maps."""
        X = sp.csr_matrix(X)
        return [dict(zip(X.indices[X.indptr[i]:X.indptr[i + 1]].tolist(),
                         X.data[X.indptr[i]:X.indptr[i + 1]].tolist())) for i in range(X.shape[0])]


def featurize(train_docs, scheme: str = "tfidf", test_docs=None):
    vec = BowVectorizer(scheme).fit(train_docs)
    X_train = vec.transform(train_docs)
    if test_docs is None:
        return vec, X_train
    return vec, X_train, vec.transform(test_docs)


@dataclass
class NaiveBayes:
    """Multinomial naive Bayes with additive (Laplace) smoothing."""

    alpha: float = 1.0
    class_log_prior: np.ndarray | None = None
    feature_log_prob: np.ndarray | None = None

    def fit(self, X, y, n_classes: int | None = None) -> "NaiveBayes":
        X = sp.csr_matrix(X)
        y = np.asarray(y, dtype=np.int64)
        C = int(n_classes if n_classes is not None else y.max() + 1)
        counts = np.zeros((C, X.shape[1]))
        prior = np.bincount(y, minlength=C).astype(np.float64)
        for c in range(C):
            rows = X[y == c]
            if rows.shape[0]:
                counts[c] = np.asarray(rows.sum(axis=0)).ravel()
        with np.errstate(divide="ignore"):
            self.class_log_prior = np.log(prior / prior.sum())
        smoothed = counts + self.alpha
        self.feature_log_prob = np.log(smoothed / smoothed.sum(axis=1, keepdims=True))
        return self

    def joint_log_likelihood(self, X) -> np.ndarray:
        X = sp.csr_matrix(X)
        return np.asarray(X @ self.feature_log_prob.T) + self.class_log_prior

    def predict_proba(self, X) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        jll = jll - jll.max(axis=1, keepdims=True)
        p = np.exp(jll)
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        return self.joint_log_likelihood(X).argmax(axis=1)

    def state(self) -> dict:
        return {"class_log_prior": self.class_log_prior, "feature_log_prob": self.feature_log_prob}


def nb_train(X, y, n_classes=None, alpha: float = 1.0) -> NaiveBayes:
    return NaiveBayes(alpha).fit(X, y, n_classes)


def nb_predict(model: NaiveBayes, X) -> np.ndarray:
    return model.predict(X)


LOSSES = ("hinge", "logistic")
SCHEDULES = ("invscaling", "optimal", "constant")


def step_size(schedule: str, lr: float, l2: float, t: int, n: int) -> float:
    """Learning rate at update ``t`` (``n`` updates per epoch).

    invscaling: ``lr / (1 + t / n)`` (decays once per epoch's worth of steps)
    optimal:    ``lr / (1 + lr * l2 * t)``
    constant:   ``lr``
    """
    if schedule == "invscaling":
        return lr / (1.0 + t / n)
    if schedule == "optimal":
        return lr / (1.0 + lr * l2 * t)
    return lr


@dataclass
class LinearModel:
    """One-vs-rest linear classifier trained by per-example SGD.

    The step size follows ``schedule`` (see :func:`step_size`); the L2
    penalty shrinks weights (not the bias) every step.
    """

    loss: str = "hinge"
    epochs: int = 20
    lr: float = 0.1
    l2: float = 1e-4
    seed: int = 0
    schedule: str = "invscaling"
    W: np.ndarray | None = None
    b: np.ndarray | None = None
    norm_trace: list = field(default_factory=list)

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ConfigError(f"unknown loss {self.loss!r}; expected one of {LOSSES}")
        if self.schedule not in SCHEDULES:
            raise ConfigError(f"unknown schedule {self.schedule!r}; expected one of {SCHEDULES}")
        if self.epochs < 0 or self.lr <= 0 or self.l2 < 0:
            raise ConfigError("epochs >= 0, lr > 0 and l2 >= 0 are required")

    def _dloss(self, margin):
        if self.loss == "hinge":
            return -1.0 if margin < 1.0 else 0.0
        # d/dm log(1 + exp(-m)) = -sigmoid(-m)
        if margin >= 0:
            e = math.exp(-margin)
            return -e / (1.0 + e)
        return -1.0 / (1.0 + math.exp(margin))

    def fit(self, X, y, n_classes: int | None = None) -> "LinearModel":
        X = sp.csr_matrix(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        n, d = X.shape
        C = int(n_classes if n_classes is not None else y.max() + 1)
        K = 1 if C == 2 else C
        self.W = np.zeros((K, d))
        self.b = np.zeros(K)
        self.norm_trace = []
        rng = np.random.default_rng(self.seed)
        rows = [(X.indices[X.indptr[i]:X.indptr[i + 1]], X.data[X.indptr[i]:X.indptr[i + 1]]) for i in range(n)]
        for k in range(K):
            target = np.where(y == (1 if C == 2 else k), 1.0, -1.0)
            w = np.zeros(d)
            scale = 1.0  # w_true = scale * w, so L2 shrinkage is O(1) per step
            bias = 0.0
            t = 0
            trace = []
            for _ in range(self.epochs):
                for i in rng.permutation(n):
                    idx, val = rows[i]
                    eta = step_size(self.schedule, self.lr, self.l2, t, n)
                    margin = target[i] * (scale * float(w[idx] @ val) + bias)
                    g = self._dloss(margin)
                    scale *= max(1.0 - eta * self.l2, 0.0)
                    if scale < 1e-9:
                        w *= scale
                        scale = 1.0
                    if g != 0.0:
                        step = eta * g * target[i]
                        w[idx] -= (step / scale) * val
                        bias -= step
                    t += 1
                trace.append(float(np.linalg.norm(scale * w)))
            w = w * scale
            if not (np.all(np.isfinite(w)) and np.isfinite(bias)):
                raise NumericError(f"non-finite weights for class {k} ({self.loss} loss)")
            self.W[k], self.b[k] = w, bias
            self.norm_trace.append(trace)
        self.n_classes = C
        return self

    def decision_function(self, X) -> np.ndarray:
        X = sp.csr_matrix(X)
        return np.asarray(X @ self.W.T) + self.b

    def predict(self, X) -> np.ndarray:
        scores = self.decision_function(X)
        if self.W.shape[0] == 1:
            return (scores[:, 0] > 0).astype(np.int64)
        return scores.argmax(axis=1)

    def state(self) -> dict:
        return {"W": self.W, "b": self.b}


def linear_train(X, y, loss: str = "hinge", epochs: int = 20, lr: float = 0.1, l2: float = 1e-4,
                 seed: int = 0, n_classes: int | None = None, schedule: str = "invscaling") -> LinearModel:
    return LinearModel(loss, epochs, lr, l2, seed, schedule).fit(X, y, n_classes)


def linear_predict(model: LinearModel, X) -> np.ndarray:
    return model.predict(X)


BASELINES = {"nb": None, "svm": "hinge", "sgd": "logistic"}
_LINEAR_KEYS = ("epochs", "lr", "l2", "schedule")


def train_baseline(name: str, X, y, n_classes: int, seed: int = 0, **kwargs):
    if name == "nb":
        return nb_train(X, y, n_classes, alpha=kwargs.get("alpha", 1.0))
    if name in ("svm", "sgd"):
        return linear_train(X, y, BASELINES[name], n_classes=n_classes, seed=seed,
                            **{k: v for k, v in kwargs.items() if k in _LINEAR_KEYS})
    raise ConfigError(f"unknown baseline {name!r}")


def restore(name: str, state: dict, params: dict | None = None):
    params = params or {}
    if name == "nb":
        model = NaiveBayes(params.get("alpha", 1.0))
        model.class_log_prior = np.asarray(state["class_log_prior"])
        model.feature_log_prob = np.asarray(state["feature_log_prob"])
        return model
    if name in ("svm", "sgd"):
        model = LinearModel(BASELINES[name], **{k: v for k, v in params.items() if k in _LINEAR_KEYS + ("seed",)})
        model.W = np.asarray(state["W"])
        model.b = np.asarray(state["b"])
        return model
    raise DataError(f"unknown baseline {name!r} in checkpoint")

"""The BLSTM and CNN sentence classifiers."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from ..embed import MAX_LEN
from ..errors import ConfigError
from . import functional as F
from .layers import BiLSTM, Conv1D, Dense, Dropout, Embedding, GlobalMaxPool1D, MaxPool1D

ARCHITECTURES = ("blstm", "cnn")


@dataclass
class ModelConfig:
    architecture: str = "blstm"
    max_len: int = MAX_LEN
    embedding: str = "online"
    vocab_size: int = 2000
    embed_dim: int = 128
    lstm_hidden: int = 128
    dense_units: int = 600
    cnn_dense_units: int = 256
    dropout: float = 0.10
    filters: int = 64
    kernels: tuple = (4, 8, 16)
    pool_size: int = 2
    pool_stride: int = 1
    output_classes: int = 2
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    batch_size: int = 32
    epochs: int = 10
    clip_norm: float = 5.0
    seed: int = 0

    def __post_init__(self):
        self.kernels = tuple(int(k) for k in self.kernels)
        self.validate()

    def validate(self):
        if self.architecture not in ARCHITECTURES:
            raise ConfigError(f"unknown architecture {self.architecture!r}")
        if self.embedding not in ("online", "pretrained"):
            raise ConfigError(f"unknown embedding source {self.embedding!r}")
        if self.output_classes not in (2, 5):
            raise ConfigError("output_classes must be 2 or 5")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must lie in [0, 1)")
        for name in ("max_len", "vocab_size", "embed_dim", "lstm_hidden", "dense_units",
                     "cnn_dense_units", "filters", "pool_size", "pool_stride", "batch_size"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.epochs < 0:
            raise ConfigError("epochs must be non-negative")
        if self.architecture == "cnn":
            cnn_lengths(self.max_len, self.kernels, self.pool_size, self.pool_stride)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["kernels"] = list(self.kernels)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ConfigError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**data)


def cnn_lengths(T: int, kernels, pool: int = 2, stride: int = 1) -> list[int]:
    """Sequence length after each conv/pool stage: conv, pool, conv, pool, ..., conv."""
    out = []
    for n, k in enumerate(kernels):
        T = T - k + 1
        if T < 1:
            raise ConfigError(f"sequence too short for kernel {k}")
        out.append(T)
        if n < len(kernels) - 1:
            if T < pool:
                raise ConfigError(f"sequence too short for pool {pool}")
            T = (T - pool) // stride + 1
            out.append(T)
    return out


class Model:
    """Input ids ``[B, T]`` -> embedding -> ``layers`` -> class logits."""

    def __init__(self, config: ModelConfig, embedding: Embedding, layers):
        self.config = config
        self.embedding = embedding
        self.layers = list(layers)

    def named_parameters(self) -> dict:
        out = {}
        if self.embedding.trainable:
            out["embedding.weight"] = self.embedding.weight
        for n, layer in enumerate(self.layers):
            for name, p in layer.params.items():
                out[f"{n}.{layer.kind}.{name}"] = p
        return out

    def state_dict(self) -> dict:
        state = {name: p.data.copy() for name, p in self.named_parameters().items()}
        state["embedding.weight"] = self.embedding.weight.data.copy()
        return state

    def load_state_dict(self, state: dict):
        targets = dict(self.named_parameters())
        targets["embedding.weight"] = self.embedding.weight
        missing = set(targets) - set(state)
        if missing:
            raise ConfigError(f"checkpoint is missing parameters: {sorted(missing)}")
        for name, p in targets.items():
            arr = np.asarray(state[name], dtype=p.data.dtype)
            if arr.shape != p.data.shape:
                raise ConfigError(f"parameter {name}: shape {arr.shape} != {p.data.shape}")
            p.data = arr.copy()

    def describe(self) -> list[str]:
        return ["input", "embedding"] + [layer.describe() for layer in self.layers]

    def forward(self, ids, lengths=None, training=False, rng=None):
        ids = np.asarray(ids)
        if ids.ndim != 2 or ids.shape[1] != self.config.max_len:
            raise ConfigError(f"expected input ids of shape [B, {self.config.max_len}], got {ids.shape}")
        x, lengths = self.embedding.forward(ids, lengths)
        for layer in self.layers:
            x, lengths = layer.forward(x, lengths, training, rng)
        return x

    def predict_proba(self, ids, lengths=None, batch_size: int = 256) -> np.ndarray:
        out = []
        for start in range(0, len(ids), batch_size):
            sl = slice(start, start + batch_size)
            logits = self.forward(ids[sl], None if lengths is None else lengths[sl], training=False)
            out.append(F._softmax(logits.data))
        if not out:
            return np.zeros((0, self.config.output_classes))
        return np.concatenate(out)

    def predict(self, ids, lengths=None) -> tuple[np.ndarray, np.ndarray]:
        probs = self.predict_proba(ids, lengths)
        return probs, probs.argmax(axis=1)

    def param_count(self) -> int:
        return int(sum(p.data.size for p in self.named_parameters().values()))


def build_blstm(config: ModelConfig, embedding_matrix, trainable: bool = True) -> Model:
    """input -> embedding -> BiLSTM -> global max-pool -> dropout -> dense+ReLU -> dropout -> dense+softmax."""
    if config.architecture != "blstm":
        raise ConfigError("build_blstm needs architecture='blstm'")
    rng = np.random.default_rng(config.seed)
    emb = Embedding(embedding_matrix, trainable)
    E, H = emb.weight.shape[1], config.lstm_hidden
    layers = [
        BiLSTM(E, H, rng),
        GlobalMaxPool1D(),
        Dropout(config.dropout),
        Dense(2 * H, config.dense_units, "relu", rng),
        Dropout(config.dropout),
        Dense(config.dense_units, config.output_classes, "softmax", rng),
    ]
    return Model(config, emb, layers)


def build_cnn(config: ModelConfig, embedding_matrix, trainable: bool = True) -> Model:
    """input -> embedding -> [conv+ReLU -> maxpool] x2 -> conv+ReLU -> global max-pool
    -> dropout -> dense+sigmoid -> dense+softmax."""
    if config.architecture != "cnn":
        raise ConfigError("build_cnn needs architecture='cnn'")
    rng = np.random.default_rng(config.seed)
    emb = Embedding(embedding_matrix, trainable)
    channels = emb.weight.shape[1]
    layers = []
    for n, k in enumerate(config.kernels):
        layers.append(Conv1D(channels, config.filters, k, rng))
        channels = config.filters
        if n < len(config.kernels) - 1:
            layers.append(MaxPool1D(config.pool_size, config.pool_stride))
    layers += [
        GlobalMaxPool1D(),
        Dropout(config.dropout),
        Dense(config.filters, config.cnn_dense_units, "sigmoid", rng),
        Dense(config.cnn_dense_units, config.output_classes, "softmax", rng),
    ]
    return Model(config, emb, layers)


def build_model(config: ModelConfig, embedding_matrix, trainable: bool = True) -> Model:
    builder = build_blstm if config.architecture == "blstm" else build_cnn
    return builder(config, embedding_matrix, trainable)

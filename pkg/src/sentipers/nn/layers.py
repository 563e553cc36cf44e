"""Layer objects with parameters. Each layer maps ``(x, lengths)`` to ``(y, lengths)``."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from . import functional as F
from .tensor import parameter


def glorot_uniform(rng, fan_in, fan_out, shape):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def orthogonal(rng, n, m):
    a = rng.standard_normal((max(n, m), min(n, m)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    return q if n >= m else q.T


class Layer:
    kind = "layer"

    def __init__(self):
        self.params: dict = {}

    def forward(self, x, lengths, training=False, rng=None):
        raise NotImplementedError

    def output_length(self, T: int) -> int:
        return T

    def describe(self) -> str:
        return self.kind


class Embedding(Layer):
    kind = "embedding"

    def __init__(self, matrix, trainable=True):
        super().__init__()
        self.weight = parameter(matrix, "embedding")
        self.weight.data[0] = 0.0
        self.trainable = trainable
        if trainable:
            self.params["weight"] = self.weight
        else:
            self.weight.requires_grad = False

    def forward(self, ids, lengths, training=False, rng=None):
        return F.embedding(ids, self.weight, padding_idx=0), lengths


class BiLSTM(Layer):
    kind = "bilstm"

    def __init__(self, input_dim, hidden, rng):
        super().__init__()
        self.hidden = hidden
        for d in ("fw", "bw"):
            b = np.zeros(4 * hidden)
            b[hidden:2 * hidden] = 1.0  # forget-gate bias
            Wh = np.concatenate([orthogonal(rng, hidden, hidden) for _ in range(4)], axis=1)
            self.params[f"{d}_Wx"] = parameter(glorot_uniform(rng, input_dim, 4 * hidden, (input_dim, 4 * hidden)))
            self.params[f"{d}_Wh"] = parameter(Wh)
            self.params[f"{d}_b"] = parameter(b)

    def _group(self, d):
        return self.params[f"{d}_Wx"], self.params[f"{d}_Wh"], self.params[f"{d}_b"]

    def forward(self, x, lengths, training=False, rng=None):
        return F.bilstm(x, lengths, self._group("fw"), self._group("bw")), lengths


class GlobalMaxPool1D(Layer):
    kind = "global_maxpool1d"

    def forward(self, x, lengths, training=False, rng=None):
        return F.global_maxpool(x, lengths), None


class Dropout(Layer):
    kind = "dropout"

    def __init__(self, rate):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ConfigError(f"dropout rate must lie in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x, lengths, training=False, rng=None):
        return F.dropout(x, self.rate, training, rng), lengths


class Dense(Layer):
    """Fully connected layer. A ``softmax`` activation is left to the loss/predict step."""

    kind = "dense"
    activations = ("linear", "relu", "sigmoid", "softmax")

    def __init__(self, n_in, n_out, activation, rng):
        super().__init__()
        if activation not in self.activations:
            raise ConfigError(f"unknown activation {activation!r}")
        self.activation = activation
        self.params["W"] = parameter(glorot_uniform(rng, n_in, n_out, (n_in, n_out)))
        self.params["b"] = parameter(np.zeros(n_out))

    def describe(self):
        return f"dense_{self.activation}"

    def forward(self, x, lengths, training=False, rng=None):
        y = F.dense(x, self.params["W"], self.params["b"])
        if self.activation == "relu":
            y = F.relu(y)
        elif self.activation == "sigmoid":
            y = F.sigmoid(y)
        return y, lengths


class Conv1D(Layer):
    """Valid stride-1 convolution + ReLU; output positions past the true length are zeroed."""

    kind = "conv1d"

    def __init__(self, in_channels, filters, kernel, rng):
        super().__init__()
        self.kernel = kernel
        self.params["W"] = parameter(
            glorot_uniform(rng, kernel * in_channels, kernel * filters, (kernel, in_channels, filters)))
        self.params["b"] = parameter(np.zeros(filters))

    def describe(self):
        return f"conv1d_relu(k={self.kernel})"

    def output_length(self, T):
        return T - self.kernel + 1

    def forward(self, x, lengths, training=False, rng=None):
        y = F.relu(F.conv1d(x, self.params["W"], self.params["b"]))
        new_lengths = None if lengths is None else np.minimum(lengths, y.shape[1])
        if new_lengths is not None:
            y = F.mask_time(y, new_lengths)
        return y, new_lengths


class MaxPool1D(Layer):
    kind = "maxpool1d"

    def __init__(self, pool=2, stride=1):
        super().__init__()
        self.pool, self.stride = pool, stride

    def describe(self):
        return f"maxpool1d(pool={self.pool},stride={self.stride})"

    def output_length(self, T):
        return F.pooled_length(T, self.pool, self.stride)

    def forward(self, x, lengths, training=False, rng=None):
        y = F.maxpool1d(x, self.pool, self.stride, lengths)
        if lengths is None:
            return y, None
        new_lengths = np.minimum(-(-np.asarray(lengths) // self.stride), y.shape[1])
        return y, new_lengths

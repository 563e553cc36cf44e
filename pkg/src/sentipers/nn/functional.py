"""Differentiable operations on :class:`Tensor`.

Shape conventions: sequences are ``[batch, time, channels]``. ``lengths``
arguments are integer arrays of true (unpadded) lengths; positions at or
beyond a row's length are padding.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeError
from .tensor import Tensor, as_tensor


def _op(data, parents, backward_fn):
    return Tensor(data, parents=parents, backward_fn=backward_fn)


def _unbroadcast(grad, shape):
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# -- elementary ------------------------------------------------------------

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _op(a.data + b.data, (a, b),
               lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _op(a.data * b.data, (a, b),
               lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


def sum(a):
    a = as_tensor(a)
    return _op(np.sum(a.data), (a,), lambda g: (np.broadcast_to(g, a.shape).copy(),))


def mean(a):
    a = as_tensor(a)
    n = a.data.size
    return _op(np.mean(a.data), (a,), lambda g: (np.full(a.shape, g / n),))


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    return _op(a.data @ b.data, (a, b), lambda g: (g @ b.data.T, a.data.T @ g))


def slice_last(x, start, stop):
    x = as_tensor(x)

    def backward(g):
        out = np.zeros_like(x.data)
        out[..., start:stop] = g
        return (out,)

    return _op(x.data[..., start:stop], (x,), backward)


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def backward(g):
        return tuple(np.take(g, np.arange(bounds[i], bounds[i + 1]), axis=axis) for i in range(len(tensors)))

    return _op(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward)


# -- activations -------------------------------------------------------------

def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def relu(x):
    x = as_tensor(x)
    mask = x.data > 0
    return _op(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def sigmoid(x):
    """Logistic 1 / (1 + exp(-x)), evaluated without overflow."""
    x = as_tensor(x)
    s = _sigmoid(x.data)
    return _op(s, (x,), lambda g: (g * s * (1.0 - s),))


def tanh(x):
    x = as_tensor(x)
    t = np.tanh(x.data)
    return _op(t, (x,), lambda g: (g * (1.0 - t * t),))


def _softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax(x):
    x = as_tensor(x)
    s = _softmax(x.data)
    return _op(s, (x,), lambda g: (s * (g - (g * s).sum(axis=-1, keepdims=True)),))


def log_softmax(x):
    x = as_tensor(x)
    z = x.data - x.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    out = z - lse
    s = np.exp(out)
    return _op(out, (x,), lambda g: (g - s * g.sum(axis=-1, keepdims=True),))


def cross_entropy(logits, targets):
    """Mean categorical cross-entropy of softmax(logits) against integer targets."""
    logits = as_tensor(logits)
    targets = np.asarray(targets, dtype=np.int64)
    n, c = logits.shape
    if targets.shape != (n,) or (targets.size and (targets.min() < 0 or targets.max() >= c)):
        raise ShapeError(f"targets {targets.shape} do not fit logits {logits.shape}")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = -log_probs[np.arange(n), targets].mean()

    def backward(g):
        grad = np.exp(log_probs)
        grad[np.arange(n), targets] -= 1.0
        return (grad * (g / n),)

    return _op(loss, (logits,), backward)


# -- layers ------------------------------------------------------------------

def dense(x, W, b):
    """Affine map ``x @ W + b`` for ``x: [B, n]``, ``W: [n, m]``, ``b: [m]``."""
    x, W, b = as_tensor(x), as_tensor(W), as_tensor(b)
    if x.ndim != 2 or W.ndim != 2 or x.shape[1] != W.shape[0]:
        raise ShapeError(f"dense: input {x.shape} does not match weight {W.shape}")
    if b.shape != (W.shape[1],):
        raise ShapeError(f"dense: bias {b.shape} does not match weight {W.shape}")
    return _op(x.data @ W.data + b.data, (x, W, b),
               lambda g: (g @ W.data.T, x.data.T @ g, g.sum(axis=0)))


def embedding(ids, table, padding_idx: int | None = 0):
    """Row lookup ``table[ids]``; the padding row never receives gradient."""
    table = as_tensor(table)
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ShapeError(f"embedding index out of range for table of {table.shape[0]} rows")

    def backward(g):
        grad = np.zeros_like(table.data)
        np.add.at(grad, ids.reshape(-1), g.reshape(-1, table.shape[1]))
        if padding_idx is not None:
            grad[padding_idx] = 0.0
        return (grad,)

    return _op(table.data[ids], (table,), backward)


def time_mask(lengths, T):
    return np.arange(T)[None, :] < np.asarray(lengths)[:, None]


def mask_time(x, lengths):
    """Zero every position at or beyond each row's length."""
    x = as_tensor(x)
    m = time_mask(lengths, x.shape[1])[:, :, None]
    return _op(x.data * m, (x,), lambda g: (g * m,))


def conv1d(x, W, b):
    """Valid 1D cross-correlation, stride 1: ``[B,T,Cin] * [k,Cin,F] -> [B,T-k+1,F]``."""
    x, W, b = as_tensor(x), as_tensor(W), as_tensor(b)
    B, T, C = x.shape
    k, Cw, F = W.shape
    if Cw != C:
        raise ShapeError(f"conv1d: input channels {x.shape} do not match kernel {W.shape}")
    if T < k:
        raise ShapeError(f"conv1d: sequence length {T} shorter than kernel {k}")
    T_out = T - k + 1
    cols = sliding_window_view(x.data, k, axis=1)  # [B, T_out, C, k]
    cols = np.ascontiguousarray(cols.transpose(0, 1, 3, 2)).reshape(B * T_out, k * C)
    Wm = W.data.reshape(k * C, F)
    out = (cols @ Wm + b.data).reshape(B, T_out, F)

    def backward(g):
        g2 = g.reshape(B * T_out, F)
        dW = (cols.T @ g2).reshape(k, C, F)
        db = g2.sum(axis=0)
        dcols = (g2 @ Wm.T).reshape(B, T_out, k, C)
        dx = np.zeros_like(x.data)
        for j in range(k):
            dx[:, j:j + T_out, :] += dcols[:, :, j, :]
        return dx, dW, db

    return _op(out, (x, W, b), backward)


def pooled_length(T: int, pool: int, stride: int) -> int:
    return (T - pool) // stride + 1


def maxpool1d(x, pool: int = 2, stride: int = 1, lengths=None):
    """Max over sliding windows of ``pool`` steps.

    With ``lengths``, padded positions are treated as -inf; a window with
    no valid position outputs 0 and passes no gradient.
    """
    x = as_tensor(x)
    B, T, C = x.shape
    if T < pool:
        raise ShapeError(f"maxpool1d: sequence length {T} shorter than pool {pool}")
    T_out = pooled_length(T, pool, stride)
    win = sliding_window_view(x.data, pool, axis=1)[:, ::stride][:, :T_out]  # [B,T_out,C,pool]
    if lengths is not None:
        valid = time_mask(lengths, T)
        vwin = sliding_window_view(valid, pool, axis=1)[:, ::stride][:, :T_out]  # [B,T_out,pool]
        win = np.where(vwin[:, :, None, :], win, -np.inf)
        any_valid = vwin.any(axis=-1)[:, :, None]
    else:
        any_valid = np.ones((B, T_out, 1), dtype=bool)
    arg = win.argmax(axis=-1)
    out = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]
    out = np.where(any_valid, out, 0.0)

    def backward(g):
        dx = np.zeros_like(x.data)
        g = g * any_valid
        stop = stride * (T_out - 1) + 1
        for p in range(pool):
            dx[:, p:p + stop:stride, :] += g * (arg == p)
        return (dx,)

    return _op(out, (x,), backward)


def global_maxpool(x, lengths=None):
    """Max over time per channel: ``[B,T,C] -> [B,C]``; padded steps never win."""
    x = as_tensor(x)
    B, T, C = x.shape
    data = x.data
    if lengths is not None:
        valid = time_mask(lengths, T)[:, :, None]
        data = np.where(valid, data, -np.inf)
        empty = ~valid.any(axis=1)  # [B,1]
    else:
        empty = np.zeros((B, 1), dtype=bool)
    arg = data.argmax(axis=1)  # [B,C]
    out = np.take_along_axis(data, arg[:, None, :], axis=1)[:, 0, :]
    out = np.where(empty, 0.0, out)

    def backward(g):
        dx = np.zeros_like(x.data)
        np.put_along_axis(dx, arg[:, None, :], (g * ~empty)[:, None, :], axis=1)
        return (dx,)

    return _op(out, (x,), backward)


def dropout(x, rate: float = 0.1, training: bool = True, rng=None):
    """Inverted dropout; identity at inference or when ``rate == 0``."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    x = as_tensor(x)
    if not training or rate == 0.0:
        return x
    rng = rng if rng is not None else np.random.default_rng()
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return _op(x.data * mask, (x,), lambda g: (g * mask,))


# -- recurrent -----------------------------------------------------------------

def lstm_cell(x, h_prev, c_prev, Wx, Wh, b):
    """One LSTM step built from primitive ops (gate order: input, forget, output, candidate).

    Returns ``(h, c)``. This composed version is the reference the fused
    :func:`lstm` is checked against.
    """
    x, h_prev, c_prev = as_tensor(x), as_tensor(h_prev), as_tensor(c_prev)
    H = h_prev.shape[1]
    if Wx.shape != (x.shape[1], 4 * H) or Wh.shape != (H, 4 * H) or b.shape != (4 * H,):
        raise ShapeError(f"lstm_cell: x {x.shape}, h {h_prev.shape}, Wx {Wx.shape}, Wh {Wh.shape}, b {b.shape}")
    z = add(add(matmul(x, Wx), matmul(h_prev, Wh)), b)
    i = sigmoid(slice_last(z, 0, H))
    f = sigmoid(slice_last(z, H, 2 * H))
    o = sigmoid(slice_last(z, 2 * H, 3 * H))
    g = tanh(slice_last(z, 3 * H, 4 * H))
    c = add(mul(f, c_prev), mul(i, g))
    h = mul(o, tanh(c))
    return h, c


def _lstm_forward(x, mask, Wx, Wh, b, reverse):
    B, T, _ = x.shape
    H = Wh.shape[0]
    xz = x @ Wx + b  # [B,T,4H]
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    out = np.zeros((B, T, H))
    steps = range(T - 1, -1, -1) if reverse else range(T)
    cache = []
    for t in steps:
        m = mask[:, t][:, None]
        z = xz[:, t] + h @ Wh
        i = _sigmoid(z[:, :H])
        f = _sigmoid(z[:, H:2 * H])
        o = _sigmoid(z[:, 2 * H:3 * H])
        g = np.tanh(z[:, 3 * H:])
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        h_new = o * tc
        cache.append((t, m, h, c, i, f, o, g, tc))
        out[:, t] = m * h_new
        h = m * h_new + (1.0 - m) * h
        c = m * c_new + (1.0 - m) * c
    return out, cache


def _lstm_backward(dout, x, cache, Wx, Wh):
    B, T, E = x.shape
    H = Wh.shape[0]
    dz_all = np.zeros((B, T, 4 * H))
    dWh = np.zeros_like(Wh)
    dh = np.zeros((B, H))
    dc = np.zeros((B, H))
    for t, m, h_prev, c_prev, i, f, o, g, tc in reversed(cache):
        dh_new = m * (dout[:, t] + dh)
        dc_new = m * dc
        do = dh_new * tc
        dcell = dc_new + dh_new * o * (1.0 - tc * tc)
        di = dcell * g
        dg = dcell * i
        df = dcell * c_prev
        dz = np.concatenate([di * i * (1 - i), df * f * (1 - f), do * o * (1 - o), dg * (1 - g * g)], axis=1)
        dz_all[:, t] = dz
        dWh += h_prev.T @ dz
        dh = (1.0 - m) * dh + dz @ Wh.T
        dc = (1.0 - m) * dc + dcell * f
    dWx = x.reshape(-1, E).T @ dz_all.reshape(-1, 4 * H)
    db = dz_all.sum(axis=(0, 1))
    dx = dz_all @ Wx.T
    return dx, dWx, dWh, db


def lstm(x, lengths, Wx, Wh, b, reverse: bool = False):
    """Masked unidirectional LSTM over ``[B,T,E]`` returning ``[B,T,H]``.

    Padded steps leave the state untouched and output zeros; with
    ``reverse`` the scan runs from each row's last real token backwards.
    """
    x, Wx, Wh, b = as_tensor(x), as_tensor(Wx), as_tensor(Wh), as_tensor(b)
    B, T, E = x.shape
    H = Wh.shape[0]
    if Wx.shape != (E, 4 * H) or Wh.shape != (H, 4 * H) or b.shape != (4 * H,):
        raise ShapeError(f"lstm: x {x.shape}, Wx {Wx.shape}, Wh {Wh.shape}, b {b.shape}")
    lengths = np.full(B, T) if lengths is None else np.asarray(lengths)
    mask = time_mask(lengths, T).astype(x.data.dtype)
    out, cache = _lstm_forward(x.data, mask, Wx.data, Wh.data, b.data, reverse)

    def backward(g):
        return _lstm_backward(g, x.data, cache, Wx.data, Wh.data)

    return _op(out, (x, Wx, Wh, b), backward)


def bilstm(x, lengths, forward_params, backward_params):
    """Forward and time-reversed LSTM outputs concatenated per step: ``[B,T,2H]``."""
    x = as_tensor(x)
    B, T, _ = x.shape
    lengths = np.full(B, T) if lengths is None else np.asarray(lengths)
    t_used = int(max(1, min(T, lengths.max(initial=0))))
    xs = x if t_used == T else _time_prefix(x, t_used)
    fw = lstm(xs, lengths, *forward_params, reverse=False)
    bw = lstm(xs, lengths, *backward_params, reverse=True)
    out = concat([fw, bw], axis=-1)
    if t_used < T:
        out = _time_pad(out, T)
    return out


def _time_prefix(x, t):
    def backward(g):
        dx = np.zeros_like(x.data)
        dx[:, :t] = g
        return (dx,)

    return _op(x.data[:, :t], (x,), backward)


def _time_pad(x, T):
    B, t, C = x.shape
    out = np.zeros((B, T, C))
    out[:, :t] = x.data
    return _op(out, (x,), lambda g: (g[:, :t],))

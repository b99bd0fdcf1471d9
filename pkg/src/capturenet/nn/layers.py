"""1D network layers as forward/backward function pairs.

Each forward returns ``(out, cache)``; the matching backward takes the
upstream gradient and the cache and returns input/parameter gradients.
Layers are dtype-agnostic: deployment runs float32, gradient tests float64.
Convolutions are stride-1 with explicit symmetric zero padding, implemented
as im2col + GEMM.
"""

from __future__ import annotations

import numpy as np


def _im2col(xp: np.ndarray, k: int) -> np.ndarray:
    # xp (N, C, Lp) -> strided view (N, C, k, Lp - k + 1)
    n, c, lp = xp.shape
    lout = lp - k + 1
    s0, s1, s2 = xp.strides
    return np.lib.stride_tricks.as_strided(
        xp, shape=(n, c, k, lout), strides=(s0, s1, s2, s2), writeable=False
    )


def conv1d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, pad: int):
    """x (N, Cin, L), w (Cout, Cin, K), b (Cout,) -> out (N, Cout, Lout)."""
    n, cin, length = x.shape
    cout, cin_w, k = w.shape
    if cin != cin_w:
        raise ValueError(f"channel mismatch: input {cin}, weights {cin_w}")
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad))) if pad else x
    cols = _im2col(xp, k).reshape(n, cin * k, length + 2 * pad - k + 1)
    out = np.matmul(w.reshape(cout, cin * k), cols) + b[:, None]
    return out, (x.shape, cols, w, pad)


def conv1d_backward(dout: np.ndarray, cache):
    x_shape, cols, w, pad = cache
    n, cin, length = x_shape
    cout, _, k = w.shape
    db = dout.sum(axis=(0, 2))
    # dw[co, ci*k] = sum_n dout[n, co, :] @ cols[n, ci*k, :].T
    dw = np.matmul(dout, cols.transpose(0, 2, 1)).sum(axis=0).reshape(w.shape)
    # dx: full correlation of dout with the flipped, channel-transposed kernel
    doutp = np.pad(dout, ((0, 0), (0, 0), (k - 1, k - 1)))
    dcols = _im2col(doutp, k).reshape(n, cout * k, length + 2 * pad)
    w_flip = w[:, :, ::-1].transpose(1, 0, 2).reshape(cin, cout * k)
    dxp = np.matmul(w_flip, dcols)
    dx = dxp[:, :, pad : pad + length] if pad else dxp
    return np.ascontiguousarray(dx), dw, db


def relu_forward(x: np.ndarray):
    out = np.maximum(x, 0)
    return out, x


def relu_backward(dout: np.ndarray, cache):
    return dout * (cache > 0)


def maxpool1d_forward(x: np.ndarray, pool: int):
    """Non-overlapping max pooling; the length must divide evenly."""
    n, c, length = x.shape
    if length % pool != 0:
        raise ValueError(f"length {length} not divisible by pool size {pool}")
    xr = x.reshape(n, c, length // pool, pool)
    idx = xr.argmax(axis=3)
    out = np.take_along_axis(xr, idx[..., None], axis=3)[..., 0]
    return out, (x.shape, idx, pool)


def maxpool1d_backward(dout: np.ndarray, cache):
    x_shape, idx, pool = cache
    n, c, length = x_shape
    dxr = np.zeros((n, c, length // pool, pool), dtype=dout.dtype)
    np.put_along_axis(dxr, idx[..., None], dout[..., None], axis=3)
    return dxr.reshape(x_shape)


def global_avg_pool_forward(x: np.ndarray):
    """(N, C, L) -> (N, C) mean over the time axis."""
    return x.mean(axis=2), x.shape


def global_avg_pool_backward(dout: np.ndarray, cache):
    n, c, length = cache
    return np.broadcast_to(dout[:, :, None] / length, (n, c, length)).astype(dout.dtype, copy=True)


def linear_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """x (N, D), w (D, M), b (M,) -> (N, M)."""
    return x @ w + b, (x, w)


def linear_backward(dout: np.ndarray, cache):
    x, w = cache
    return dout @ w.T, x.T @ dout, dout.sum(axis=0)


def dropout_mask(shape, rate: float, rng: np.random.Generator, dtype) -> np.ndarray:
    """Inverted-dropout mask: zeros with probability ``rate``, survivors
    scaled by 1/(1-rate) so the expectation matches eval mode."""
    keep = (rng.random(shape) >= rate).astype(dtype)
    return keep / dtype(1.0 - rate)


def dropout_forward(x: np.ndarray, rate: float, rng: np.random.Generator | None,
                    training: bool):
    if not training or rate == 0.0:
        return x, None
    mask = dropout_mask(x.shape, rate, rng, x.dtype.type)
    return x * mask, mask


def dropout_backward(dout: np.ndarray, mask):
    return dout if mask is None else dout * mask


def channel_dropout_forward(x: np.ndarray, rate: float,
                            rng: np.random.Generator | None, training: bool):
    """Drops whole feature channels per sample: mask shape (N, C, 1)."""
    if not training or rate == 0.0:
        return x, None
    n, c, _ = x.shape
    mask = dropout_mask((n, c, 1), rate, rng, x.dtype.type)
    return x * mask, mask


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


BCE_EPS = 1e-7


def bce_loss(p: np.ndarray, y: np.ndarray) -> float:
    """Mean binary cross-entropy with probabilities clamped to
    [1e-7, 1 - 1e-7] to keep the logs finite."""
    p = np.asarray(p)
    y = np.asarray(y)
    if p.shape != y.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {y.shape}")
    pc = np.clip(p, BCE_EPS, 1.0 - BCE_EPS)
    return float(-np.mean(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc)))


def bce_sigmoid_grad(p: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gradient of mean BCE w.r.t. the pre-sigmoid logits: (p - y) / N."""
    return (p - y) / p.shape[0]

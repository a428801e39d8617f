"""Differentiable operations over :class:`Tensor`.

Each op computes its forward value with numpy and registers a closure that
maps the output gradient to input gradients. Shapes follow the (batch,
channels, length) convention of 1-D convolutional networks.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import Tensor, as_tensor, make_result


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# --------------------------------------------------------------------------- elementwise


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return make_result(a.data + b.data, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return make_result(a.data - b.data, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def bw(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return make_result(a.data * b.data, (a, b), bw)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return make_result(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def sigmoid(x: Tensor) -> Tensor:
    y = 0.5 * (1.0 + np.tanh(0.5 * x.data))
    return make_result(y, (x,), lambda g: (g * y * (1.0 - y),))


def identity(x: Tensor) -> Tensor:
    return x


# --------------------------------------------------------------------------- reductions / shape


def sum_all(x: Tensor) -> Tensor:
    return make_result(np.asarray(x.data.sum()), (x,), lambda g: (np.broadcast_to(g, x.shape).copy(),))


def mean(x: Tensor, axis: int | tuple[int, ...] | None = None) -> Tensor:
    """Mean over ``axis`` (all axes when None); reduced axes are dropped."""
    out = x.data.mean(axis=axis)
    count = x.data.size // max(out.size, 1)

    def bw(g):
        g_full = np.expand_dims(g, axis) if axis is not None else g
        return (np.broadcast_to(g_full, x.shape) / count,)

    return make_result(np.asarray(out), (x,), bw)


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    return make_result(x.data.reshape(shape), (x,), lambda g: (g.reshape(x.shape),))


def concat(tensors: Sequence[Tensor], axis: int = 1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def bw(g):
        return tuple(np.split(g, splits, axis=axis))

    return make_result(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), bw)


def pad_last(x: Tensor, left: int, right: int) -> Tensor:
    """Zero-pad the last axis."""
    widths = [(0, 0)] * (x.ndim - 1) + [(left, right)]
    n = x.shape[-1]
    return make_result(np.pad(x.data, widths), (x,), lambda g: (g[..., left:left + n],))


# --------------------------------------------------------------------------- linear


def dense(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """``x @ weight.T + bias`` for ``x`` of shape (B, F_in) and ``weight`` (F_out, F_in)."""
    if x.ndim != 2 or weight.ndim != 2 or x.shape[1] != weight.shape[1]:
        raise ValueError(f"dense shape mismatch: input {x.shape}, weight {weight.shape}")
    if bias is not None and bias.shape != (weight.shape[0],):
        raise ValueError(f"dense bias shape {bias.shape} != ({weight.shape[0]},)")
    out = x.data @ weight.data.T
    if bias is not None:
        out = out + bias.data
        inputs = (x, weight, bias)
    else:
        inputs = (x, weight)

    def bw(g):
        grads = (g @ weight.data, g.T @ x.data)
        return grads + (g.sum(axis=0),) if bias is not None else grads

    return make_result(out, inputs, bw)


def _padding_amounts(padding, width: int) -> tuple[int, int]:
    if padding in ("none", "valid", None):
        return 0, 0
    if padding == "same":
        total = width - 1
        return total // 2, total - total // 2
    if isinstance(padding, (tuple, list)):
        return int(padding[0]), int(padding[1])
    return int(padding), int(padding)


def conv1d(x: Tensor, kernel: Tensor, bias: Tensor | None = None, stride: int = 1, padding="none") -> Tensor:
    """1-D cross-correlation: input (B, C, L), kernel (F, C, W) -> (B, F, L').

    ``padding`` is ``"none"``, ``"same"`` (zero padding that keeps the length
    at stride 1; the extra element goes right for even kernels), an int, or a
    ``(left, right)`` pair.
    """
    if x.ndim != 3 or kernel.ndim != 3 or x.shape[1] != kernel.shape[1]:
        raise ValueError(f"conv1d shape mismatch: input {x.shape}, kernel {kernel.shape}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    n_f, _, width = kernel.shape
    if bias is not None and bias.shape != (n_f,):
        raise ValueError(f"conv1d bias shape {bias.shape} != ({n_f},)")
    pl, pr = _padding_amounts(padding, width)
    length = x.shape[2]
    padded = length + pl + pr
    if width > padded:
        raise ValueError(f"kernel width {width} exceeds padded length {padded}")
    xp = np.pad(x.data, ((0, 0), (0, 0), (pl, pr))) if pl or pr else x.data
    n_out = (padded - width) // stride + 1
    b, c_in = x.shape[0], x.shape[1]
    k2 = kernel.data.reshape(n_f, c_in * width)
    if width == 1 and stride == 1:
        cols = xp.transpose(0, 2, 1).reshape(b * n_out, c_in)
    else:
        view = sliding_window_view(xp, width, axis=2)[:, :, ::stride][:, :, :n_out]  # (B, C, L', W)
        cols = view.transpose(0, 2, 1, 3).reshape(b * n_out, c_in * width)
    out = (cols @ k2.T).reshape(b, n_out, n_f).transpose(0, 2, 1)
    if bias is not None:
        out = out + bias.data[None, :, None]
    inputs = (x, kernel) if bias is None else (x, kernel, bias)

    def bw(g):
        g2 = g.transpose(0, 2, 1).reshape(b * n_out, n_f)
        d_kernel = (g2.T @ cols).reshape(kernel.shape)
        d_cols = (g2 @ k2).reshape(b, n_out, c_in, width)
        if width == 1 and stride == 1:
            dxp = d_cols[..., 0].transpose(0, 2, 1)
        else:
            dxp = np.zeros_like(xp)
            stop = stride * (n_out - 1) + 1
            for k in range(width):
                dxp[:, :, k:k + stop:stride] += d_cols[:, :, :, k].transpose(0, 2, 1)
        dx = dxp[:, :, pl:pl + length]
        grads = (dx, d_kernel)
        return grads + (g.sum(axis=(0, 2)),) if bias is not None else grads

    return make_result(np.ascontiguousarray(out), inputs, bw)


# --------------------------------------------------------------------------- pooling


def _pool_windows(xp: np.ndarray, kernel: int, stride: int) -> tuple[np.ndarray, int]:
    n_out = (xp.shape[-1] - kernel) // stride + 1
    return sliding_window_view(xp, kernel, axis=-1)[..., ::stride, :][..., :n_out, :], n_out


def avg_pool1d(x: Tensor, kernel: int, stride: int | None = None, padding: int = 0) -> Tensor:
    """Window mean over the last axis; zero padding is counted in the mean."""
    stride = stride or kernel
    if kernel > x.shape[-1] + 2 * padding:
        raise ValueError(f"pool kernel {kernel} exceeds length {x.shape[-1]}")
    widths = [(0, 0)] * (x.ndim - 1) + [(padding, padding)]
    xp = np.pad(x.data, widths) if padding else x.data
    win, n_out = _pool_windows(xp, kernel, stride)
    length = x.shape[-1]

    def bw(g):
        dxp = np.zeros(xp.shape)
        stop = stride * (n_out - 1) + 1
        for k in range(kernel):
            dxp[..., k:k + stop:stride] += g / kernel
        return (dxp[..., padding:padding + length],)

    return make_result(win.mean(axis=-1), (x,), bw)


def max_pool1d(x: Tensor, kernel: int, stride: int | None = None, padding: int = 0) -> Tensor:
    """Window max over the last axis; padding is -inf. Ties route to the first maximum."""
    stride = stride or kernel
    if kernel > x.shape[-1] + 2 * padding:
        raise ValueError(f"pool kernel {kernel} exceeds length {x.shape[-1]}")
    widths = [(0, 0)] * (x.ndim - 1) + [(padding, padding)]
    xp = np.pad(x.data, widths, constant_values=-np.inf) if padding else x.data
    n_out = (xp.shape[-1] - kernel) // stride + 1
    stop = stride * (n_out - 1) + 1
    out = xp[..., 0:stop:stride].copy()
    arg = np.zeros(out.shape, dtype=np.int8 if kernel < 128 else np.int64)
    for k in range(1, kernel):
        cand = xp[..., k:k + stop:stride]
        better = cand > out
        out = np.where(better, cand, out)
        arg[better] = k
    length = x.shape[-1]

    def bw(g):
        dxp = np.zeros(xp.shape)
        for k in range(kernel):
            dxp[..., k:k + stop:stride] += g * (arg == k)
        return (dxp[..., padding:padding + length],)

    return make_result(out, (x,), bw)


# --------------------------------------------------------------------------- normalisation


def batch_norm1d(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    momentum: float = 0.1,
    training: bool = True,
    eps: float = 1e-5,
) -> Tensor:
    """Per-channel normalisation of a (B, C, L) input over batch and length.

    In training mode the batch statistics are used and the running buffers
    are updated in place as ``(1 - momentum) * running + momentum * batch``
    (the variance buffer takes the unbiased batch variance). In eval mode the
    running buffers normalise the input.
    """
    if x.ndim != 3:
        raise ValueError(f"batch_norm1d expects (B, C, L), got {x.shape}")
    n = x.shape[0] * x.shape[2]
    g_ = gamma.data[None, :, None]
    if training:
        if n <= 1:
            raise ValueError("batch_norm1d in training mode needs more than one value per channel")
        mu = x.data.mean(axis=(0, 2))
        var = x.data.var(axis=(0, 2))
        running_mean *= 1.0 - momentum
        running_mean += momentum * mu
        running_var *= 1.0 - momentum
        running_var += momentum * var * n / (n - 1)
    else:
        mu, var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu[None, :, None]) * inv_std[None, :, None]
    out = g_ * xhat + beta.data[None, :, None]

    def bw(g):
        d_gamma = (g * xhat).sum(axis=(0, 2))
        d_beta = g.sum(axis=(0, 2))
        d_xhat = g * g_
        if training:
            dx = (inv_std[None, :, None] / n) * (
                n * d_xhat
                - d_xhat.sum(axis=(0, 2), keepdims=True)
                - xhat * (d_xhat * xhat).sum(axis=(0, 2), keepdims=True)
            )
        else:
            dx = d_xhat * inv_std[None, :, None]
        return dx, d_gamma, d_beta

    return make_result(out, (x, gamma, beta), bw)


# --------------------------------------------------------------------------- losses


def mse_loss(pred: Tensor, target) -> Tensor:
    target = as_tensor(target)
    if pred.shape != target.shape:
        raise ValueError(f"mse_loss shape mismatch {pred.shape} vs {target.shape}")
    diff = pred.data - target.data
    n = diff.size

    def bw(g):
        d = (2.0 / n) * g * diff
        return d, -d

    return make_result(np.asarray(np.mean(diff * diff)), (pred, target), bw)

"""Multilevel wavelet decomposition network (mWDN) front-end.

Each level maps its input sequence ``e`` through two dense layers whose
weight matrices start as Toeplitz matrices carrying the db4 low-pass and
high-pass filters, applies the activation and average-pools by two. The
low-pass branch feeds the next level; every level's high-pass output and the
last low-pass output are handed to separate sub-networks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..autodiff import Module, Tensor

# db4 reconstruction low-pass; correlating with it equals convolving with the
# analysis low-pass, i.e. the classical DWT analysis filter.
DB4_LOW = np.array([
    0.23037781330889650086, 0.71484657055291564709, 0.63088076792985890788, -0.027983769416859854211,
    -0.18703481171909308408, 0.030841381835560763627, 0.032883011666885199735, -0.010597401785069032105,
])
# quadrature mirror: h[k] = (-1)^k l[N-1-k]
DB4_HIGH = np.array([(-1) ** k * DB4_LOW[len(DB4_LOW) - 1 - k] for k in range(len(DB4_LOW))])

WAVELETS = {"db4": (DB4_LOW, DB4_HIGH)}


def filter_matrix(coeffs: np.ndarray, length: int) -> np.ndarray:
    """Square matrix with ``W[n, n + k] = coeffs[k]``, truncated at the right edge."""
    W = np.zeros((length, length))
    for k, c in enumerate(coeffs):
        idx = np.arange(length - k)
        W[idx, idx + k] = c
    return W


@dataclass(frozen=True)
class MwdnConfig:
    levels: int = 4
    wavelet: str = "db4"
    noise_scale: float = 0.01
    test_linear_mode: bool = False
    pool_kernel: int = 2
    pool_stride: int = 2
    pool_padding: int = 0

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.wavelet not in WAVELETS:
            raise ValueError(f"unknown wavelet {self.wavelet!r}")

    @classmethod
    def table_pooling(cls, **kwargs) -> "MwdnConfig":
        """Variant with kernel-3 / stride-1 average pooling (length-preserving)."""
        return cls(pool_kernel=3, pool_stride=1, pool_padding=1, **kwargs)

    def pooled_length(self, length: int) -> int:
        return (length + 2 * self.pool_padding - self.pool_kernel) // self.pool_stride + 1

    def level_lengths(self, length: int) -> list[tuple[int, int]]:
        """``(padded input length, output length)`` for every level."""
        out = []
        for _ in range(self.levels):
            padded = length + (length % 2 if self.pool_stride == 2 else 0)
            length = self.pooled_length(padded)
            if length < 1:
                raise ValueError("sequence too short for the requested number of levels")
            out.append((padded, length))
        return out


class MwdnLevel(Module):
    def __init__(self, length: int, config: MwdnConfig, rng: np.random.Generator):
        low, high = WAVELETS[config.wavelet]
        scale = config.noise_scale * np.mean(np.abs(np.concatenate([low, high])))
        self.W_low = Tensor(filter_matrix(low, length) + rng.uniform(-scale, scale, (length, length)), requires_grad=True)
        self.b_low = Tensor(np.zeros(length), requires_grad=True)
        self.W_high = Tensor(filter_matrix(high, length) + rng.uniform(-scale, scale, (length, length)), requires_grad=True)
        self.b_high = Tensor(np.zeros(length), requires_grad=True)
        self.length = length
        self.config = config

    def pre_activations(self, e: Tensor) -> tuple[Tensor, Tensor]:
        if e.shape[-1] != self.length:
            raise ValueError(f"level expects length {self.length}, got {e.shape[-1]}")
        return ad.dense(e, self.W_low, self.b_low), ad.dense(e, self.W_high, self.b_high)

    def forward(self, e: Tensor) -> tuple[Tensor, Tensor]:
        """Return ``(approximation, detail)`` after activation and pooling."""
        c = self.config
        act = ad.identity if c.test_linear_mode else ad.sigmoid
        a_low, a_high = self.pre_activations(e)
        pool = lambda t: ad.avg_pool1d(act(t), c.pool_kernel, c.pool_stride, c.pool_padding)
        return pool(a_low), pool(a_high)


def mwdn_layer(e: Tensor, level: MwdnLevel) -> tuple[Tensor, Tensor]:
    """One decomposition level; odd-length inputs must be padded by the caller."""
    if level.config.pool_stride == 2 and e.shape[-1] % 2:
        raise ValueError(f"mwdn_layer needs an even-length input, got {e.shape[-1]}")
    return level(e)


def _pad_if_odd(e: Tensor, target: int) -> Tensor:
    extra = target - e.shape[-1]
    return ad.pad_last(e, 0, extra) if extra else e


def _pad_time_if_odd(time: np.ndarray, target: int) -> np.ndarray:
    extra = target - time.shape[-1]
    return np.pad(time, ((0, 0), (0, 0), (0, extra)), mode="edge") if extra else time


class MwdnCascade(Module):
    def __init__(self, input_length: int, config: MwdnConfig, rng: np.random.Generator):
        self.config = config
        self.lengths = config.level_lengths(input_length)
        self.levels = [MwdnLevel(padded, config, rng) for padded, _ in self.lengths]

    def forward(self, load: Tensor, time: np.ndarray | None = None):
        """Decompose ``load`` (B, L).

        Returns the sub-sequences ``[e_h(1), ..., e_h(I), e_l(I)]`` and, when
        ``time`` (B, C, L) is given, the time channels pooled to each length.
        """
        c = self.config
        seqs, times = [], []
        e = load
        for level, (padded, _) in zip(self.levels, self.lengths):
            e = _pad_if_odd(e, padded)
            e, detail = level(e)
            seqs.append(detail)
            if time is not None:
                time = _pad_time_if_odd(time, padded)
                time = ad.avg_pool1d(Tensor(time), c.pool_kernel, c.pool_stride, c.pool_padding).data
                times.append(time)
        seqs.append(e)
        if time is not None:
            times.append(time)
        return seqs, times

    def pre_pool_outputs(self, load: Tensor) -> list[tuple[np.ndarray, np.ndarray]]:
        """Per-level ``(low, high)`` outputs after activation, before pooling."""
        c = self.config
        act = ad.identity if c.test_linear_mode else ad.sigmoid
        out = []
        e = load
        for level, (padded, _) in zip(self.levels, self.lengths):
            e = _pad_if_odd(e, padded)
            a_low, a_high = level.pre_activations(e)
            a_low, a_high = act(a_low), act(a_high)
            out.append((a_low.data, a_high.data))
            e = ad.avg_pool1d(a_low, c.pool_kernel, c.pool_stride, c.pool_padding)
        return out

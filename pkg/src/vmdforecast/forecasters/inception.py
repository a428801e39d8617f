"""InceptionTime feature extractor (embedding only; the head lives in the fused model)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..autodiff import BatchNorm1d, Conv1d, Module, Tensor


@dataclass(frozen=True)
class InceptionConfig:
    modules: int = 6
    filters: int = 32
    kernel_sizes: tuple[int, ...] = (39, 19, 9)
    bottleneck: int | None = None  # defaults to ``filters``
    residual: bool = True
    bn_momentum: float = 0.1
    maxpool_kernel: int = 3

    def __post_init__(self):
        if self.modules < 1:
            raise ValueError("modules must be >= 1")
        if any(k % 2 == 0 for k in self.kernel_sizes):
            raise ValueError(f"kernel sizes must be odd, got {self.kernel_sizes}")

    @property
    def width(self) -> int:
        """Channels produced by each module (branches x filters)."""
        return self.filters * (len(self.kernel_sizes) + 1)


PAPER_INCEPTION = InceptionConfig()
DESK_INCEPTION = InceptionConfig(modules=2, filters=8, kernel_sizes=(9, 5, 3))


class InceptionModule(Module):
    def __init__(self, c_in: int, config: InceptionConfig, rng: np.random.Generator):
        nf = config.filters
        width = config.bottleneck or nf
        self.bottleneck = Conv1d(c_in, width, 1, rng, bias=False) if c_in > 1 else None
        branch_in = width if self.bottleneck is not None else c_in
        self.convs = [Conv1d(branch_in, nf, k, rng, bias=False, padding="same") for k in config.kernel_sizes]
        self.pool_conv = Conv1d(c_in, nf, 1, rng, bias=False)
        self.bn = BatchNorm1d(config.width, momentum=config.bn_momentum)
        self.maxpool_kernel = config.maxpool_kernel

    def forward(self, x: Tensor) -> Tensor:
        h = self.bottleneck(x) if self.bottleneck is not None else x
        pad = self.maxpool_kernel // 2
        pooled = ad.max_pool1d(x, self.maxpool_kernel, 1, pad)
        branches = [conv(h) for conv in self.convs] + [self.pool_conv(pooled)]
        return ad.relu(self.bn(ad.concat(branches, axis=1)))


class Shortcut(Module):
    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator, momentum: float):
        self.conv = Conv1d(c_in, c_out, 1, rng, bias=False) if c_in != c_out else None
        self.bn = BatchNorm1d(c_out, momentum=momentum)

    def forward(self, x: Tensor) -> Tensor:
        return self.bn(self.conv(x) if self.conv is not None else x)


class InceptionTime(Module):
    """Stack of inception modules with a residual every third module, then global average pooling."""

    def __init__(self, c_in: int, config: InceptionConfig, rng: np.random.Generator):
        self.config = config
        self.blocks = []
        self.shortcuts = []
        for d in range(config.modules):
            self.blocks.append(InceptionModule(c_in if d == 0 else config.width, config, rng))
            if config.residual and d % 3 == 2:
                n_in = c_in if d == 2 else config.width
                self.shortcuts.append(Shortcut(n_in, config.width, rng, config.bn_momentum))

    @property
    def embedding_size(self) -> int:
        return self.config.width

    def forward(self, x: Tensor) -> Tensor:
        res = x
        for d, block in enumerate(self.blocks):
            x = block(x)
            if self.config.residual and d % 3 == 2:
                x = ad.relu(ad.add(x, self.shortcuts[d // 3](res)))
                res = x
        return ad.mean(x, axis=2)

"""mWDN(InceptionTime) network, training loop and the forecaster wrapper."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import autodiff as ad
from ..autodiff import Adam, Dense, Module, Tape, Tensor
from ..errors import DataError, NumericalError
from ..load_data import STEPS_PER_DAY, StandardizationParams, WindowedDataset, standardize, standardize_dataset
from .inception import DESK_INCEPTION, PAPER_INCEPTION, InceptionConfig, InceptionTime
from .mwdn import MwdnCascade, MwdnConfig

logger = logging.getLogger(__name__)

HORIZON = STEPS_PER_DAY

PROFILES: dict[str, InceptionConfig] = {"paper": PAPER_INCEPTION, "desk": DESK_INCEPTION}


class MwdnInception(Module):
    """Wavelet cascade on the load channel, one InceptionTime per sub-sequence, dense fusion.

    Input is (B, 3, 48): standardized load, hour and day channels. The time
    channels skip the cascade and are average-pooled to each sub-sequence's
    length before joining it as extra input channels.
    """

    def __init__(self, mwdn: MwdnConfig, inception: InceptionConfig, seed: int,
                 input_length: int = STEPS_PER_DAY, horizon: int = HORIZON, time_channels: int = 2):
        rng = np.random.default_rng(seed)
        self.mwdn_config = mwdn
        self.inception_config = inception
        self.cascade = MwdnCascade(input_length, mwdn, rng)
        self.subnets = [InceptionTime(1 + time_channels, inception, rng) for _ in range(mwdn.levels + 1)]
        self.head = Dense(inception.width * len(self.subnets), horizon, rng)

    def embeddings(self, x) -> list[Tensor]:
        data = x.data if isinstance(x, Tensor) else np.asarray(x, dtype=float)
        load = Tensor(data[:, 0, :])
        seqs, times = self.cascade(load, data[:, 1:, :])
        out = []
        for net, seq, time in zip(self.subnets, seqs, times):
            b, length = seq.shape
            inp = ad.concat([ad.reshape(seq, (b, 1, length)), Tensor(time)], axis=1)
            out.append(net(inp))
        return out

    def forward(self, x) -> Tensor:
        return self.head(ad.concat(self.embeddings(x), axis=1))


def mwdn_forward(x, model: MwdnInception) -> Tensor:
    """Forward pass of a (B, 3, 48) batch to (B, 48) standardized forecasts."""
    return model(x)


def build_network(levels: int, profile: str | InceptionConfig = "desk", seed: int = 0, **mwdn_kwargs) -> MwdnInception:
    inception = PROFILES[profile] if isinstance(profile, str) else profile
    return MwdnInception(MwdnConfig(levels=levels, **mwdn_kwargs), inception, seed)


# --------------------------------------------------------------------------- training


@dataclass
class TrainResult:
    losses: list[float]
    steps: int


def train(network: Module, dataset: WindowedDataset, epochs: int = 30, batch: int = 64, seed: int = 0,
          lr: float = 0.002) -> TrainResult:
    """Minimise MSE with Adam on an already standardized dataset.

    Batches are drawn from a seeded permutation each epoch; the final partial
    batch is kept. Returns the mean training loss of every epoch.
    """
    n = len(dataset)
    if n == 0:
        raise DataError("cannot train on an empty dataset")
    rng = np.random.default_rng([seed, 1])
    opt = Adam(network.parameters(), lr=lr)
    network.train()
    losses = []
    steps = 0
    for epoch in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            opt.zero_grad()
            with Tape() as tape:
                pred = network(dataset.inputs[idx])
                loss = ad.mse_loss(pred, dataset.targets[idx])
            value = float(loss.data)
            if not np.isfinite(value):
                raise NumericalError(f"non-finite loss at epoch {epoch}, batch starting {start}: {value}")
            ad.backward(loss, tape)
            opt.step()
            total += value * len(idx)
            steps += 1
        losses.append(total / n)
        logger.debug("epoch %d loss %.6f", epoch, losses[-1])
    network.eval()
    return TrainResult(losses, steps)


def predict_standardized(network: Module, inputs: np.ndarray, batch: int = 256) -> np.ndarray:
    network.eval()
    outs = [network(inputs[i:i + batch]).data for i in range(0, len(inputs), batch)]
    return np.concatenate(outs, axis=0) if outs else np.zeros((0, HORIZON))


# --------------------------------------------------------------------------- forecaster wrapper


@dataclass
class ForecastModel:
    """A network plus the standardization it was trained under.

    ``kind`` is ``"mwdn-inception"`` for the built-in model; other kinds come
    from :data:`FORECASTER_REGISTRY`.
    """

    kind: str
    network: Module
    standardization: StandardizationParams | None = None
    history: list[float] = field(default_factory=list)

    def fit(self, train_set: WindowedDataset, params: StandardizationParams, epochs: int = 30, batch: int = 64,
            seed: int = 0, lr: float = 0.002) -> TrainResult:
        self.standardization = params
        result = train(self.network, standardize_dataset(train_set, params), epochs, batch, seed, lr)
        self.history.extend(result.losses)
        return result

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        """Forecast 48 values in watts for each (3, 48) raw input window."""
        if self.standardization is None:
            raise DataError("model has no fitted standardization")
        p = self.standardization
        x = standardize(inputs, StandardizationParams(p.mean[:, None], p.std[:, None]))
        out = predict_standardized(self.network, x)
        return standardize(out, p.load, "inverse")


FORECASTER_REGISTRY: dict[str, Callable[..., Module]] = {
    "mwdn-inception": lambda levels=4, profile="desk", seed=0, **kw: build_network(levels, profile, seed, **kw),
}


def register_forecaster(kind: str, factory: Callable[..., Module]) -> None:
    """Make an extra network family (e.g. a ResNet) available to the pipeline."""
    FORECASTER_REGISTRY[kind] = factory


def make_forecaster(kind: str = "mwdn-inception", **kwargs) -> ForecastModel:
    try:
        factory = FORECASTER_REGISTRY[kind]
    except KeyError:
        raise ValueError(f"unknown forecaster {kind!r}") from None
    return ForecastModel(kind, factory(**kwargs))


def sum_forecasts(forecasts) -> np.ndarray:
    """Elementwise sum of per-component forecasts (all already in watts)."""
    arrays = [np.asarray(f, dtype=float) for f in forecasts]
    if not arrays:
        raise ValueError("no forecasts to sum")
    shape = arrays[0].shape
    for a in arrays[1:]:
        if a.shape != shape:
            raise ValueError(f"forecast shapes differ: {shape} vs {a.shape}")
    return np.sum(arrays, axis=0)

"""Household load ingestion, 30-minute resampling and sliding-window datasets."""
from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Literal

import numpy as np

from .container import read_container, write_container
from .errors import DataError

logger = logging.getLogger(__name__)

BUCKET_S = 1800
STEPS_PER_DAY = 48
DAY_S = 86400
WINDOW_STEPS = 2 * STEPS_PER_DAY


@dataclass(frozen=True)
class LoadProfile:
    household_id: str
    timestamps: np.ndarray
    power_w: np.ndarray
    source_period_s: float

    def __post_init__(self):
        if self.timestamps.shape != self.power_w.shape:
            raise DataError("timestamps and power_w differ in length")
        if np.any(np.diff(self.timestamps) <= 0):
            raise DataError("timestamps are not strictly increasing")
        if not np.all(np.isfinite(self.power_w)) or np.any(self.power_w < 0):
            raise DataError("power_w must be finite and non-negative")

    def __len__(self) -> int:
        return len(self.timestamps)


@dataclass(frozen=True)
class ResampledProfile:
    """Bucket means over ``[start_time + i*1800, start_time + (i+1)*1800)``.

    ``gap_mask[i]`` is True when bucket ``i`` received no source samples; the
    value stored there is 0 and must not be used.
    """

    household_id: str
    power_w_30min: np.ndarray
    start_time: int
    gap_mask: np.ndarray

    @property
    def bucket_times(self) -> np.ndarray:
        return self.start_time + BUCKET_S * np.arange(len(self.power_w_30min), dtype=np.int64)

    @property
    def n_days(self) -> int:
        return len(self.power_w_30min) // STEPS_PER_DAY


@dataclass(frozen=True)
class WindowedDataset:
    inputs: np.ndarray  # (N, 3, 48): load, hour of day, day of week
    targets: np.ndarray  # (N, 48)
    window_start_times: np.ndarray  # (N,) epoch seconds

    def __post_init__(self):
        n = len(self.window_start_times)
        if self.inputs.ndim != 3 or self.inputs.shape[0] != n or self.inputs.shape[2] != STEPS_PER_DAY:
            raise DataError(f"inputs must be (N, C, 48), got {self.inputs.shape}")
        if self.targets.shape != (n, STEPS_PER_DAY):
            raise DataError(f"targets must be (N, 48), got {self.targets.shape}")

    def __len__(self) -> int:
        return len(self.window_start_times)

    def subset(self, index) -> "WindowedDataset":
        return WindowedDataset(self.inputs[index], self.targets[index], self.window_start_times[index])

    def with_load(self, inputs_load: np.ndarray, targets: np.ndarray) -> "WindowedDataset":
        """Copy of the dataset with channel 0 and targets replaced."""
        inputs = self.inputs.copy()
        inputs[:, 0, :] = inputs_load
        return WindowedDataset(inputs, np.array(targets, dtype=float), self.window_start_times.copy())


@dataclass(frozen=True)
class StandardizationParams:
    """Per-channel ``mean``/``std``; index 0 (load) also applies to targets."""

    mean: np.ndarray
    std: np.ndarray
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if np.any(np.asarray(self.std) <= 0):
            raise DataError("standardization std must be positive")

    @property
    def load(self) -> "StandardizationParams":
        return StandardizationParams(np.asarray(self.mean[0]), np.asarray(self.std[0]))

    def to_dict(self) -> dict:
        return {"mean": [float(v) for v in np.ravel(self.mean)], "std": [float(v) for v in np.ravel(self.std)]}

    @classmethod
    def from_dict(cls, d: dict) -> "StandardizationParams":
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["std"], dtype=float))


# --------------------------------------------------------------------------- ingest


def _parse_timestamp(raw: str) -> float:
    raw = raw.strip()
    try:
        return float(raw)
    except ValueError:
        pass
    text = raw[:-1] + "+00:00" if raw.endswith("Z") else raw
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def ingest_csv(
    path,
    timestamp_col: str = "timestamp",
    power_col: str = "power_w",
    household_id: str | None = None,
) -> LoadProfile:
    """Read a household CSV into a :class:`LoadProfile`.

    Timestamps may be epoch seconds or ISO-8601 strings (naive values are
    taken as UTC). Rows must already be in chronological order.

    Raises
    ------
    DataError
        On a missing column, an unparsable row (with its line number), an
        empty file, or timestamps that are not strictly increasing.
    """
    path = Path(path)
    times: list[float] = []
    power: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: no data rows")
        missing = {timestamp_col, power_col} - set(reader.fieldnames)
        if missing:
            raise DataError(f"{path}: missing column(s) {sorted(missing)}")
        for row in reader:
            line = reader.line_num
            try:
                t = _parse_timestamp(row[timestamp_col])
                p = float(row[power_col])
            except (TypeError, ValueError) as exc:
                raise DataError(f"{path}:{line}: malformed row ({exc})") from None
            if not math.isfinite(p) or p < 0:
                raise DataError(f"{path}:{line}: power must be finite and non-negative, got {p}")
            if times and t <= times[-1]:
                raise DataError(f"{path}:{line}: non-monotonic timestamp {t} after {times[-1]} (unsorted data)")
            times.append(t)
            power.append(p)
    if not times:
        raise DataError(f"{path}: no data rows")
    ts = np.asarray(times, dtype=float)
    period = float(np.median(np.diff(ts))) if len(ts) > 1 else 0.0
    return LoadProfile(household_id or path.stem, ts, np.asarray(power, dtype=float), period)


# --------------------------------------------------------------------------- resample


def resample_30min(profile: LoadProfile) -> ResampledProfile:
    """Average the source samples into 30-minute buckets covering whole UTC days."""
    if len(profile) == 0:
        raise DataError("cannot resample an empty profile")
    t = profile.timestamps
    start = int(math.floor(t[0] / DAY_S)) * DAY_S
    end = (int(math.floor(t[-1] / DAY_S)) + 1) * DAY_S
    n_buckets = (end - start) // BUCKET_S
    idx = np.floor((t - start) / BUCKET_S).astype(np.int64)
    counts = np.bincount(idx, minlength=n_buckets)
    sums = np.bincount(idx, weights=profile.power_w, minlength=n_buckets)
    gap = counts == 0
    means = np.zeros(n_buckets)
    means[~gap] = sums[~gap] / counts[~gap]
    return ResampledProfile(profile.household_id, means, start, gap)


# --------------------------------------------------------------------------- windows


def hour_of_day(epoch_s) -> np.ndarray:
    return (np.asarray(epoch_s, dtype=np.int64) % DAY_S) // 3600


def day_of_week(epoch_s) -> np.ndarray:
    """Monday = 0 ... Sunday = 6 (1970-01-01 was a Thursday)."""
    return (np.asarray(epoch_s, dtype=np.int64) // DAY_S + 3) % 7


def clean_window_starts(gap_mask: np.ndarray, span: int = WINDOW_STEPS) -> np.ndarray:
    """Indices ``i`` such that buckets ``i .. i+span-1`` are all unmasked."""
    if len(gap_mask) < span:
        return np.zeros(0, dtype=np.int64)
    gaps = np.concatenate([[0], np.cumsum(gap_mask.astype(np.int64))])
    in_window = gaps[span:] - gaps[:-span]
    return np.flatnonzero(in_window == 0)


def build_windows(resampled: ResampledProfile) -> WindowedDataset:
    """Unit-stride 48h windows: first 24h as input, last 24h as target."""
    starts = clean_window_starts(resampled.gap_mask)
    if len(starts) == 0:
        raise DataError("insufficient data: no 48h span of consecutive complete buckets")
    values = resampled.power_w_30min
    times = resampled.bucket_times
    offs = starts[:, None] + np.arange(STEPS_PER_DAY)[None, :]
    in_times = times[offs]
    inputs = np.stack(
        [values[offs], hour_of_day(in_times).astype(float), day_of_week(in_times).astype(float)], axis=1
    )
    targets = values[offs + STEPS_PER_DAY]
    return WindowedDataset(inputs, targets, times[starts].astype(np.int64))


def chrono_split(dataset: WindowedDataset, train_fraction: float = 0.8) -> tuple[WindowedDataset, WindowedDataset]:
    if not 0.0 < train_fraction < 1.0:
        raise DataError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n = len(dataset)
    n_train = int(math.floor(n * train_fraction + 1e-9))
    if n_train == 0 or n_train == n:
        raise DataError(f"split of {n} windows at {train_fraction} leaves an empty side")
    return dataset.subset(slice(0, n_train)), dataset.subset(slice(n_train, n))


# --------------------------------------------------------------------------- standardization


def fit_standardization(train: WindowedDataset) -> StandardizationParams:
    """Per-channel training statistics.

    The load statistics pool channel 0 of the inputs with the targets, since
    both are the same quantity; time channels get one shared pair each.
    Zero-variance channels fall back to ``std = 1`` with a warning.
    """
    if len(train) == 0:
        raise DataError("cannot fit standardization on an empty dataset")
    n_ch = train.inputs.shape[1]
    means = np.empty(n_ch)
    stds = np.empty(n_ch)
    notes = []
    for c in range(n_ch):
        vals = train.inputs[:, c, :].ravel()
        if c == 0:
            vals = np.concatenate([vals, train.targets.ravel()])
        means[c] = vals.mean()
        stds[c] = vals.std()
        if not stds[c] > 1e-12 * max(1.0, abs(means[c])):
            msg = f"channel {c} has zero variance; using std=1"
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            notes.append(msg)
            stds[c] = 1.0
    return StandardizationParams(means, stds, tuple(notes))


def standardize(
    data: np.ndarray,
    params: StandardizationParams,
    direction: Literal["forward", "inverse"] = "forward",
) -> np.ndarray:
    """Apply ``(x - mean) / std`` or its inverse; params broadcast against ``data``."""
    mean = np.asarray(params.mean, dtype=float)
    std = np.asarray(params.std, dtype=float)
    if np.any(std <= 0):
        raise DataError("zero std in standardization params")
    if direction == "forward":
        return (np.asarray(data, dtype=float) - mean) / std
    if direction == "inverse":
        return np.asarray(data, dtype=float) * std + mean
    raise ValueError(f"unknown direction {direction!r}")


def standardize_dataset(dataset: WindowedDataset, params: StandardizationParams) -> WindowedDataset:
    per_channel = StandardizationParams(params.mean[:, None], params.std[:, None])
    inputs = standardize(dataset.inputs, per_channel)
    targets = standardize(dataset.targets, params.load)
    return WindowedDataset(inputs, targets, dataset.window_start_times)


# --------------------------------------------------------------------------- persistence


def save_windows(dataset: WindowedDataset, path) -> None:
    n, c, length = dataset.inputs.shape
    write_container(path, (n, c, length), dataset.inputs, dataset.targets, dataset.window_start_times)


def load_windows(path) -> WindowedDataset:
    (n, c, length), payload = read_container(path)
    expected = n * c * length + n * length + n
    if payload.size != expected:
        raise DataError(f"{path}: payload holds {payload.size} values, expected {expected}")
    a = n * c * length
    inputs = payload[:a].reshape(n, c, length)
    targets = payload[a:a + n * length].reshape(n, length)
    starts = payload[a + n * length:].astype(np.int64)
    return WindowedDataset(inputs, targets, starts)


def save_resampled_csv(resampled: ResampledProfile, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "power_w", "gap"])
        for t, v, g in zip(resampled.bucket_times, resampled.power_w_30min, resampled.gap_mask):
            w.writerow([int(t), repr(float(v)), int(g)])


__all__ = [
    "LoadProfile", "ResampledProfile", "WindowedDataset", "StandardizationParams",
    "ingest_csv", "resample_30min", "build_windows", "chrono_split",
    "fit_standardization", "standardize", "standardize_dataset",
    "save_windows", "load_windows", "save_resampled_csv",
    "hour_of_day", "day_of_week", "clean_window_starts",
]

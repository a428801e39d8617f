"""Experiment orchestration: decompose, train one forecaster per component, sum, score.

A run is identified by ``(household, K, I)``. Its directory holds one
checkpoint per component model, the test-set forecasts and a ``record.json``
summary. Component checkpoints carry the config hash, so re-running the
same cell skips every component that already finished.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .autodiff import load_checkpoint, save_checkpoint
from .container import read_container, write_container
from .errors import ConfigError, DataError, StageError, VmdForecastError
from .forecasters import build_network, evaluate_days, predict_standardized, train
from .forecasters.model import PROFILES
from .load_data import (
    BUCKET_S, DAY_S, STEPS_PER_DAY, ResampledProfile, StandardizationParams, WindowedDataset, build_windows,
    chrono_split, fit_standardization, ingest_csv, resample_30min, standardize, standardize_dataset,
)
from .metrics import MetricsReport, evaluate, horizon_error_profile, write_metrics_csv
from .vmd import VmdConfig, decompose_dataset, energy_shares

logger = logging.getLogger(__name__)

MODEL_NAME = "mwdn-inception"
BASELINE_NAME = "historical-mean"

DEFAULT_K_LIST = [7, 15, 31, 63, 127, 255, "none"]
DEFAULT_I_LIST = [3, 4, 5]


# --------------------------------------------------------------------------- config


@dataclass
class ExperimentConfig:
    """Flat experiment settings; see the README for the JSON schema.

    ``K`` values are positive ints or the string ``"none"`` (no
    decomposition). ``train_stride`` keeps every n-th training window and
    exists to make desk-scale runs affordable; test windows always use unit
    stride.
    """

    households: dict[str, str]
    output_dir: str = "runs"
    timestamp_col: str = "timestamp"
    power_col: str = "power_w"
    granularity_s: int = BUCKET_S
    train_fraction: float = 0.8
    k_list: list = field(default_factory=lambda: list(DEFAULT_K_LIST))
    i_list: list = field(default_factory=lambda: list(DEFAULT_I_LIST))
    vmd_alpha: float = 1000.0
    vmd_tol: float = 5e-6
    vmd_tau: float = 0.0
    vmd_max_iters: int = 500
    vmd_init: str = "zero"
    vmd_boundary: str = "mirror"
    vmd_scope: str = "per-window"
    profile: str = "desk"
    lr: float = 0.002
    batch: int = 64
    epochs: int = 30
    train_stride: int = 1
    base_seed: int = 0
    workers: int = 1

    def validate(self, check_paths: bool = True) -> "ExperimentConfig":
        if not isinstance(self.households, dict) or not self.households:
            raise ConfigError("households must be a non-empty mapping of id -> csv path")
        if check_paths:
            for hid, path in self.households.items():
                if not Path(path).is_file():
                    raise ConfigError(f"household {hid!r}: data file {path} does not exist")
        if self.granularity_s != BUCKET_S:
            raise ConfigError(f"only {BUCKET_S}-second granularity is supported, got {self.granularity_s}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must lie in (0, 1)")
        if not self.k_list:
            raise ConfigError("k_list must not be empty")
        for k in self.k_list:
            if not (k == "none" or (isinstance(k, int) and not isinstance(k, bool) and k >= 1)):
                raise ConfigError(f"k_list entries must be positive ints or 'none', got {k!r}")
        if not self.i_list:
            raise ConfigError("i_list must not be empty")
        for i in self.i_list:
            if not (isinstance(i, int) and not isinstance(i, bool) and 1 <= i <= 5):
                raise ConfigError(f"i_list entries must be ints in [1, 5], got {i!r}")
        if self.profile not in PROFILES:
            raise ConfigError(f"profile must be one of {sorted(PROFILES)}, got {self.profile!r}")
        if self.vmd_scope not in ("per-window", "whole-series"):
            raise ConfigError(f"unknown vmd_scope {self.vmd_scope!r}")
        for name in ("lr",):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("batch", "epochs", "train_stride", "workers"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v >= 1):
                raise ConfigError(f"{name} must be a positive int, got {v!r}")
        try:
            self.vmd_config(1)
        except ValueError as exc:
            raise ConfigError(f"invalid VMD settings: {exc}") from None
        return self

    def vmd_config(self, K: int) -> VmdConfig:
        return VmdConfig(K=K, alpha=self.vmd_alpha, tol=self.vmd_tol, tau=self.vmd_tau,
                         max_iters=self.vmd_max_iters, init_mode=self.vmd_init, boundary=self.vmd_boundary)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "ExperimentConfig":
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "households" not in data:
            raise ConfigError("config must define households")
        kwargs = dict(data)
        households = kwargs["households"]
        if not isinstance(households, dict):
            raise ConfigError("households must be a mapping of id -> csv path")
        if base_dir is not None:
            households = {h: str((base_dir / p) if not Path(p).is_absolute() else Path(p))
                          for h, p in households.items()}
            out = Path(kwargs.get("output_dir", cls.output_dir))
            kwargs["output_dir"] = str(out if out.is_absolute() else base_dir / out)
        kwargs["households"] = {str(h): str(p) for h, p in households.items()}
        for name in ("k_list", "i_list"):
            if name in kwargs and not isinstance(kwargs[name], list):
                raise ConfigError(f"{name} must be a list")
        float_fields = ("train_fraction", "vmd_alpha", "vmd_tol", "vmd_tau", "lr")
        for name in float_fields:
            if name in kwargs:
                v = kwargs[name]
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ConfigError(f"{name} must be a number, got {v!r}")
                kwargs[name] = float(v)
        for name in ("granularity_s", "vmd_max_iters", "batch", "epochs", "train_stride", "base_seed", "workers"):
            if name in kwargs and (isinstance(kwargs[name], bool) or not isinstance(kwargs[name], int)):
                raise ConfigError(f"{name} must be an integer, got {kwargs[name]!r}")
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(data, base_dir=path.resolve().parent)


def config_hash(config: ExperimentConfig) -> str:
    """SHA-256 of the canonical JSON form (sorted keys, no whitespace)."""
    canon = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _training_hash(config: ExperimentConfig) -> str:
    """Hash of the settings a component checkpoint depends on (not the output dir)."""
    d = config.to_dict()
    d.pop("output_dir")
    d.pop("workers")
    d.pop("k_list")
    d.pop("i_list")
    return hashlib.sha256(json.dumps(d, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def k_label(K) -> str:
    return "none" if K in (None, "none") else str(int(K))


# --------------------------------------------------------------------------- records


@dataclass
class RunRecord:
    config_hash: str
    household: str
    K: str
    I: int
    model: str
    stage_seconds: dict[str, float]
    metrics: MetricsReport
    baseline_rmse: float
    baseline_days: int
    n_train_windows: int
    n_test_windows: int
    checkpoints: list[str]
    energy_shares: list[float]
    run_dir: str
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["metrics"] = self.metrics.to_dict()
        return d

    def save(self, path=None) -> Path:
        path = Path(path) if path else Path(self.run_dir) / "record.json"
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))
        return path

    @classmethod
    def load(cls, path) -> "RunRecord":
        from .metrics import BoxSummary

        d = json.loads(Path(path).read_text())
        m = d["metrics"]
        m.pop("mape_pct", None)
        m["per_horizon_abs"] = [BoxSummary(**b) for b in m["per_horizon_abs"]]
        m["per_horizon_signed"] = [BoxSummary(**b) for b in m["per_horizon_signed"]]
        d["metrics"] = MetricsReport(**m)
        return cls(**d)

    def forecasts(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(forecast, actual, window_start_times)`` of the test set, in watts."""
        return load_forecasts(Path(self.run_dir) / "forecasts.lcw")


def save_forecasts(path, forecast: np.ndarray, actual: np.ndarray, starts: np.ndarray) -> None:
    n, h = forecast.shape
    write_container(path, (n, 1, h), forecast, actual, starts)


def load_forecasts(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    (n, _, h), payload = read_container(path)
    if payload.size != 2 * n * h + n:
        raise DataError(f"{path}: unexpected payload size")
    return (payload[:n * h].reshape(n, h), payload[n * h:2 * n * h].reshape(n, h),
            payload[2 * n * h:].astype(np.int64))


# --------------------------------------------------------------------------- stages


@contextmanager
def _stage(name: str, times: dict[str, float]):
    t0 = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except (VmdForecastError, ValueError, ArithmeticError, OSError) as exc:
        raise StageError(name, exc) from exc
    finally:
        times[name] = times.get(name, 0.0) + time.perf_counter() - t0


@dataclass
class PreparedData:
    resampled: ResampledProfile
    train: WindowedDataset
    test: WindowedDataset


def prepare_household(config: ExperimentConfig, household: str, times: dict | None = None) -> PreparedData:
    """Ingest, resample, window and split one household."""
    times = {} if times is None else times
    if household not in config.households:
        raise StageError("ingest", ConfigError(f"unknown household {household!r}"))
    with _stage("ingest", times):
        profile = ingest_csv(config.households[household], config.timestamp_col, config.power_col, household)
    with _stage("resample", times):
        resampled = resample_30min(profile)
    with _stage("window", times):
        windows = build_windows(resampled)
    with _stage("split", times):
        train_set, test_set = chrono_split(windows, config.train_fraction)
    return PreparedData(resampled, train_set, test_set)


def decompose(config: ExperimentConfig, data: WindowedDataset, K) -> list[WindowedDataset]:
    """Component datasets for ``K`` (the dataset itself when ``K`` is "none")."""
    if k_label(K) == "none":
        return [data]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return decompose_dataset(data, config.vmd_config(int(K)), scope=config.vmd_scope)


def baseline_test_days(test: WindowedDataset) -> np.ndarray:
    """Midnight-aligned target days whose input window is in the test set."""
    targets = test.window_start_times + DAY_S
    return targets[targets % DAY_S == 0]


def baseline_arrays(config: ExperimentConfig, household: str, prepared: PreparedData | None = None):
    prepared = prepared or prepare_household(config, household)
    days = baseline_test_days(prepared.test)
    with _stage("baseline", {}):
        forecasts, actuals, used = evaluate_days(prepared.resampled, days)
        if len(used) == 0:
            raise DataError("no test day has 21 days of complete history for the historical-mean baseline")
    return forecasts, actuals, used


def baseline(config: ExperimentConfig, household: str, prepared: PreparedData | None = None) -> MetricsReport:
    """Historical-mean forecast scored on every usable test day.

    FS is relative to the baseline itself and therefore 0.
    """
    forecasts, actuals, _ = baseline_arrays(config, household, prepared)
    with _stage("evaluate", {}):
        rep = evaluate(actuals, forecasts)
        rep.fs = 0.0
        rep.reference_rmse = rep.rmse
    return rep


# --------------------------------------------------------------------------- training jobs


@dataclass(frozen=True)
class ComponentJob:
    index: int
    seed: int
    levels: int
    profile: str
    epochs: int
    batch: int
    lr: float
    train_inputs: np.ndarray
    train_targets: np.ndarray
    train_starts: np.ndarray


def _fit_component(job: ComponentJob) -> tuple[dict, dict, list[float]]:
    """Fit standardization and train one component model; returns plain data."""
    ds = WindowedDataset(job.train_inputs, job.train_targets, job.train_starts)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        params = fit_standardization(ds)
    net = build_network(job.levels, job.profile, job.seed)
    result = train(net, standardize_dataset(ds, params), job.epochs, job.batch, job.seed, job.lr)
    return net.state_dict(), params.to_dict(), result.losses


def _predict_component(state: dict, params: StandardizationParams, levels: int, profile: str,
                       inputs: np.ndarray) -> np.ndarray:
    net = build_network(levels, profile, 0)
    net.load_state_dict(state)
    net.eval()
    x = standardize(inputs, StandardizationParams(params.mean[:, None], params.std[:, None]))
    return standardize(predict_standardized(net, x), params.load, "inverse")


def run_dir_for(config: ExperimentConfig, household: str, K, I: int) -> Path:
    return Path(config.output_dir) / household / f"K{k_label(K)}_I{int(I)}"


def run_pipeline(config: ExperimentConfig, household: str, K, I: int, resume: bool = True,
                 stop_after: str | None = None,
                 on_component_done: Callable[[int], None] | None = None) -> RunRecord | None:
    """Run one (household, K, I) cell end to end and persist its record.

    Parameters
    ----------
    K : int or "none"
        Number of VMD modes; ``"none"`` trains a single model on raw load.
    I : int
        Number of wavelet levels in the network.
    resume : bool
        Reuse finished component checkpoints written under the same settings.
    stop_after : {"train"}, optional
        Stop once every component model is checkpointed; returns None.
    on_component_done : callable, optional
        Called with the component index after its checkpoint is written.
    """
    config.validate()
    times: dict[str, float] = {}
    label = k_label(K)
    run_dir = run_dir_for(config, household, K, I)
    run_dir.mkdir(parents=True, exist_ok=True)
    train_hash = _training_hash(config)

    prepared = prepare_household(config, household, times)
    train_set = prepared.train.subset(slice(None, None, config.train_stride))
    with _stage("decompose", times):
        train_comps = decompose(config, train_set, K)
        test_comps = decompose(config, prepared.test, K)
        shares = energy_shares(test_comps).tolist()

    n_comp = len(train_comps)
    ckpt_dirs = [run_dir / "checkpoints" / f"component_{j:03d}" for j in range(n_comp)]

    def finished(j: int) -> bool:
        path = ckpt_dirs[j] / "manifest.json"
        if not (resume and path.is_file()):
            return False
        meta = json.loads(path.read_text())
        return meta.get("training_hash") == train_hash and meta.get("complete") is True

    with _stage("train", times):
        pending = [j for j in range(n_comp) if not finished(j)]
        jobs = [ComponentJob(j, config.base_seed + j, int(I), config.profile, config.epochs, config.batch,
                             config.lr, train_comps[j].inputs, train_comps[j].targets,
                             train_comps[j].window_start_times) for j in pending]

        def store(job: ComponentJob, out) -> None:
            state, params, losses = out
            save_checkpoint(state, ckpt_dirs[job.index], job.seed, config.epochs, {
                "training_hash": train_hash, "complete": True, "component": job.index, "K": label,
                "I": int(I), "profile": config.profile, "standardization": params, "losses": losses,
            })
            if on_component_done is not None:
                on_component_done(job.index)

        if config.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                for job, out in zip(jobs, pool.map(_fit_component, jobs)):
                    store(job, out)
        else:
            for job in jobs:
                store(job, _fit_component(job))
    if stop_after == "train":
        return None

    with _stage("predict", times):
        per_component = []
        for j in range(n_comp):
            state, manifest = load_checkpoint(ckpt_dirs[j])
            params = StandardizationParams.from_dict(manifest["standardization"])
            per_component.append(_predict_component(state, params, int(I), config.profile, test_comps[j].inputs))
        forecast = np.sum(per_component, axis=0)
        actual = prepared.test.targets
        save_forecasts(run_dir / "forecasts.lcw", forecast, actual, prepared.test.window_start_times)
        write_container(run_dir / "component_forecasts.lcw", (n_comp, len(forecast), STEPS_PER_DAY),
                        np.stack(per_component))

    base_fc, base_act, base_days = baseline_arrays(config, household, prepared)
    with _stage("evaluate", times):
        from .metrics import rmse as _rmse

        base_rmse = _rmse(base_act, base_fc)
        report = evaluate(actual, forecast, reference_rmse=base_rmse)

    record = RunRecord(
        config_hash=config_hash(config), household=household, K=label, I=int(I), model=MODEL_NAME,
        stage_seconds=times, metrics=report, baseline_rmse=base_rmse, baseline_days=len(base_days),
        n_train_windows=len(train_set), n_test_windows=len(prepared.test),
        checkpoints=[str(d) for d in ckpt_dirs], energy_shares=shares, run_dir=str(run_dir),
        notes=["baseline scored on midnight-aligned test days; model scored on every unit-stride test window"],
    )
    record.save()
    return record


def metrics_rows(records: list[RunRecord]) -> list[dict]:
    return [{"household": r.household, "model": r.model, "K": r.K, "I": r.I, "report": r.metrics}
            for r in records]


def sweep(config: ExperimentConfig, households: list[str] | None = None, resume: bool = True) -> list[RunRecord]:
    """Every household x K x I cell; writes ``sweep_metrics.csv`` in the output dir."""
    config.validate()
    households = households or list(config.households)
    records = [run_pipeline(config, h, K, I, resume=resume)
               for h in households for K in config.k_list for I in config.i_list]
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(metrics_rows(records), out / "sweep_metrics.csv")
    return records


# --------------------------------------------------------------------------- plot data


PLOT_METRICS = ("rmse", "fs", "cv", "mape")


def _cell_name(r: RunRecord) -> str:
    return f"{r.household}_K{r.K}_I{r.I}"


def emit_plots(records: list[RunRecord], out_dir, instance: int = 0) -> list[Path]:
    """Write plain CSV series for bar charts, forecast overlays and horizon box plots.

    ``bars.csv`` has one row per record and metric; ``overlay_<cell>.csv``
    shows test window ``instance``; ``boxes_<cell>.csv`` holds the absolute
    and signed error summaries for every horizon.
    """
    import csv

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    bars = out / "bars.csv"
    with open(bars, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["household", "model", "K", "I", "metric", "value"])
        for r in records:
            vals = {"rmse": r.metrics.rmse, "fs": r.metrics.fs, "cv": r.metrics.cv, "mape": r.metrics.mape_pct}
            for m in PLOT_METRICS:
                w.writerow([r.household, r.model, r.K, r.I, m, f"{vals[m]:.10g}"])
    written.append(bars)
    for r in records:
        fc, act, starts = r.forecasts()
        if not 0 <= instance < len(fc):
            raise DataError(f"instance {instance} outside the {len(fc)} test windows")
        path = out / f"overlay_{_cell_name(r)}.csv"
        t0 = int(starts[instance]) + DAY_S
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "actual", "forecast", "error"])
            for h in range(fc.shape[1]):
                w.writerow([t0 + h * BUCKET_S, f"{act[instance, h]:.10g}", f"{fc[instance, h]:.10g}",
                            f"{fc[instance, h] - act[instance, h]:.10g}"])
        written.append(path)
        path = out / f"boxes_{_cell_name(r)}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kind", "horizon", "median", "q1", "q3", "whisker_low", "whisker_high", "n_outliers"])
            for kind, summaries in (("abs", horizon_error_profile(act, fc)),
                                    ("signed", horizon_error_profile(act, fc, signed=True))):
                for h, b in enumerate(summaries):
                    w.writerow([kind, h + 1, f"{b.median:.10g}", f"{b.q1:.10g}", f"{b.q3:.10g}",
                                f"{b.whisker_low:.10g}", f"{b.whisker_high:.10g}", b.n_outliers])
        written.append(path)
    return written

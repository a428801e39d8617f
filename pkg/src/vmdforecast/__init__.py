"""Day-ahead household load forecasting with VMD and mWDN(InceptionTime) models."""
from .errors import ConfigError, DataError, NumericalError, StageError, VmdForecastError
from .load_data import (
    LoadProfile, ResampledProfile, StandardizationParams, WindowedDataset, build_windows, chrono_split,
    fit_standardization, ingest_csv, resample_30min, standardize,
)
from .metrics import MetricsReport, cv, fs, horizon_error_profile, mape, rmse
from .pipeline import ExperimentConfig, RunRecord, baseline, emit_plots, run_pipeline, sweep
from .stationarity import StationarityReport, adf_test, batch_stationarity, kpss_test
from .vmd import ImfSet, VmdConfig, decompose_dataset, vmd_decompose, vmd_reconstruct

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DataError", "NumericalError", "StageError", "VmdForecastError",
    "LoadProfile", "ResampledProfile", "StandardizationParams", "WindowedDataset", "build_windows",
    "chrono_split", "fit_standardization", "ingest_csv", "resample_30min", "standardize",
    "MetricsReport", "cv", "fs", "horizon_error_profile", "mape", "rmse",
    "ExperimentConfig", "RunRecord", "baseline", "emit_plots", "run_pipeline", "sweep",
    "StationarityReport", "adf_test", "batch_stationarity", "kpss_test",
    "ImfSet", "VmdConfig", "decompose_dataset", "vmd_decompose", "vmd_reconstruct",
]

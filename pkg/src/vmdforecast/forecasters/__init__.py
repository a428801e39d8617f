"""Forecasting models: mWDN(InceptionTime) and the historical-mean reference."""
from .baseline import baseline_features, evaluate_days, historical_mean_forecast
from .inception import DESK_INCEPTION, PAPER_INCEPTION, InceptionConfig, InceptionModule, InceptionTime
from .model import (
    FORECASTER_REGISTRY, HORIZON, PROFILES, ForecastModel, MwdnInception, TrainResult, build_network,
    make_forecaster, mwdn_forward, predict_standardized, register_forecaster, sum_forecasts, train,
)
from .mwdn import DB4_HIGH, DB4_LOW, MwdnCascade, MwdnConfig, MwdnLevel, filter_matrix, mwdn_layer

__all__ = [
    "baseline_features", "evaluate_days", "historical_mean_forecast",
    "InceptionConfig", "InceptionModule", "InceptionTime", "PAPER_INCEPTION", "DESK_INCEPTION",
    "ForecastModel", "MwdnInception", "TrainResult", "build_network", "make_forecaster", "mwdn_forward",
    "predict_standardized", "register_forecaster", "sum_forecasts", "train", "FORECASTER_REGISTRY",
    "HORIZON", "PROFILES",
    "DB4_LOW", "DB4_HIGH", "MwdnCascade", "MwdnConfig", "MwdnLevel", "filter_matrix", "mwdn_layer",
]

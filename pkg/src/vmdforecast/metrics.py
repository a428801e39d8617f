"""Forecast accuracy metrics over all instances and horizons."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DataError

MAPE_FLOOR_W = 1.0


def _pair(actual, forecast) -> tuple[np.ndarray, np.ndarray]:
    y = np.atleast_2d(np.asarray(actual, dtype=float))
    f = np.atleast_2d(np.asarray(forecast, dtype=float))
    if y.shape != f.shape:
        raise DataError(f"actual {y.shape} and forecast {f.shape} differ in shape")
    if y.size == 0:
        raise DataError("no values to score")
    return y, f


def mape(actual, forecast, floor: float = MAPE_FLOOR_W) -> float:
    """Mean of ``|y - f| / max(|y|, floor)``; a fraction, not a percentage."""
    y, f = _pair(actual, forecast)
    return float(np.mean(np.abs(y - f) / np.maximum(np.abs(y), floor)))


def rmse(actual, forecast) -> float:
    y, f = _pair(actual, forecast)
    return float(np.sqrt(np.mean((y - f) ** 2)))


def cv(actual, forecast) -> float:
    """Coefficient of variation in percent, with the ``N * (H - 1)`` divisor.

    ``H`` is the number of horizons (columns); the reference mean is taken
    over every actual value.
    """
    y, f = _pair(actual, forecast)
    n, h = y.shape
    if h < 2:
        raise DataError("cv needs at least two horizons")
    y_bar = y.mean()
    if y_bar == 0:
        raise DataError("cv is undefined for a zero-mean actual series")
    return float(np.sqrt(np.sum((y - f) ** 2) / (n * (h - 1))) / y_bar * 100.0)


def fs(model_rmse: float, reference_rmse: float) -> float:
    """Forecast skill in percent relative to a reference RMSE."""
    if not reference_rmse > 0:
        raise DataError("forecast skill needs a positive reference RMSE")
    return float((1.0 - (model_rmse / reference_rmse) ** 2) * 100.0)


@dataclass(frozen=True)
class BoxSummary:
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    n_outliers: int


def _box(values: np.ndarray) -> BoxSummary:
    q1, med, q3 = np.percentile(values, [25, 50, 75])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = values[(values >= lo_fence) & (values <= hi_fence)]
    return BoxSummary(float(med), float(q1), float(q3), float(inside.min()), float(inside.max()),
                      int(values.size - inside.size))


def horizon_error_profile(actual, forecast, signed: bool = False) -> list[BoxSummary]:
    """Box-plot summary of the errors at every horizon (absolute unless ``signed``)."""
    y, f = _pair(actual, forecast)
    err = f - y if signed else np.abs(f - y)
    return [_box(err[:, h]) for h in range(err.shape[1])]


@dataclass
class MetricsReport:
    mape: float
    rmse: float
    cv: float
    fs: float | None
    n_instances: int
    mape_floor_w: float = MAPE_FLOOR_W
    reference_rmse: float | None = None
    per_horizon_abs: list[BoxSummary] = field(default_factory=list)
    per_horizon_signed: list[BoxSummary] = field(default_factory=list)

    @property
    def mape_pct(self) -> float:
        return self.mape * 100.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mape_pct"] = self.mape_pct
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def evaluate(actual, forecast, reference_rmse: float | None = None, profile: bool = True) -> MetricsReport:
    y, f = _pair(actual, forecast)
    r = rmse(y, f)
    return MetricsReport(
        mape=mape(y, f),
        rmse=r,
        cv=cv(y, f),
        fs=fs(r, reference_rmse) if reference_rmse else None,
        n_instances=y.shape[0],
        reference_rmse=reference_rmse,
        per_horizon_abs=horizon_error_profile(y, f) if profile else [],
        per_horizon_signed=horizon_error_profile(y, f, signed=True) if profile else [],
    )


CSV_FIELDS = ["household", "model", "K", "I", "rmse", "fs", "cv", "mape"]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def write_metrics_csv(rows: list[dict], path) -> None:
    """Rows carry ``household, model, K, I`` plus a :class:`MetricsReport` under ``report``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_FIELDS)
        for row in rows:
            rep: MetricsReport = row["report"]
            w.writerow([_fmt(row["household"]), _fmt(row["model"]), _fmt(row["K"]), _fmt(row["I"]),
                        _fmt(rep.rmse), _fmt(rep.fs), _fmt(rep.cv), _fmt(rep.mape_pct)])

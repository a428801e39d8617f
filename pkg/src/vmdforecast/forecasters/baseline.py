"""Historical-mean reference forecaster.

The day-ahead forecast averages four calendar features of the 30-minute
history ending at the target start ``T`` (``E[a|b]`` below is the 48-bucket
slice from ``T - a`` to ``T - b``):

* F1, the last day of the same day type: Tuesday-Friday use ``E[48|0]``,
  Saturday ``E[336|288]``, Monday ``E[192|144]``. Sunday has no entry in the
  table and falls back to ``E[336|288]`` (the previous Sunday).
* F2, the same day one, two and three weeks back.
* F3, the mean of the previous seven days.
* F4, the previous day's mean repeated 48 times.
"""
from __future__ import annotations

import numpy as np

from ..errors import DataError
from ..load_data import BUCKET_S, STEPS_PER_DAY, ResampledProfile, day_of_week

HISTORY_DAYS = 21
_D = STEPS_PER_DAY


def _f1_offset(weekday: int) -> int:
    if weekday == 0:  # Monday
        return 4 * _D
    if weekday in (5, 6):  # Saturday as printed; Sunday falls back to a week back
        return 7 * _D
    return _D


def _target_index(history: ResampledProfile, target_start: int) -> int:
    offset = int(target_start) - int(history.start_time)
    if offset % BUCKET_S:
        raise DataError("target start is not aligned to a 30-minute bucket")
    return offset // BUCKET_S


def baseline_features(history: ResampledProfile, target_start: int) -> dict[str, np.ndarray]:
    """Return F1..F4 for the day starting at ``target_start``."""
    T = _target_index(history, target_start)
    if T < HISTORY_DAYS * _D:
        raise DataError(f"insufficient history: need {HISTORY_DAYS} days before the target day")
    if T > len(history.power_w_30min):
        raise DataError("target day starts after the end of the history")
    values = history.power_w_30min
    gaps = history.gap_mask

    def E(a: int, b: int) -> np.ndarray:
        if gaps[T - a:T - b].any():
            raise DataError(f"history buckets [{T - a}, {T - b}) contain gaps")
        return values[T - a:T - b]

    weekday = int(day_of_week(target_start))
    f1_back = _f1_offset(weekday)
    f1 = E(f1_back, f1_back - _D)
    f2 = np.mean([E(7 * _D * w, 7 * _D * w - _D) for w in (1, 2, 3)], axis=0)
    f3 = np.mean([E(_D * k, _D * (k - 1)) for k in range(1, 8)], axis=0)
    f4 = np.full(_D, E(_D, 0).mean())
    return {"F1": f1, "F2": f2, "F3": f3, "F4": f4}


def historical_mean_forecast(history: ResampledProfile, target_start: int) -> np.ndarray:
    """48-value forecast (watts) for the day starting at ``target_start``."""
    f = baseline_features(history, target_start)
    return (f["F1"] + f["F2"] + f["F3"] + f["F4"]) / 4.0


def evaluate_days(history: ResampledProfile, day_starts) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Forecast every day whose history and actuals are complete.

    Returns ``(forecasts (M, 48), actuals (M, 48), used_day_starts (M,))``;
    days lacking history or containing gaps are skipped.
    """
    forecasts, actuals, used = [], [], []
    n = len(history.power_w_30min)
    for start in day_starts:
        T = _target_index(history, start)
        if T + _D > n or history.gap_mask[T:T + _D].any():
            continue
        try:
            fc = historical_mean_forecast(history, start)
        except DataError:
            continue
        forecasts.append(fc)
        actuals.append(history.power_w_30min[T:T + _D])
        used.append(int(start))
    if not forecasts:
        return np.zeros((0, _D)), np.zeros((0, _D)), np.zeros(0, dtype=np.int64)
    return np.array(forecasts), np.array(actuals), np.array(used, dtype=np.int64)

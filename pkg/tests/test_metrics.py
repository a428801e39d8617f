import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vmdforecast.errors import DataError
from vmdforecast.metrics import (
    BoxSummary, cv, evaluate, fs, horizon_error_profile, mape, rmse, write_metrics_csv,
)


# --------------------------------------------------------------------------- hand values


def test_hand_examples():
    assert mape([100.0], [150.0]) == 0.5
    assert math.isclose(rmse([[0.0, 0.0]], [[3.0, 4.0]]), math.sqrt(12.5), rel_tol=1e-15)
    assert math.isclose(cv([[10.0, 10.0]], [[10.0, 12.0]]), 20.0, rel_tol=1e-12)
    assert fs(5.0, 5.0) == 0.0
    assert fs(0.0, 5.0) == 100.0
    assert math.isclose(fs(5.0 / math.sqrt(2), 5.0), 50.0, rel_tol=1e-12)


def test_perfect_forecast_is_zero():
    y = np.random.default_rng(0).uniform(10, 100, (5, 48))
    assert mape(y, y) == rmse(y, y) == cv(y, y) == 0.0


def test_mape_floor():
    # |y| below 1 W is floored; the error is divided by 1.
    assert mape([0.0, 0.5], [2.0, 1.5]) == pytest.approx((2.0 + 1.0) / 2)
    assert mape([0.0], [2.0], floor=4.0) == 0.5


def test_errors():
    with pytest.raises(DataError):
        rmse(np.ones((2, 3)), np.ones((3, 2)))
    with pytest.raises(DataError):
        mape([], [])
    with pytest.raises(DataError):
        cv(np.zeros((2, 4)), np.ones((2, 4)))
    with pytest.raises(DataError):
        cv(np.ones((4, 1)), np.ones((4, 1)))
    with pytest.raises(DataError):
        fs(1.0, 0.0)


# --------------------------------------------------------------------------- naive oracles


def _naive(y, f):
    n, h = len(y), len(y[0])
    abs_pct = sq = 0.0
    total = 0.0
    for i in range(n):
        for j in range(h):
            abs_pct += abs(y[i][j] - f[i][j]) / max(abs(y[i][j]), 1.0)
            sq += (y[i][j] - f[i][j]) ** 2
            total += y[i][j]
    y_bar = total / (n * h)
    return abs_pct / (n * h), math.sqrt(sq / (n * h)), math.sqrt(sq / (n * (h - 1))) / y_bar * 100


@pytest.mark.parametrize("seed", range(10))
def test_against_double_loop(seed):
    rng = np.random.default_rng(seed)
    y = rng.uniform(0, 2000, (7, 48))
    y[0, :3] = [0.0, 0.2, 0.9]
    f = y + rng.normal(0, 100, y.shape)
    m, r, c = _naive(y.tolist(), f.tolist())
    assert math.isclose(mape(y, f), m, rel_tol=1e-12)
    assert math.isclose(rmse(y, f), r, rel_tol=1e-12)
    assert math.isclose(cv(y, f), c, rel_tol=1e-12)


def _sorted_quantile(values, q):
    # Linear interpolation between order statistics.
    s = sorted(values)
    pos = q * (len(s) - 1)
    lo = math.floor(pos)
    hi = min(lo + 1, len(s) - 1)
    return s[lo] + (pos - lo) * (s[hi] - s[lo])


@pytest.mark.parametrize("signed", [False, True])
def test_box_summaries_sort_oracle(signed):
    rng = np.random.default_rng(3)
    y = rng.uniform(0, 500, (41, 48))
    f = y + rng.standard_t(2, y.shape) * 30
    boxes = horizon_error_profile(y, f, signed=signed)
    assert len(boxes) == 48
    for h, b in enumerate(boxes):
        e = list((f[:, h] - y[:, h]) if signed else np.abs(f[:, h] - y[:, h]))
        q1, med, q3 = (_sorted_quantile(e, q) for q in (0.25, 0.5, 0.75))
        assert math.isclose(b.q1, q1, abs_tol=1e-9) and math.isclose(b.median, med, abs_tol=1e-9)
        assert math.isclose(b.q3, q3, abs_tol=1e-9)
        lo, hi = q1 - 1.5 * (q3 - q1), q3 + 1.5 * (q3 - q1)
        inside = [v for v in e if lo <= v <= hi]
        assert b.whisker_low == min(inside) and b.whisker_high == max(inside)
        assert b.n_outliers == len(e) - len(inside)


def test_box_edge_cases():
    y = np.random.default_rng(0).uniform(0, 9, (6, 48))
    assert all(b == BoxSummary(0.0, 0.0, 0.0, 0.0, 0.0, 0) for b in horizon_error_profile(y, y))
    f = y[:1] + np.arange(48)
    for h, b in enumerate(horizon_error_profile(y[:1], f)):
        assert b.median == pytest.approx(h, abs=1e-12)


# --------------------------------------------------------------------------- properties

pairs = st.integers(0, 2**31 - 1).map(lambda s: np.random.default_rng(s))


@settings(max_examples=1000, deadline=None)
@given(pairs, st.integers(1, 6), st.integers(2, 48), st.floats(1e-3, 1e3))
def test_metric_identities(rng, n, h, c):
    y = rng.uniform(1, 3000, (n, h))
    f = rng.uniform(0, 3000, (n, h))
    r = rmse(y, f)
    assert r >= 0 and cv(y, f) >= 0 and mape(y, f) >= 0
    assert abs(r**2 * n * h - np.sum((y - f) ** 2)) <= 1e-9 * np.sum((y - f) ** 2)
    # Floor inactive because every |y| >= 1 and c * y stays above it when c >= 1/min(y).
    if c * y.min() >= 1.0:
        assert abs(mape(c * y, c * f) - mape(y, f)) <= 1e-12 * max(1.0, mape(y, f))
    a = r + 1e-9
    assert fs(a, a) == 0.0 and fs(0.0, a) == 100.0 and fs(r, a) <= 100.0


# --------------------------------------------------------------------------- reports


def test_evaluate_report(tmp_path):
    rng = np.random.default_rng(1)
    y = rng.uniform(100, 500, (4, 48))
    f = y + 10
    rep = evaluate(y, f, reference_rmse=20.0)
    assert rep.rmse == pytest.approx(10.0)
    assert rep.fs == pytest.approx(75.0)
    assert rep.mape_pct == pytest.approx(rep.mape * 100)
    assert rep.n_instances == 4 and rep.mape_floor_w == 1.0
    assert len(rep.per_horizon_abs) == len(rep.per_horizon_signed) == 48
    d = json.loads(rep.to_json())
    assert d["rmse"] == rep.rmse and d["mape_pct"] == rep.mape_pct
    assert evaluate(y, f).fs is None
    assert evaluate(y, f, profile=False).per_horizon_abs == []

    rows = [{"household": "House1", "model": "vmd", "K": 7, "I": 3, "report": rep},
            {"household": "House1", "model": "baseline", "K": "none", "I": "", "report": evaluate(y, f)}]
    write_metrics_csv(rows, tmp_path / "m.csv")
    with open(tmp_path / "m.csv") as fh:
        got = list(csv.DictReader(fh))
    assert list(got[0]) == ["household", "model", "K", "I", "rmse", "fs", "cv", "mape"]
    assert float(got[0]["rmse"]) == pytest.approx(rep.rmse, rel=1e-9)
    assert float(got[0]["mape"]) == pytest.approx(rep.mape_pct, rel=1e-9)
    assert got[1]["fs"] == ""

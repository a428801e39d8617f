"""Unit-root (ADF) and stationarity (KPSS) tests for decomposed sequences."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from statistics import NormalDist
from typing import Literal

import numpy as np

from .errors import DataError
from .load_data import BUCKET_S, WindowedDataset

# Response-surface coefficients (b0, b1, b2, b3) of the Dickey-Fuller tau
# quantiles for one stochastic regressor: q(T) = b0 + b1/T + b2/T^2 + b3/T^3.
_ADF_SURFACE = {
    "none": {
        0.01: (-2.56574, -2.2358, -3.627, 0.0),
        0.05: (-1.94100, -0.2686, -3.365, 31.223),
        0.10: (-1.61682, 0.2656, -2.714, 25.364),
    },
    "constant": {
        0.01: (-3.43035, -6.5393, -16.786, -79.433),
        0.05: (-2.86154, -2.8903, -4.234, -40.040),
        0.10: (-2.56677, -1.5384, -2.809, 0.0),
    },
    "trend": {
        0.01: (-3.95877, -9.0531, -28.428, -134.155),
        0.05: (-3.41049, -4.3904, -9.036, -45.374),
        0.10: (-3.12705, -2.5856, -3.925, -22.380),
    },
}

# Asymptotic Dickey-Fuller quantiles for the points the surface lacks.
_ADF_ASYMPTOTIC = {
    "none": {0.025: -2.23, 0.90: 0.89, 0.95: 1.28, 0.975: 1.62, 0.99: 2.00},
    "constant": {0.025: -3.12, 0.90: -0.44, 0.95: -0.07, 0.975: 0.23, 0.99: 0.60},
    "trend": {0.025: -3.66, 0.90: -1.25, 0.95: -0.94, 0.975: -0.66, 0.99: -0.33},
}

# Upper-tail KPSS quantiles (significance level -> critical value).
_KPSS_TABLE = {
    "level": {0.10: 0.347, 0.05: 0.463, 0.025: 0.574, 0.01: 0.739},
    "trend": {0.10: 0.119, 0.05: 0.146, 0.025: 0.176, 0.01: 0.216},
}

P_MIN, P_MAX = 1e-4, 0.9999
_STD_NORMAL = NormalDist()


@dataclass(frozen=True)
class StationarityReport:
    """Outcome of one test at the 1% level.

    ``verdict`` is ``"reject"`` or ``"fail-to-reject"`` of the test's own
    null: a unit root for ADF, stationarity for KPSS.
    """

    test: Literal["ADF", "KPSS"]
    statistic: float
    p_value: float
    critical_value_1pct: float
    lags_used: int
    verdict: str
    regression: str = ""
    nobs: int = 0
    critical_values: dict = field(default_factory=dict)

    @property
    def rejected(self) -> bool:
        return self.verdict == "reject"

    @property
    def suggests_stationary(self) -> bool:
        return self.rejected if self.test == "ADF" else not self.rejected


def schwert_lags(n: int) -> int:
    return int(np.floor(12.0 * (n / 100.0) ** 0.25))


def _series(sequence, min_len: int) -> np.ndarray:
    y = np.asarray(sequence, dtype=float).ravel()
    if y.size < min_len:
        raise DataError(f"series too short: {y.size} samples, need at least {min_len}")
    if not np.all(np.isfinite(y)):
        raise DataError("series contains non-finite values")
    if np.ptp(y) == 0:
        raise DataError("constant series has zero variance")
    return y


def _probit_interp(stat: float, knots: list[tuple[float, float]]) -> float:
    """Interpolate ``p`` on the probit scale between (statistic, p) knots.

    Knots must be sorted by statistic with p increasing; outside the table
    the end segments are extended linearly, then clamped.
    """
    s = np.array([k[0] for k in knots])
    z = np.array([_STD_NORMAL.inv_cdf(k[1]) for k in knots])
    if stat <= s[0]:
        i = 0
    elif stat >= s[-1]:
        i = len(s) - 2
    else:
        i = int(np.searchsorted(s, stat)) - 1
    slope = (z[i + 1] - z[i]) / (s[i + 1] - s[i])
    p = _STD_NORMAL.cdf(float(z[i] + slope * (stat - s[i])))
    return float(np.clip(p, P_MIN, P_MAX))


def adf_critical_values(nobs: int, regression: str = "constant") -> dict[float, float]:
    """Lower-tail quantiles of tau at sample size ``nobs``, plus upper-tail points."""
    surf = _ADF_SURFACE[regression]
    cv = {p: b0 + b1 / nobs + b2 / nobs**2 + b3 / nobs**3 for p, (b0, b1, b2, b3) in surf.items()}
    asym = _ADF_ASYMPTOTIC[regression]
    # Shift the 2.5% point by the mean finite-sample correction of its neighbours.
    shift = 0.5 * ((cv[0.01] - surf[0.01][0]) + (cv[0.05] - surf[0.05][0]))
    cv[0.025] = asym[0.025] + shift
    for p in (0.90, 0.95, 0.975, 0.99):
        cv[p] = asym[p]
    return dict(sorted(cv.items()))


def _verdict(reject: bool) -> str:
    return "reject" if reject else "fail-to-reject"


def adf_test(sequence, max_lag: int | None = None,
             regression: Literal["none", "constant", "trend"] = "constant") -> StationarityReport:
    """Augmented Dickey-Fuller test with a fixed number of lagged differences.

    Parameters
    ----------
    sequence : array_like
        Series to test.
    max_lag : int, optional
        Number of lagged differences; defaults to ``floor(12 (n/100)^(1/4))``,
        reduced if needed so that ``n > max_lag + 10``.
    regression : {"none", "constant", "trend"}
        Deterministic terms in the test regression.
    """
    if regression not in _ADF_SURFACE:
        raise ValueError(f"unknown regression {regression!r}")
    y = _series(sequence, 12)
    n = y.size
    if max_lag is None:
        max_lag = min(schwert_lags(n), n - 11)
    if max_lag < 0:
        raise ValueError("max_lag must be non-negative")
    if n <= max_lag + 10:
        raise DataError(f"series too short: {n} samples for {max_lag} lags (need more than {max_lag + 10})")
    p = int(max_lag)
    dy = np.diff(y)
    rows = dy.size - p
    target = dy[p:]
    cols = [y[p:-1]]
    cols += [dy[p - i:dy.size - i] for i in range(1, p + 1)]
    if regression in ("constant", "trend"):
        cols.append(np.ones(rows))
    if regression == "trend":
        cols.append(np.arange(1, rows + 1, dtype=float))
    X = np.column_stack(cols)
    q, r = np.linalg.qr(X)
    beta = np.linalg.solve(r, q.T @ target)
    resid = target - X @ beta
    dof = rows - X.shape[1]
    if dof <= 0:
        raise DataError("not enough observations for the test regression")
    sigma2 = resid @ resid / dof
    r_inv = np.linalg.inv(r)
    se = np.sqrt(sigma2 * (r_inv[0] @ r_inv[0]))
    stat = float(beta[0] / se) if se > 0 else -np.inf
    cvs = adf_critical_values(rows, regression)
    p_value = _probit_interp(stat, [(v, k) for k, v in cvs.items()]) if np.isfinite(stat) else P_MIN
    return StationarityReport("ADF", stat, p_value, cvs[0.01], p, _verdict(stat < cvs[0.01]),
                              regression, rows, cvs)


def _bartlett_long_run(e: np.ndarray, lags: int) -> float:
    n = e.size
    s = e @ e
    for lag in range(1, lags + 1):
        s += 2.0 * (1.0 - lag / (lags + 1.0)) * (e[lag:] @ e[:-lag])
    return s / n


def kpss_test(sequence, bandwidth: int | Literal["auto"] = "auto",
              regression: Literal["level", "trend"] = "level") -> StationarityReport:
    """KPSS test with a Bartlett-kernel long-run variance.

    ``bandwidth="auto"`` uses ``floor(12 (n/100)^(1/4))`` lags, capped at
    ``n - 1``.
    """
    if regression not in _KPSS_TABLE:
        raise ValueError(f"unknown regression {regression!r}")
    y = _series(sequence, 30)
    n = y.size
    if regression == "level":
        e = y - y.mean()
    else:
        t = np.arange(n, dtype=float)
        X = np.column_stack([np.ones(n), t])
        e = y - X @ np.linalg.lstsq(X, y, rcond=None)[0]
    lags = min(schwert_lags(n), n - 1) if bandwidth == "auto" else int(bandwidth)
    if lags < 0:
        raise ValueError("bandwidth must be non-negative")
    partial = np.cumsum(e)
    lrv = _bartlett_long_run(e, lags)
    stat = float(partial @ partial / (n**2 * lrv)) if lrv > 0 else np.inf
    table = _KPSS_TABLE[regression]
    # Upper tail: larger statistics mean smaller p; order knots by statistic.
    knots = sorted((v, 1.0 - a) for a, v in table.items())
    p_value = 1.0 - _probit_interp(stat, knots) if np.isfinite(stat) else P_MIN
    p_value = float(np.clip(p_value, P_MIN, P_MAX))
    return StationarityReport("KPSS", stat, p_value, table[0.01], lags, _verdict(stat > table[0.01]),
                              regression, n, dict(sorted(table.items())))


# --------------------------------------------------------------------------- batches of IMF datasets


@dataclass
class ComponentStationarity:
    """Window-level test results for one component (an IMF or the residue)."""

    index: int
    adf: list[StationarityReport]
    kpss: list[StationarityReport]

    def summary(self) -> dict:
        return {
            "index": self.index,
            "adf_mean_statistic": float(np.mean([r.statistic for r in self.adf])),
            "adf_mean_p_value": float(np.mean([r.p_value for r in self.adf])),
            "adf_critical_value": float(np.mean([r.critical_value_1pct for r in self.adf])),
            "adf_reject_fraction": float(np.mean([r.rejected for r in self.adf])),
            "kpss_mean_statistic": float(np.mean([r.statistic for r in self.kpss])),
            "kpss_mean_p_value": float(np.mean([r.p_value for r in self.kpss])),
            "kpss_critical_value": float(np.mean([r.critical_value_1pct for r in self.kpss])),
            "kpss_reject_fraction": float(np.mean([r.rejected for r in self.kpss])),
        }

    @property
    def adf_stationary(self) -> bool:
        """Majority of windows reject the unit root."""
        return float(np.mean([r.rejected for r in self.adf])) > 0.5

    @property
    def kpss_stationary(self) -> bool:
        return float(np.mean([r.rejected for r in self.kpss])) <= 0.5


@dataclass
class BatchStationarity:
    components: list[ComponentStationarity]
    adf_regression: str
    kpss_regression: str

    def mean_statistic(self, test: str) -> float:
        key = "adf_mean_statistic" if test == "ADF" else "kpss_mean_statistic"
        return float(np.mean([c.summary()[key] for c in self.components]))

    def mean_critical_value(self, test: str) -> float:
        key = "adf_critical_value" if test == "ADF" else "kpss_critical_value"
        return float(np.mean([c.summary()[key] for c in self.components]))

    def mean_p_value(self, test: str) -> float:
        key = "adf_mean_p_value" if test == "ADF" else "kpss_mean_p_value"
        return float(np.mean([c.summary()[key] for c in self.components]))

    def adf_stationary_fraction(self) -> float:
        return float(np.mean([c.adf_stationary for c in self.components]))

    def to_dict(self) -> dict:
        return {
            "adf_regression": self.adf_regression,
            "kpss_regression": self.kpss_regression,
            "components": [c.summary() for c in self.components],
            "windows": [[asdict(r) for r in c.adf + c.kpss] for c in self.components],
        }


def stitch_series(dataset: WindowedDataset) -> np.ndarray:
    """Longest contiguous load series covered by unit-stride input windows.

    Only meaningful when every window was cut from one shared series (raw
    data or a whole-series decomposition).
    """
    starts = np.asarray(dataset.window_start_times, dtype=np.int64)
    if starts.size == 0:
        raise DataError("dataset contains no windows")
    breaks = np.flatnonzero(np.diff(starts) != BUCKET_S) + 1
    bounds = np.concatenate([[0], breaks, [starts.size]])
    k = int(np.argmax(np.diff(bounds)))
    lo, hi = bounds[k], bounds[k + 1]
    load = dataset.inputs[lo:hi, 0]
    return np.concatenate([load[0], load[1:, -1]])


def batch_stationarity(datasets: list[WindowedDataset], source: Literal["windows", "series"] = "windows",
                       max_windows: int | None = 200, seed: int = 0,
                       adf_regression: str = "none", kpss_regression: str = "trend",
                       max_lag: int | None = None, bandwidth: int | str = "auto") -> BatchStationarity:
    """Run ADF and KPSS on every component of a decomposition.

    ``datasets`` is the list returned by the decomposition step (or a single
    raw dataset). With ``source="windows"`` the load channel of each sampled
    window is tested on its own; the same seeded subset of windows (at most
    ``max_windows``) is used for every component and windows where the
    component is constant are skipped. With ``source="series"`` each
    component is stitched back into its longest contiguous series (see
    :func:`stitch_series`) and tested once.
    """
    if not datasets:
        raise DataError("no datasets to test")
    n = len(datasets[0])
    if n == 0:
        raise DataError("datasets contain no windows")
    if any(len(ds) != n for ds in datasets):
        raise DataError("component datasets differ in window count")
    if source == "series":
        seqs_per_comp = [[stitch_series(ds)] for ds in datasets]
    elif source == "windows":
        idx = np.arange(n)
        if max_windows is not None and n > max_windows:
            idx = np.sort(np.random.default_rng(seed).choice(n, size=max_windows, replace=False))
        seqs_per_comp = [[ds.inputs[i, 0] for i in idx] for ds in datasets]
    else:
        raise ValueError(f"unknown source {source!r}")
    comps = []
    for j, seqs in enumerate(seqs_per_comp):
        adf, kpss = [], []
        for seq in seqs:
            if np.ptp(seq) == 0:
                continue
            adf.append(adf_test(seq, max_lag, adf_regression))
            kpss.append(kpss_test(seq, bandwidth, kpss_regression))
        if not adf:
            raise DataError(f"component {j} is constant everywhere it was tested")
        comps.append(ComponentStationarity(j, adf, kpss))
    return BatchStationarity(comps, adf_regression, kpss_regression)

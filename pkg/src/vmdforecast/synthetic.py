"""Seeded synthetic household load for tests, demos and the acceptance suite."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .load_data import DAY_S, LoadProfile

MONDAY_2021_01_04 = 1609718400


@dataclass(frozen=True)
class SyntheticSpec:
    """Daily profile plus two sinusoidal tones plus Gaussian noise, in watts.

    Tone frequencies are in cycles per day. ``amplitude_drift`` lets each
    tone's amplitude wander slowly from day to day so that the components
    are not exactly periodic.
    """

    days: int = 60
    period_s: int = 600
    start_time: int = MONDAY_2021_01_04
    base_w: float = 400.0
    daily_w: float = 250.0
    weekend_w: float = 80.0
    tone_freqs: tuple[float, float] = (3.7, 11.3)
    tone_amps_w: tuple[float, float] = (120.0, 90.0)
    amplitude_drift: float = 0.3
    noise_w: float = 40.0
    seed: int = 0


def _daily_shape(hour: np.ndarray) -> np.ndarray:
    morning = np.exp(-0.5 * ((hour - 7.5) / 1.2) ** 2)
    evening = np.exp(-0.5 * ((hour - 19.0) / 2.0) ** 2)
    return 0.6 * morning + evening


def synthetic_profile(spec: SyntheticSpec = SyntheticSpec(), household_id: str = "synthetic") -> LoadProfile:
    rng = np.random.default_rng(spec.seed)
    n = spec.days * DAY_S // spec.period_s
    t = spec.start_time + spec.period_s * np.arange(n, dtype=np.int64)
    rel_days = (t - spec.start_time) / DAY_S
    hour = (t % DAY_S) / 3600.0
    weekday = ((t // DAY_S) + 3) % 7
    power = spec.base_w + spec.daily_w * _daily_shape(hour) + spec.weekend_w * (weekday >= 5)
    for freq, amp in zip(spec.tone_freqs, spec.tone_amps_w):
        # Piecewise-linear amplitude between random daily knots.
        knots = 1.0 + spec.amplitude_drift * rng.uniform(-1, 1, spec.days + 1)
        scale = np.interp(rel_days, np.arange(spec.days + 1), knots)
        phase = rng.uniform(0, 2 * np.pi)
        power = power + amp * scale * np.sin(2 * np.pi * freq * rel_days + phase)
    power = power + spec.noise_w * rng.standard_normal(n)
    return LoadProfile(household_id, t, np.maximum(power, 0.0), float(spec.period_s))


def write_load_csv(profile: LoadProfile, path) -> None:
    """Write ``timestamp,power_w`` rows with integer epoch seconds."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "power_w"])
        for ts, p in zip(profile.timestamps, profile.power_w):
            w.writerow([int(ts), repr(float(p))])

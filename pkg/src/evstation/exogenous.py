"""Hourly renewable-generation and grid-price signals.

Series are read from ``day,hour,value`` CSV files or generated synthetically,
converted to SOC-point units and discretized into a small number of levels.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence, Union

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .errors import DataError, DegenerateLevelsError, DomainError

KWH = "kWh"
EUR_PER_KWH = "euro-per-kWh"
UNITS = (KWH, EUR_PER_KWH)

WIND_TURBINES_FR_2012 = 4058
DEFAULT_BATTERY_KWH = 24.0


@dataclass(frozen=True)
class HourlySeries:
    """Non-negative hourly values for contiguous days, shape ``(n_days, 24)``."""

    values: np.ndarray
    unit: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != 24 or values.shape[0] == 0:
            raise DataError(f"expected shape (n_days, 24), got {values.shape}")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise DataError("series values must be finite and non-negative")
        if self.unit not in UNITS:
            raise DataError(f"unknown unit {self.unit!r}, expected one of {UNITS}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n_days(self) -> int:
        return self.values.shape[0]

    def records(self):
        """Yield ``(day, hour, value, unit)`` tuples in time order."""
        for day, row in enumerate(self.values):
            for hour, value in enumerate(row):
                yield day, hour, float(value), self.unit

    def days(self, start: int, stop: int) -> "HourlySeries":
        return HourlySeries(self.values[start:stop], self.unit)

    def __add__(self, other: "HourlySeries") -> "HourlySeries":
        if other.unit != self.unit:
            raise DataError(f"cannot add {other.unit} to {self.unit}")
        return HourlySeries(self.values + other.values, self.unit)


def load_hourly_series(path: Union[str, Path], unit: str) -> HourlySeries:
    """Read a ``day,hour,value`` CSV; half-hourly rows are averaged per hour."""
    if unit not in UNITS:
        raise DataError(f"unknown unit {unit!r}, expected one of {UNITS}")
    buckets = defaultdict(list)
    seen = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        if [h.strip() for h in header] != ["day", "hour", "value"]:
            raise DataError(f"{path}: row 1: expected header day,hour,value, got {header}")
        for rowno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise DataError(f"{path}: row {rowno}: expected 3 fields, got {len(row)}")
            try:
                day = int(row[0])
                hour = float(row[1])
                value = float(row[2])
            except ValueError as exc:
                raise DataError(f"{path}: row {rowno}: {exc}") from None
            if day < 0:
                raise DataError(f"{path}: row {rowno}: negative day {day}")
            if not 0 <= hour < 24 or (hour * 2) != int(hour * 2):
                raise DataError(f"{path}: row {rowno}: hour {hour} not on a half-hour grid in [0, 24)")
            if not math.isfinite(value) or value < 0:
                raise DataError(f"{path}: row {rowno}: value {value} must be finite and non-negative")
            if (day, hour) in seen:
                raise DataError(f"{path}: row {rowno}: duplicate entry for day {day}, hour {hour}")
            seen.add((day, hour))
            buckets[day, int(hour)].append((rowno, value))
    if not buckets:
        raise DataError(f"{path}: no data rows")
    n_days = max(d for d, _ in buckets) + 1
    values = np.empty((n_days, 24))
    for day in range(n_days):
        for hour in range(24):
            entries = buckets.get((day, hour))
            if not entries:
                raise DataError(f"{path}: missing data for day {day}, hour {hour}")
            values[day, hour] = sum(v for _, v in entries) / len(entries)
    return HourlySeries(values, unit)


def save_hourly_series(series: HourlySeries, path: Union[str, Path]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["day", "hour", "value"])
        for day, hour, value, _ in series.records():
            writer.writerow([day, hour, repr(value)])


def normalize_wind(series: HourlySeries, turbine_count: int) -> HourlySeries:
    """Scale a national wind-generation series to one turbine."""
    if turbine_count <= 0:
        raise DomainError(f"turbine_count must be positive, got {turbine_count}")
    return HourlySeries(series.values / turbine_count, series.unit)


def solar_profile(annual_kwh: float = 1000.0, peak_hour: float = 13.5, sigma: float = 3.0) -> np.ndarray:
    """Average daily solar yield spread over 24 hours with a Gaussian shape.

    Hour ``h`` gets weight proportional to the normal density at ``h + 0.5``;
    the vector sums to ``annual_kwh / 365``.
    """
    if sigma <= 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    if annual_kwh < 0:
        raise DomainError(f"annual_kwh must be non-negative, got {annual_kwh}")
    centers = np.arange(24) + 0.5
    weights = np.exp(-0.5 * ((centers - peak_hour) / sigma) ** 2)
    return annual_kwh / 365.0 * weights / weights.sum()


def kwh_to_points(kwh, battery_capacity_kwh: float = DEFAULT_BATTERY_KWH):
    return np.asarray(kwh, dtype=float) * (100.0 / battery_capacity_kwh)


def eur_per_kwh_to_eur_per_point(price, battery_capacity_kwh: float = DEFAULT_BATTERY_KWH):
    return np.asarray(price, dtype=float) * (battery_capacity_kwh / 100.0)


def to_points(series: HourlySeries, battery_capacity_kwh: float = DEFAULT_BATTERY_KWH) -> np.ndarray:
    """Convert a series to SOC-points (energy) or euro per SOC-point (price)."""
    if series.unit == KWH:
        return kwh_to_points(series.values, battery_capacity_kwh)
    return eur_per_kwh_to_eur_per_point(series.values, battery_capacity_kwh)


class LevelCodec(NamedTuple):
    """Cut-points and one representative value per level."""

    thresholds: tuple
    level_values: tuple

    @property
    def n_levels(self) -> int:
        return len(self.level_values)

    def level(self, value: float) -> int:
        # a value equal to a cut-point belongs to the upper level
        lo, hi = 0, len(self.thresholds)
        while lo < hi:
            mid = (lo + hi) // 2
            if value < self.thresholds[mid]:
                hi = mid
            else:
                lo = mid + 1
        return lo

    def value(self, level: int) -> float:
        return self.level_values[level]


class LevelDiscretizer(TransformerMixin, BaseEstimator):
    """Quantile discretizer: equal-mass buckets, bucket means as level values.

    Parameters
    ----------
    n_levels : int, default=2
        Number of levels; 2 gives a median split into "low" and "high".

    Attributes
    ----------
    thresholds_ : ndarray of shape (n_levels - 1,)
    level_values_ : ndarray of shape (n_levels,)
    """

    def __init__(self, n_levels: int = 2):
        self.n_levels = n_levels

    def fit(self, X, y=None):
        values = np.asarray(X, dtype=float).ravel()
        if self.n_levels < 2:
            raise DomainError(f"n_levels must be at least 2, got {self.n_levels}")
        if values.size == 0:
            raise DataError("cannot fit levels on an empty series")
        if not np.all(np.isfinite(values)):
            raise DataError("series contains non-finite values")
        if np.all(values == values[0]):
            raise DegenerateLevelsError("constant series has a single level")
        qs = np.arange(1, self.n_levels) / self.n_levels
        thresholds = np.quantile(values, qs)
        if np.any(np.diff(thresholds) <= 0):
            raise DegenerateLevelsError(f"quantile cut-points {thresholds} are not strictly increasing")
        idx = np.searchsorted(thresholds, values, side="right")
        level_values = np.empty(self.n_levels)
        for i in range(self.n_levels):
            members = values[idx == i]
            if members.size == 0:
                raise DegenerateLevelsError(f"level {i} receives no samples")
            level_values[i] = members.mean()
        self.thresholds_ = thresholds
        self.level_values_ = level_values
        return self

    def transform(self, X):
        check_is_fitted(self)
        values = np.asarray(X, dtype=float)
        return np.searchsorted(self.thresholds_, values, side="right")

    def inverse_transform(self, X):
        check_is_fitted(self)
        return self.level_values_[np.asarray(X, dtype=int)]

    @property
    def codec_(self) -> LevelCodec:
        check_is_fitted(self)
        return LevelCodec(
            tuple(float(t) for t in self.thresholds_),
            tuple(float(v) for v in self.level_values_),
        )


def fit_levels(series: Union[HourlySeries, Sequence[float], np.ndarray], level_count: int = 2) -> LevelCodec:
    values = series.values if isinstance(series, HourlySeries) else series
    return LevelDiscretizer(level_count).fit(values).codec_


class ExogenousObservation(NamedTuple):
    """Level indices plus the representative values used in the reward.

    ``r_value`` is in SOC-points, ``p_value`` in euro per SOC-point.
    """

    r_level: int
    p_level: int
    r_value: float = 0.0
    p_value: float = 0.0


def observation(codec_r: LevelCodec, codec_p: LevelCodec, r_level: int, p_level: int) -> ExogenousObservation:
    if not 0 <= r_level < codec_r.n_levels or not 0 <= p_level < codec_p.n_levels:
        raise DomainError(f"levels ({r_level}, {p_level}) out of range")
    return ExogenousObservation(r_level, p_level, codec_r.value(r_level), codec_p.value(p_level))


def encode_observation(
    codec_r: LevelCodec,
    codec_p: LevelCodec,
    r_kwh: float,
    p_eur_kwh: float,
    battery_capacity_kwh: float = DEFAULT_BATTERY_KWH,
) -> ExogenousObservation:
    """Bucket a raw (kWh, euro/kWh) reading; codecs are fitted in point units."""
    r_points = r_kwh * 100.0 / battery_capacity_kwh
    p_points = p_eur_kwh * battery_capacity_kwh / 100.0
    return observation(codec_r, codec_p, codec_r.level(r_points), codec_p.level(p_points))


# Synthetic generators -------------------------------------------------------

def synthetic_wind(n_days: int, rng, mean_kwh: float = 1.0, persistence: float = 0.9) -> HourlySeries:
    """Per-turbine-scale hourly wind energy from a log-AR(1) process."""
    rng = np.random.default_rng(rng)
    n = n_days * 24
    noise = rng.normal(size=n)
    x = np.empty(n)
    x[0] = noise[0]
    scale = math.sqrt(1 - persistence ** 2)
    for i in range(1, n):
        x[i] = persistence * x[i - 1] + scale * noise[i]
    sigma = 0.6
    values = mean_kwh * np.exp(sigma * x - 0.5 * sigma ** 2)
    return HourlySeries(values.reshape(n_days, 24), KWH)


# relative day-ahead price shape with morning and evening peaks
_PRICE_SHAPE = np.array([
    0.80, 0.74, 0.70, 0.68, 0.68, 0.72, 0.85, 1.05, 1.18, 1.15, 1.08, 1.04,
    1.00, 0.96, 0.94, 0.95, 1.00, 1.10, 1.25, 1.30, 1.20, 1.05, 0.95, 0.86,
])


def synthetic_price(n_days: int, rng, mean_eur_kwh: float = 0.05, noise: float = 0.08) -> HourlySeries:
    """Hourly grid price: fixed daily shape times a lognormal day factor and hourly noise."""
    rng = np.random.default_rng(rng)
    day_factor = np.exp(rng.normal(0.0, 0.15, size=(n_days, 1)))
    hourly = np.exp(rng.normal(0.0, noise, size=(n_days, 24)))
    values = mean_eur_kwh * _PRICE_SHAPE[None, :] * day_factor * hourly
    return HourlySeries(values, EUR_PER_KWH)

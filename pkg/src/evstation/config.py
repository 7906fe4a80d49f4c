"""Experiment configuration: YAML file <-> :class:`ExperimentConfig`."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import yaml

from .domain import TTL_MAX
from .env import EXPENSES_MODES, LITERAL, CustomerModel
from .errors import ConfigError
from .exogenous import DEFAULT_BATTERY_KWH, WIND_TURBINES_FR_2012


@dataclass(frozen=True)
class DataConfig:
    """Where r(t) and p(t) come from.

    With ``wind_path`` / ``price_path`` unset the seeded synthetic
    generators are used. Wind files hold national generation in kWh and are
    divided by ``turbine_count``; the solar profile is added on top.
    """

    wind_path: Optional[str] = None
    price_path: Optional[str] = None
    turbine_count: int = WIND_TURBINES_FR_2012
    solar_annual_kwh: float = 1000.0
    solar_peak_hour: float = 13.5
    solar_sigma: float = 3.0
    synthetic_wind_mean_kwh: float = 1.0
    synthetic_price_mean_eur_kwh: float = 0.05
    n_levels: int = 2


@dataclass(frozen=True)
class ScheduleConfig:
    epsilon0: float = 0.9
    epsilon_min: float = 0.02
    beta0: float = 0.5
    beta_min: float = 0.01
    horizon: Optional[int] = None
    gamma: float = 0.95
    q0: float = 0.0


@dataclass(frozen=True)
class ExperimentConfig:
    M: int = 5
    k: int = 3
    ttl_max: int = TTL_MAX
    expenses_mode: str = LITERAL
    battery_capacity_kwh: float = DEFAULT_BATTERY_KWH
    train_days: int = 190
    repetitions: int = 40
    eval_days: int = 29
    seed: int = 0
    customer: CustomerModel = field(default_factory=CustomerModel)
    schedules: ScheduleConfig = field(default_factory=ScheduleConfig)
    data: DataConfig = field(default_factory=DataConfig)

    def __post_init__(self):
        if not self.M >= self.k >= 1:
            raise ConfigError(f"need M >= k >= 1, got M={self.M}, k={self.k}")
        if self.eval_days < 1:
            raise ConfigError("eval_days must be at least 1")
        if self.train_days < 0 or self.repetitions < 0:
            raise ConfigError("train_days and repetitions must be non-negative")
        if self.expenses_mode not in EXPENSES_MODES:
            raise ConfigError(f"expenses_mode must be one of {EXPENSES_MODES}")
        if self.battery_capacity_kwh <= 0:
            raise ConfigError("battery_capacity_kwh must be positive")
        if not 1 <= self.ttl_max:
            raise ConfigError("ttl_max must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        for p in (self.data.wind_path, self.data.price_path):
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"data file not found: {p}")
        if (self.data.wind_path is None) != (self.data.price_path is None):
            raise ConfigError("wind_path and price_path must be given together")
        if self.data.turbine_count <= 0 or self.data.n_levels < 2:
            raise ConfigError("turbine_count must be positive and n_levels at least 2")

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        out["customer"] = self.customer.to_dict()
        out["schedules"] = dataclasses.asdict(self.schedules)
        out["data"] = dataclasses.asdict(self.data)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data or {})
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            if "customer" in data:
                data["customer"] = CustomerModel.from_dict(data["customer"] or {})
            if "schedules" in data:
                data["schedules"] = ScheduleConfig(**(data["schedules"] or {}))
            if "data" in data:
                data["data"] = DataConfig(**(data["data"] or {}))
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form; any field change alters it."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def load_config(path: Union[str, Path, None] = None, **overrides) -> ExperimentConfig:
    data = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(data)


def save_config(config: ExperimentConfig, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=False)

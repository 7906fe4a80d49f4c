"""Experiment orchestration: data assembly, training, paired evaluation, reports."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import ExperimentConfig
from .errors import DataError, DomainError
from .estimator import ChargingController, simulate, stack_exogenous
from .exogenous import (
    EUR_PER_KWH,
    KWH,
    HourlySeries,
    load_hourly_series,
    normalize_wind,
    solar_profile,
    synthetic_price,
    synthetic_wind,
)
from .learner import QTable
from .policies import POLICY_NAMES, make_policy

TABLE_FILE = "qtable.evqtab"
REPORT_FILE = "report.json"
INCOMES_FILE = "incomes.csv"


def _streams(seed: int):
    """Independent child seeds: wind, price, training, evaluation."""
    return np.random.SeedSequence(seed).spawn(4)


def evaluation_seed(config: ExperimentConfig) -> np.random.SeedSequence:
    return _streams(config.seed)[3]


def build_exogenous(config: ExperimentConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Renewable/price arrays for the training days and the evaluation days.

    Returns two arrays of shape ``(days, 24, 2)`` (kWh, euro/kWh); the
    evaluation days directly follow the training days.
    """
    n_days = config.train_days + config.eval_days
    d = config.data
    wind_seq, price_seq, _, _ = _streams(config.seed)
    if d.wind_path is not None:
        wind = normalize_wind(load_hourly_series(d.wind_path, KWH), d.turbine_count)
        price = load_hourly_series(d.price_path, EUR_PER_KWH)
        if min(wind.n_days, price.n_days) < n_days:
            raise DataError(
                f"need {n_days} days of data, wind has {wind.n_days} and price {price.n_days}"
            )
        wind, price = wind.days(0, n_days), price.days(0, n_days)
    else:
        wind = synthetic_wind(n_days, wind_seq, d.synthetic_wind_mean_kwh)
        price = synthetic_price(n_days, price_seq, d.synthetic_price_mean_eur_kwh)
    solar = solar_profile(d.solar_annual_kwh, d.solar_peak_hour, d.solar_sigma)
    renewable = HourlySeries(wind.values + solar[None, :], KWH)
    X = stack_exogenous(renewable, price)
    return X[: config.train_days], X[config.train_days:]


def make_controller(config: ExperimentConfig) -> ChargingController:
    s = config.schedules
    _, _, train_seq, _ = _streams(config.seed)
    return ChargingController(
        M=config.M,
        k=config.k,
        ttl_max=config.ttl_max,
        customer_model=config.customer,
        expenses_mode=config.expenses_mode,
        battery_capacity_kwh=config.battery_capacity_kwh,
        n_levels=config.data.n_levels,
        repetitions=config.repetitions,
        gamma=s.gamma,
        epsilon0=s.epsilon0,
        epsilon_min=s.epsilon_min,
        beta0=s.beta0,
        beta_min=s.beta_min,
        horizon=s.horizon,
        q0=s.q0,
        random_state=train_seq,
    )


def train_controller(config: ExperimentConfig, X_train=None, X_eval=None) -> ChargingController:
    """Fit the controller on the training days (codecs only when there are none)."""
    if X_train is None:
        X_train, X_eval = build_exogenous(config)
    controller = make_controller(config)
    if len(X_train) == 0 or config.repetitions == 0:
        # level codecs still need data; fall back to the evaluation period
        return controller.untrained(X_train if len(X_train) else X_eval)
    return controller.fit(X_train)


def estimate_arrival_rates(events: Iterable[Tuple[int, float]], n_days: Optional[int] = None) -> List[float]:
    """Poisson maximum-likelihood hourly rates from logged ``(day, hour)`` arrivals.

    The number of observed days is ``max(day) - min(day) + 1`` unless
    ``n_days`` is given.
    """
    events = list(events)
    if not events:
        raise DomainError("arrival log is empty")
    counts = [0] * 24
    days = []
    for day, hour in events:
        h = int(hour)
        if not 0 <= h < 24:
            raise DomainError(f"hour {hour} outside [0, 24)")
        counts[h] += 1
        days.append(int(day))
    observed = max(days) - min(days) + 1 if n_days is None else n_days
    if observed < 1:
        raise DomainError("need at least one observed day")
    return [c / observed for c in counts]


def run_evaluation(policy, controller: ChargingController, X_eval, rng=None) -> List[float]:
    """Daily income of ``policy`` (a name or a callable) on the evaluation days."""
    return controller.simulate(X_eval, policy, rng)


@dataclass
class RunReport:
    daily: Dict[str, List[float]]
    config_digest: str
    seed: int
    wall_clock_s: float = 0.0
    table_pairs: int = 0
    train_steps: int = 0
    totals: Dict[str, float] = field(init=False)
    uplift: Optional[float] = field(init=False)

    def __post_init__(self):
        self.totals = {name: sum(values) for name, values in self.daily.items()}
        random_total = self.totals.get("random")
        learned_total = self.totals.get("learned")
        if random_total is not None and learned_total is not None and random_total > 0:
            self.uplift = learned_total / random_total
        else:
            self.uplift = None

    def to_dict(self) -> dict:
        return {
            "daily_income_eur": self.daily,
            "total_income_eur": self.totals,
            "uplift": self.uplift,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "wall_clock_s": self.wall_clock_s,
            "table_pairs": self.table_pairs,
            "train_steps": self.train_steps,
        }

    def write(self, out_dir: Union[str, Path]) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / REPORT_FILE, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")
        write_incomes_csv(self.daily, out / INCOMES_FILE)


def write_incomes_csv(daily: Dict[str, Sequence[float]], path: Union[str, Path]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["day", "policy", "income_eur"])
        for name, values in daily.items():
            for day, value in enumerate(values):
                writer.writerow([day, name, repr(float(value))])


def evaluate_policies(
    config: ExperimentConfig,
    controller: ChargingController,
    X_eval,
    policies: Sequence[str] = POLICY_NAMES,
) -> Dict[str, List[float]]:
    """Paired evaluation: every policy sees the same customers and prices."""
    seq = evaluation_seed(config)
    return {name: run_evaluation(name, controller, X_eval, seq) for name in policies}


def compare(config: ExperimentConfig, table: Optional[QTable] = None) -> Tuple[RunReport, ChargingController]:
    """Train (unless a table is given), then evaluate random, myopic and learned."""
    start = time.perf_counter()
    X_train, X_eval = build_exogenous(config)
    if table is None:
        controller = train_controller(config, X_train, X_eval)
    else:
        controller = make_controller(config).untrained(X_train if len(X_train) else X_eval)
        controller.table_ = table
    daily = evaluate_policies(config, controller, X_eval)
    report = RunReport(
        daily=daily,
        config_digest=config.digest(),
        seed=config.seed,
        wall_clock_s=time.perf_counter() - start,
        table_pairs=len(controller.table_),
        train_steps=controller.n_steps_,
    )
    return report, controller


def value_iteration_oracle(P, R, gamma: float, tol: float = 1e-9, max_iter: int = 1_000_000) -> np.ndarray:
    """Optimal action values of a finite MDP by Bellman optimality iteration.

    ``P[s, a, s']`` holds transition probabilities and ``R[s, a]`` expected
    rewards. Iterates until the sup-norm change drops below ``tol``.
    """
    if not 0 <= gamma < 1:
        raise DomainError(f"gamma must lie in [0, 1), got {gamma}")
    if tol <= 0:
        raise DomainError("tol must be positive")
    P = np.asarray(P, dtype=float)
    R = np.asarray(R, dtype=float)
    n_s, n_a = R.shape
    if P.shape != (n_s, n_a, n_s):
        raise DomainError(f"P has shape {P.shape}, expected {(n_s, n_a, n_s)}")
    if not np.allclose(P.sum(axis=2), 1.0):
        raise DomainError("transition probabilities must sum to 1")
    Q = np.zeros((n_s, n_a))
    for _ in range(max_iter):
        Q_next = R + gamma * P @ Q.max(axis=1)
        delta = np.max(np.abs(Q_next - Q))
        Q = Q_next
        if delta < tol:
            return Q
    raise DomainError(f"value iteration did not converge in {max_iter} iterations")

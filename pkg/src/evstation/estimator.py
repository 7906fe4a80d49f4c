"""Scikit-learn style front end for the Q-learning charging controller."""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .domain import TTL_MAX, ChargeAction, StationState, empty_state
from .env import LITERAL, CustomerModel, StationEnv
from .errors import DataError
from .exogenous import (
    DEFAULT_BATTERY_KWH,
    ExogenousObservation,
    LevelDiscretizer,
    eur_per_kwh_to_eur_per_point,
    kwh_to_points,
    observation,
)
from .learner import QTable, Schedules, train
from .policies import learned_policy, make_policy


def check_exogenous(X) -> np.ndarray:
    """Validate hourly exogenous data.

    ``X`` has shape ``(n_days, 24, 2)``; ``X[d, h, 0]`` is renewable energy
    in kWh and ``X[d, h, 1]`` the grid price in euro per kWh.
    """
    X = check_array(X, allow_nd=True, ensure_2d=False, dtype=float, ensure_min_samples=0)
    if X.ndim != 3 or X.shape[1:] != (24, 2):
        raise DataError(f"exogenous data must have shape (n_days, 24, 2), got {X.shape}")
    if np.any(X < 0):
        raise DataError("exogenous values must be non-negative")
    return X


def stack_exogenous(renewable_kwh, price_eur_kwh) -> np.ndarray:
    """Pair two ``(n_days, 24)`` arrays into the controller's input layout."""
    r = np.asarray(getattr(renewable_kwh, "values", renewable_kwh), dtype=float)
    p = np.asarray(getattr(price_eur_kwh, "values", price_eur_kwh), dtype=float)
    if r.shape != p.shape:
        raise DataError(f"renewable {r.shape} and price {p.shape} shapes differ")
    return check_exogenous(np.stack([r, p], axis=-1))


def child_seed(seq: np.random.SeedSequence, i: int) -> np.random.SeedSequence:
    # unlike SeedSequence.spawn this does not advance the parent
    return np.random.SeedSequence(seq.entropy, spawn_key=tuple(seq.spawn_key) + (i,))


def simulate(env: StationEnv, policy, trace, rng=None) -> List[float]:
    """Run ``policy`` without learning over ``trace``; return each day's income.

    Arrivals and policy randomness come from two independent child streams
    of ``rng``, so every policy sees the same customers for the same seed.
    """
    seq = rng if isinstance(rng, np.random.SeedSequence) else np.random.SeedSequence(rng)
    arrivals_rng = np.random.default_rng(child_seed(seq, 0))
    policy_rng = np.random.default_rng(child_seed(seq, 1))
    n_days = len(trace)
    state = empty_state(env.M)
    incomes = []
    for day in range(n_days):
        total = 0.0
        for hour in range(24):
            obs = trace[day][hour]
            next_obs = trace[day][hour + 1] if hour < 23 else trace[(day + 1) % n_days][0]
            actions = env.actions(state)
            action = policy(state, obs, actions, policy_rng)
            tr = env.transition(state, action, obs, next_obs, env.sample_arrivals(arrivals_rng, state.hour))
            total += tr.reward
            state = tr.next_state
        incomes.append(total)
    return incomes


class ChargingController(BaseEstimator):
    """Learn an hourly charging policy for one station with tabular Q-learning.

    ``fit`` discretizes renewable energy and price into ``n_levels`` levels
    (fitted on the training days) and runs ``repetitions`` passes of
    Q-learning over the days of ``X``.

    Parameters
    ----------
    M, k : int
        Parking places and simultaneously usable chargers.
    customer_model : CustomerModel, optional
        Arrival and vehicle distribution; the library default when None.
    horizon : int, optional
        Steps over which epsilon and beta decay linearly; defaults to the
        number of training steps.

    Attributes
    ----------
    table_ : QTable
    codec_r_, codec_p_ : LevelCodec
    episode_income_ : list of float
        Summed reward of every training episode (day).
    """

    def __init__(
        self,
        M: int = 5,
        k: int = 3,
        ttl_max: int = TTL_MAX,
        customer_model: Optional[CustomerModel] = None,
        expenses_mode: str = LITERAL,
        battery_capacity_kwh: float = DEFAULT_BATTERY_KWH,
        n_levels: int = 2,
        repetitions: int = 40,
        gamma: float = 0.95,
        epsilon0: float = 0.9,
        epsilon_min: float = 0.02,
        beta0: float = 0.5,
        beta_min: float = 0.01,
        horizon: Optional[int] = None,
        q0: float = 0.0,
        random_state=None,
    ):
        self.M = M
        self.k = k
        self.ttl_max = ttl_max
        self.customer_model = customer_model
        self.expenses_mode = expenses_mode
        self.battery_capacity_kwh = battery_capacity_kwh
        self.n_levels = n_levels
        self.repetitions = repetitions
        self.gamma = gamma
        self.epsilon0 = epsilon0
        self.epsilon_min = epsilon_min
        self.beta0 = beta0
        self.beta_min = beta_min
        self.horizon = horizon
        self.q0 = q0
        self.random_state = random_state

    def make_env(self) -> StationEnv:
        return StationEnv(
            M=self.M,
            k=self.k,
            ttl_max=self.ttl_max,
            expenses_mode=self.expenses_mode,
            model=self.customer_model if self.customer_model is not None else CustomerModel(),
        )

    def _points(self, X) -> Tuple[np.ndarray, np.ndarray]:
        return (
            kwh_to_points(X[..., 0], self.battery_capacity_kwh),
            eur_per_kwh_to_eur_per_point(X[..., 1], self.battery_capacity_kwh),
        )

    def fit(self, X, y=None):
        X = check_exogenous(X)
        if X.shape[0] == 0:
            raise DataError("need at least one day of exogenous data to fit the level codecs")
        r_points, p_points = self._points(X)
        self.codec_r_ = LevelDiscretizer(self.n_levels).fit(r_points).codec_
        self.codec_p_ = LevelDiscretizer(self.n_levels).fit(p_points).codec_
        env = self.make_env()
        steps = X.shape[0] * self.repetitions * 24
        schedules = Schedules(
            epsilon0=self.epsilon0,
            epsilon_min=self.epsilon_min,
            beta0=self.beta0,
            beta_min=self.beta_min,
            horizon=steps if self.horizon is None else self.horizon,
            gamma=self.gamma,
        )
        self.table_, self.episode_income_ = train(
            env,
            self.observations(X),
            schedules,
            days=X.shape[0],
            repetitions=self.repetitions,
            rng=self.random_state,
            table=QTable(self.q0),
        )
        self.n_steps_ = steps
        return self

    def untrained(self, X) -> "ChargingController":
        """Fit the level codecs only; the table stays empty."""
        X = check_exogenous(X)
        r_points, p_points = self._points(X)
        self.codec_r_ = LevelDiscretizer(self.n_levels).fit(r_points).codec_
        self.codec_p_ = LevelDiscretizer(self.n_levels).fit(p_points).codec_
        self.table_, self.episode_income_, self.n_steps_ = QTable(self.q0), [], 0
        return self

    def transform(self, X) -> np.ndarray:
        """Level indices ``(r_level, p_level)`` for every day and hour."""
        check_is_fitted(self, ["codec_r_", "codec_p_"])
        X = check_exogenous(X)
        r_points, p_points = self._points(X)
        r_idx = np.searchsorted(self.codec_r_.thresholds, r_points, side="right")
        p_idx = np.searchsorted(self.codec_p_.thresholds, p_points, side="right")
        return np.stack([r_idx, p_idx], axis=-1)

    def observations(self, X) -> List[List[ExogenousObservation]]:
        levels = self.transform(X)
        return [
            [observation(self.codec_r_, self.codec_p_, int(r), int(p)) for r, p in day]
            for day in levels
        ]

    def decide(self, state: StationState, obs: ExogenousObservation) -> ChargeAction:
        check_is_fitted(self, "table_")
        return learned_policy(self.table_, state, obs, self.make_env().actions(state))

    def predict(self, X: Sequence[Tuple[StationState, ExogenousObservation]]) -> List[ChargeAction]:
        """Greedy action for each ``(state, observation)`` pair."""
        return [self.decide(state, obs) for state, obs in X]

    def simulate(self, X, policy="learned", random_state=None) -> List[float]:
        """Daily incomes of a policy on the days of ``X`` (no learning)."""
        check_is_fitted(self, "table_")
        env = self.make_env()
        if isinstance(policy, str):
            policy = make_policy(policy, env, self.table_)
        return simulate(env, policy, self.observations(X), random_state)

    def score(self, X, y=None) -> float:
        """Mean daily income of the greedy policy on ``X``."""
        return float(np.mean(self.simulate(X, "learned", self.random_state)))

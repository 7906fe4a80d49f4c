"""The charging-station MDP.

Order of events within hour ``t`` (``state`` is already post-admission):
the controller picks an action, the reward is booked, SOCs are updated,
every TTL drops by one, expired vehicles leave, and the vehicles that
arrived during ``[t, t+1)`` are admitted first-come first-served. They
become chargeable at ``t + 1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np

from .domain import (
    DEFAULT_TYPES,
    FULL_SOC,
    NORMAL_CHARGE,
    TTL_MAX,
    ChargeAction,
    StationState,
    UserType,
    Vehicle,
    canonical_slots,
    charge_price,
    check_action,
)
from .errors import ConfigError, ContractViolation, DomainError
from .exogenous import ExogenousObservation

LITERAL = "literal"
CLAMPED = "clamped"
EXPENSES_MODES = (LITERAL, CLAMPED)

INITIAL_SOCS = tuple(range(0, FULL_SOC, 10))


def _default_lambda():
    # commuter pattern, peaks at 08:00 and 17:00
    base = np.array([
        0.05, 0.02, 0.02, 0.02, 0.05, 0.15, 0.40, 0.80, 1.20, 0.90, 0.50, 0.40,
        0.45, 0.45, 0.40, 0.50, 0.80, 1.10, 0.90, 0.60, 0.40, 0.25, 0.15, 0.08,
    ])
    return base.tolist()


def _default_ttl_mean():
    # short stays; morning arrivals occasionally stay two hours
    return [1.3] * 9 + [1.25, 1.2, 1.15, 1.1, 1.05] + [1.0] * 10


@dataclass(frozen=True)
class CustomerModel:
    """Distribution of arrivals and of the vehicles that arrive.

    ``lam[h]`` is the mean number of arrivals during ``[h, h+1)``.
    ``soc_weights`` covers initial SOCs 0, 10, ..., 90; ``type_weights``
    matches ``types`` position by position.
    """

    lam: Tuple[float, ...] = field(default_factory=_default_lambda)
    soc_weights: Tuple[float, ...] = (0.7, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.3)
    ttl_mean: Tuple[float, ...] = field(default_factory=_default_ttl_mean)
    ttl_std: Tuple[float, ...] = (0.3,) * 24
    type_weights: Tuple[float, ...] = (0.6, 0.4)
    types: Tuple[UserType, ...] = DEFAULT_TYPES

    def __post_init__(self):
        for name in ("lam", "soc_weights", "ttl_mean", "ttl_std", "type_weights"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))
        object.__setattr__(self, "types", tuple(self.types))
        if len(self.lam) != 24 or len(self.ttl_mean) != 24 or len(self.ttl_std) != 24:
            raise ConfigError("lam, ttl_mean and ttl_std need 24 hourly entries")
        if any(x < 0 or not math.isfinite(x) for x in self.lam):
            raise ConfigError("arrival rates must be finite and non-negative")
        if any(s <= 0 for s in self.ttl_std):
            raise ConfigError("ttl_std entries must be positive")
        if len(self.soc_weights) != len(INITIAL_SOCS):
            raise ConfigError(f"soc_weights needs {len(INITIAL_SOCS)} entries for SOC 0..90")
        if len(self.type_weights) != len(self.types):
            raise ConfigError("type_weights and types differ in length")
        for name in ("soc_weights", "type_weights"):
            w = getattr(self, name)
            if any(x < 0 for x in w) or not math.isclose(sum(w), 1.0, abs_tol=1e-9):
                raise ConfigError(f"{name} must be non-negative and sum to 1")
        ids = [t.id for t in self.types]
        if len(set(ids)) != len(ids):
            raise ConfigError("user type ids must be distinct")

    def to_dict(self) -> dict:
        return {
            "lam": list(self.lam),
            "soc_weights": list(self.soc_weights),
            "ttl_mean": list(self.ttl_mean),
            "ttl_std": list(self.ttl_std),
            "type_weights": list(self.type_weights),
            "types": [{"id": t.id, "max_price": t.max_price, "name": t.name} for t in self.types],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CustomerModel":
        data = dict(data)
        if "types" in data:
            data["types"] = tuple(UserType(int(t["id"]), float(t["max_price"]), t.get("name", "")) for t in data["types"])
        unknown = set(data) - {"lam", "soc_weights", "ttl_mean", "ttl_std", "type_weights", "types"}
        if unknown:
            raise ConfigError(f"unknown customer model keys: {sorted(unknown)}")
        return cls(**data)


class Transition(NamedTuple):
    state: StationState
    obs: ExogenousObservation
    action: ChargeAction
    reward: float
    next_state: StationState
    next_obs: ExogenousObservation
    rejected: int = 0


def sample_arrival_count(rng: np.random.Generator, lam: float) -> int:
    if lam < 0:
        raise DomainError(f"arrival rate must be non-negative, got {lam}")
    return int(rng.poisson(lam))


def sample_vehicle(rng: np.random.Generator, hour: int, model: CustomerModel, ttl_max: int = TTL_MAX) -> Vehicle:
    soc = INITIAL_SOCS[int(rng.choice(len(INITIAL_SOCS), p=model.soc_weights))]
    raw = rng.normal(model.ttl_mean[hour], model.ttl_std[hour])
    ttl = min(max(int(math.floor(raw + 0.5)), 1), ttl_max)
    user_type = model.types[int(rng.choice(len(model.types), p=model.type_weights))]
    return Vehicle(ttl, soc, user_type, False)


def sample_arrivals(rng: np.random.Generator, hour: int, model: CustomerModel, ttl_max: int = TTL_MAX) -> List[Vehicle]:
    """Vehicles arriving during ``[hour, hour+1)``, in arrival order."""
    n = sample_arrival_count(rng, model.lam[hour])
    return [sample_vehicle(rng, hour, model, ttl_max) for _ in range(n)]


def admit(state: StationState, newcomers: Sequence[Vehicle]) -> Tuple[StationState, int]:
    """Fill vacant slots first-come first-served; return the new state and the rejected count."""
    occupied = [v for v in state.slots if v is not None]
    room = len(state.slots) - len(occupied)
    admitted = list(newcomers[:room])
    rejected = len(newcomers) - len(admitted)
    return StationState(state.hour, canonical_slots(occupied + admitted, len(state.slots))), rejected


@lru_cache(maxsize=200_000)
def _actions_for(profile: Tuple[int, ...], k: int) -> Tuple[ChargeAction, ...]:
    # profile[i] is the slot's SOC when it can be charged, -1 otherwise
    m = len(profile)
    eligible = [i for i, soc in enumerate(profile) if soc >= 0]
    out = []
    for j in range(min(k, len(eligible)) + 1):
        for chosen in itertools.combinations(eligible, j):
            options = []
            for i in chosen:
                full = FULL_SOC - profile[i]
                options.append((NORMAL_CHARGE,) if full == NORMAL_CHARGE else (NORMAL_CHARGE, full))
            for amounts in itertools.product(*options):
                u = [0] * m
                for i, a in zip(chosen, amounts):
                    u[i] = a
                out.append(tuple(u))
    return tuple(out)


def charge_profile(state: StationState) -> Tuple[int, ...]:
    return tuple(v.soc if v is not None and v.eligible else -1 for v in state.slots)


def enumerate_actions(state: StationState, k: int) -> Tuple[ChargeAction, ...]:
    """All feasible actions in a fixed order; the all-zero action comes first.

    Order: by number of charged slots, then by slot combination in
    lexicographic order, then normal charge before fast charge.
    """
    if k < 0:
        raise DomainError(f"k must be non-negative, got {k}")
    return _actions_for(charge_profile(state), k)


def reward_parts(state: StationState, action: ChargeAction, obs: ExogenousObservation) -> Tuple[float, float]:
    incomes = 0.0
    energy = 0
    for v, u in zip(state.slots, action):
        if u:
            incomes += charge_price(v.user_type, v.soc, v.soc + u)
            energy += u
    return incomes, obs.p_value * (energy - obs.r_value)


def reward(
    state: StationState,
    action: ChargeAction,
    obs: ExogenousObservation,
    k: int = None,
    expenses_mode: str = LITERAL,
) -> float:
    """Station profit for one hour: customer payments minus grid energy cost.

    In ``literal`` mode surplus renewable energy makes the cost negative;
    ``clamped`` mode floors the cost at zero.
    """
    check_action(state, action, len(action) if k is None else k)
    incomes, expenses = reward_parts(state, action, obs)
    if expenses_mode == CLAMPED:
        expenses = max(0.0, expenses)
    elif expenses_mode != LITERAL:
        raise DomainError(f"unknown expenses mode {expenses_mode!r}")
    return incomes - expenses


def apply_action(state: StationState, action: ChargeAction, k: int = None) -> StationState:
    """Deliver the charge; a vehicle reaching 100 % is recorded at SOC 0 and marked completed."""
    check_action(state, action, len(action) if k is None else k)
    slots = []
    for v, u in zip(state.slots, action):
        if v is not None and u:
            soc = v.soc + u
            if soc >= FULL_SOC:
                v = Vehicle(v.ttl, soc % FULL_SOC, v.user_type, True)
            else:
                v = Vehicle(v.ttl, soc, v.user_type, v.completed)
        slots.append(v)
    return StationState(state.hour, canonical_slots(slots, len(slots)))


def advance_time(state: StationState, arrivals: Sequence[Vehicle] = ()) -> Tuple[StationState, int]:
    """Move to the next hour: decrement TTLs, drop expired vehicles, admit arrivals."""
    survivors = [
        Vehicle(v.ttl - 1, v.soc, v.user_type, v.completed)
        for v in state.slots
        if v is not None and v.ttl > 1
    ]
    moved = StationState((state.hour + 1) % 24, canonical_slots(survivors, len(state.slots)))
    return admit(moved, list(arrivals))


@dataclass(frozen=True)
class StationEnv:
    """Station parameters bundled with the transition functions."""

    M: int = 5
    k: int = 3
    ttl_max: int = TTL_MAX
    expenses_mode: str = LITERAL
    model: CustomerModel = field(default_factory=CustomerModel)

    def __post_init__(self):
        if not self.M >= self.k >= 1:
            raise ConfigError(f"need M >= k >= 1, got M={self.M}, k={self.k}")
        if self.expenses_mode not in EXPENSES_MODES:
            raise ConfigError(f"expenses_mode must be one of {EXPENSES_MODES}")
        if not 1 <= self.ttl_max:
            raise ConfigError("ttl_max must be positive")

    def actions(self, state: StationState) -> Tuple[ChargeAction, ...]:
        return enumerate_actions(state, self.k)

    def reward(self, state, action, obs) -> float:
        return reward(state, action, obs, self.k, self.expenses_mode)

    def sample_arrivals(self, rng, hour: int) -> List[Vehicle]:
        return sample_arrivals(rng, hour, self.model, self.ttl_max)

    def transition(self, state, action, obs, next_obs, arrivals) -> Transition:
        r = self.reward(state, action, obs)
        charged = apply_action(state, action, self.k)
        next_state, rejected = advance_time(charged, arrivals)
        return Transition(state, obs, action, r, next_state, next_obs, rejected)

    def step(self, state, action, obs, next_obs, rng) -> Transition:
        arrivals = self.sample_arrivals(rng, state.hour)
        return self.transition(state, action, obs, next_obs, arrivals)


def step(state, action, obs, next_obs, rng, model: CustomerModel, k: int = 3, expenses_mode: str = LITERAL) -> Transition:
    """One hour of simulation: reward, charge, advance, admit sampled arrivals."""
    env = StationEnv(M=len(state.slots), k=k, expenses_mode=expenses_mode, model=model)
    return env.step(state, action, obs, next_obs, rng)


def check_state(state: StationState, M: int, ttl_max: int = TTL_MAX) -> None:
    """Raise :class:`ContractViolation` if ``state`` breaks a structural invariant."""
    if len(state.slots) != M:
        raise ContractViolation(f"state has {len(state.slots)} slots, expected {M}")
    if not 0 <= state.hour < 24:
        raise ContractViolation(f"hour {state.hour} outside 0..23")
    if state.slots != canonical_slots(state.slots, M):
        raise ContractViolation("state is not canonically sorted")
    for v in state.vehicles:
        if not 1 <= v.ttl <= ttl_max:
            raise ContractViolation(f"ttl {v.ttl} outside 1..{ttl_max}")
        if v.soc % 10 or not 0 <= v.soc < FULL_SOC:
            raise ContractViolation(f"soc {v.soc} not in 0, 10, ..., 90")

"""Tabular Q-learning over encoded station states."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .domain import ChargeAction, StationState, empty_state, is_canonical
from .env import StationEnv, Transition, _actions_for, charge_profile, enumerate_actions
from .errors import ContractViolation, DataError, DomainError
from .exogenous import ExogenousObservation

StateKey = Tuple[int, ...]
MAGIC = "EVQTAB1"


def encode_state(state: StationState, obs: ExogenousObservation) -> StateKey:
    """Flatten a canonical state and its observation into a hashable key.

    Layout: ``(hour, r_level, p_level)`` followed by ``(ttl, soc, type id,
    completed)`` per slot; vacant slots encode as ``(0, 0, -1, 0)``.
    """
    if not is_canonical(state):
        raise ContractViolation("encode_state needs a canonically sorted state")
    key = [state.hour, obs.r_level, obs.p_level]
    for v in state.slots:
        if v is None:
            key += (0, 0, -1, 0)
        else:
            key += (v.ttl, v.soc, v.user_type.id, int(v.completed))
    return tuple(key)


@lru_cache(maxsize=200_000)
def _action_index(profile, k) -> Dict[ChargeAction, int]:
    return {a: i for i, a in enumerate(_actions_for(profile, k))}


def action_index(state: StationState, action: ChargeAction, k: int) -> int:
    """Position of ``action`` in the enumeration order of ``state``."""
    try:
        return _action_index(charge_profile(state), k)[tuple(action)]
    except KeyError:
        raise DomainError(f"action {action} is not feasible in this state") from None


class QTable:
    """Sparse Q-values keyed by (state key, action index).

    Pairs that were never updated read as ``q0`` with zero visits, so the
    table only grows with the number of distinct pairs actually visited.
    """

    def __init__(self, q0: float = 0.0):
        self.q0 = float(q0)
        self._rows: Dict[StateKey, Dict[int, List]] = {}

    def __len__(self) -> int:
        return sum(len(row) for row in self._rows.values())

    def __eq__(self, other) -> bool:
        return isinstance(other, QTable) and self.q0 == other.q0 and self._rows == other._rows

    def __contains__(self, pair) -> bool:
        key, a = pair
        return a in self._rows.get(key, ())

    def n_states(self) -> int:
        return len(self._rows)

    def get(self, key: StateKey, a: int) -> float:
        entry = self._rows.get(key, {}).get(a)
        return self.q0 if entry is None else entry[0]

    def visits(self, key: StateKey, a: int) -> int:
        entry = self._rows.get(key, {}).get(a)
        return 0 if entry is None else entry[1]

    def set(self, key: StateKey, a: int, q: float, visits: int = 0) -> None:
        self._rows.setdefault(key, {})[a] = [float(q), int(visits)]

    def best(self, key: StateKey, n_actions: int) -> Tuple[int, float]:
        """Greedy action index and its value; ties go to the lowest index."""
        if n_actions <= 0:
            raise DomainError("no actions to choose from")
        row = self._rows.get(key)
        if not row:
            return 0, self.q0
        best_a, best_q = -1, -math.inf
        if len(row) < n_actions:
            best_a = next(i for i in range(n_actions) if i not in row)
            best_q = self.q0
        for a, (q, _) in row.items():
            if a < n_actions and (q > best_q or (q == best_q and a < best_a)):
                best_a, best_q = a, q
        return best_a, best_q

    def max_value(self, key: StateKey, n_actions: int) -> float:
        return self.best(key, n_actions)[1]

    def update(self, key: StateKey, a: int, target: float, beta: float) -> float:
        row = self._rows.setdefault(key, {})
        entry = row.get(a)
        if entry is None:
            entry = row[a] = [self.q0, 0]
        entry[0] = (1.0 - beta) * entry[0] + beta * target
        entry[1] += 1
        return entry[0]

    def items(self) -> Iterable[Tuple[StateKey, int, float, int]]:
        for key in sorted(self._rows):
            row = self._rows[key]
            for a in sorted(row):
                q, n = row[a]
                yield key, a, q, n

    def scaled(self, factor: float) -> "QTable":
        out = QTable(self.q0 * factor)
        for key, a, q, n in self.items():
            out.set(key, a, q * factor, n)
        return out

    def save(self, path: Union[str, Path]) -> None:
        """Write the line-oriented snapshot: header, then one record per pair."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"{MAGIC} q0={self.q0!r}\n")
            for key, a, q, n in self.items():
                fh.write(f"{','.join(map(str, key))}\t{a}\t{q!r}\t{n}\n")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "QTable":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").split(" ")
            if not header or header[0] != MAGIC:
                raise DataError(f"{path}: not an {MAGIC} snapshot")
            q0 = 0.0
            for field in header[1:]:
                name, _, value = field.partition("=")
                if name == "q0":
                    q0 = float(value)
            table = cls(q0)
            for lineno, line in enumerate(fh, start=2):
                line = line.rstrip("\n")
                if not line:
                    continue
                try:
                    key, a, q, n = line.split("\t")
                    table.set(tuple(int(x) for x in key.split(",")), int(a), float(q), int(n))
                except ValueError as exc:
                    raise DataError(f"{path}: line {lineno}: {exc}") from None
        return table


@dataclass(frozen=True)
class Schedules:
    """Linear exploration and learning-rate schedules plus the discount."""

    epsilon0: float = 0.9
    epsilon_min: float = 0.02
    beta0: float = 0.5
    beta_min: float = 0.01
    horizon: int = 190 * 40 * 24
    gamma: float = 0.95

    def __post_init__(self):
        for name in ("epsilon0", "epsilon_min", "beta0", "beta_min", "gamma"):
            x = getattr(self, name)
            if not 0.0 <= x <= 1.0:
                raise DomainError(f"{name}={x} outside [0, 1]")
        if self.epsilon_min > self.epsilon0 or self.beta_min > self.beta0:
            raise DomainError("schedule minimum exceeds its start value")
        if self.horizon < 0:
            raise DomainError("horizon must be non-negative")


def _linear(t: float, start: float, end: float, horizon: int) -> float:
    if t < 0:
        raise DomainError(f"step index must be non-negative, got {t}")
    if horizon <= 0 or t >= horizon:
        return end
    return start + (end - start) * (t / horizon)


def epsilon_at(t: float, s: Schedules) -> float:
    return _linear(t, s.epsilon0, s.epsilon_min, s.horizon)


def beta_at(t: float, s: Schedules) -> float:
    return _linear(t, s.beta0, s.beta_min, s.horizon)


def greedy_index(table: QTable, key: StateKey, n_actions: int) -> int:
    return table.best(key, n_actions)[0]


def select_index(table: QTable, key: StateKey, n_actions: int, epsilon: float, rng) -> int:
    if n_actions <= 0:
        raise DomainError("empty action set")
    if epsilon > 0 and rng.random() < epsilon:
        return int(rng.integers(n_actions))
    return table.best(key, n_actions)[0]


def select_action(
    table: QTable,
    state: StationState,
    obs: ExogenousObservation,
    actions: Sequence[ChargeAction],
    epsilon: float,
    rng: Optional[np.random.Generator] = None,
) -> ChargeAction:
    """Epsilon-greedy choice over ``actions`` (given in enumeration order)."""
    if not actions:
        raise DomainError("empty action set")
    return actions[select_index(table, encode_state(state, obs), len(actions), epsilon, rng)]


def q_update(table: QTable, tr: Transition, beta: float, gamma: float, k: int) -> QTable:
    """Move Q(state, action) towards ``reward + gamma * max_a' Q(next, a')``."""
    key = encode_state(tr.state, tr.obs)
    a = action_index(tr.state, tr.action, k)
    next_key = encode_state(tr.next_state, tr.next_obs)
    n_next = len(enumerate_actions(tr.next_state, k))
    target = tr.reward + gamma * table.max_value(next_key, n_next)
    table.update(key, a, target, beta)
    return table


ObservationTrace = Sequence[Sequence[ExogenousObservation]]


def _next_obs(trace: ObservationTrace, day: int, hour: int, n_days: int) -> ExogenousObservation:
    if hour < 23:
        return trace[day][hour + 1]
    return trace[(day + 1) % n_days][0]


def train(
    env: StationEnv,
    trace: ObservationTrace,
    schedules: Schedules,
    days: Optional[int] = None,
    repetitions: int = 1,
    rng=None,
    table: Optional[QTable] = None,
    check_bounds: bool = True,
) -> Tuple[QTable, List[float]]:
    """Run Q-learning episodes (one per day) over the observation trace.

    Each repetition starts from an empty station at hour 0 and walks the
    first ``days`` days of ``trace`` in order; vehicles carry over midnight.
    Customer arrivals are resampled on every pass. Returns the table and
    the summed reward of every episode.
    """
    days = len(trace) if days is None else days
    if days < 0 or days > len(trace):
        raise DomainError(f"days={days} outside 0..{len(trace)}")
    if repetitions < 0:
        raise DomainError("repetitions must be non-negative")
    rng = np.random.default_rng(rng)
    table = QTable() if table is None else table
    gamma = schedules.gamma
    k = env.k
    incomes: List[float] = []
    t = 0
    r_bound = 0.0
    for _ in range(repetitions):
        state = empty_state(env.M)
        for day in range(days):
            total = 0.0
            for hour in range(24):
                obs = trace[day][hour]
                next_obs = _next_obs(trace, day, hour, days)
                actions = enumerate_actions(state, k)
                key = encode_state(state, obs)
                a = select_index(table, key, len(actions), epsilon_at(t, schedules), rng)
                tr = env.step(state, actions[a], obs, next_obs, rng)
                next_key = encode_state(tr.next_state, next_obs)
                n_next = len(enumerate_actions(tr.next_state, k))
                target = tr.reward + gamma * table.max_value(next_key, n_next)
                q = table.update(key, a, target, beta_at(t, schedules))
                if check_bounds and gamma < 1:
                    r_bound = max(r_bound, abs(tr.reward))
                    limit = r_bound / (1 - gamma) + abs(table.q0)
                    if abs(q) > limit * (1 + 1e-9) + 1e-12:
                        raise ContractViolation(f"|Q|={abs(q)} exceeds bound {limit}")
                total += tr.reward
                state = tr.next_state
                t += 1
            incomes.append(total)
    return table, incomes


def q_learning_mdp(
    P: np.ndarray,
    R: np.ndarray,
    gamma: float,
    steps: int,
    rng=None,
    omega: float = 0.6,
    q0: float = 0.0,
) -> np.ndarray:
    """Q-learning on an explicit MDP under a uniform behaviour policy.

    ``P[s, a, s']`` are transition probabilities and ``R[s, a]`` rewards.
    The learning rate of a pair on its ``n``-th visit is ``1 / n**omega``
    which satisfies the Robbins-Monro conditions for ``0.5 < omega <= 1``.
    """
    P = np.asarray(P, dtype=float)
    R = np.asarray(R, dtype=float)
    n_s, n_a = R.shape
    rng = np.random.default_rng(rng)
    table = QTable(q0)
    s = 0
    for _ in range(steps):
        a = int(rng.integers(n_a))
        s_next = int(rng.choice(n_s, p=P[s, a]))
        n = table.visits((s,), a) + 1
        target = R[s, a] + gamma * table.max_value((s_next,), n_a)
        table.update((s,), a, target, 1.0 / n ** omega)
        s = s_next
    return np.array([[table.get((s,), a) for a in range(n_a)] for s in range(n_s)])

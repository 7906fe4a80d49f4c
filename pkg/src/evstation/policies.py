"""Decision policies sharing one call signature.

A policy is called as ``policy(state, obs, actions, rng)`` where
``actions`` is the output of :func:`evstation.env.enumerate_actions` for
``state``; it returns one member of ``actions``.
"""

from __future__ import annotations

from typing import Optional, Sequence

from .domain import ChargeAction, StationState
from .env import LITERAL, StationEnv, reward_parts, CLAMPED
from .errors import ConfigError, DomainError
from .exogenous import ExogenousObservation
from .learner import QTable, encode_state

POLICY_NAMES = ("random", "myopic", "learned")


def _nonempty(actions):
    if not actions:
        raise DomainError("empty action set")


def random_policy(actions: Sequence[ChargeAction], rng) -> ChargeAction:
    """Uniform draw over the feasible actions."""
    _nonempty(actions)
    return actions[int(rng.integers(len(actions)))]


def myopic_policy(
    state: StationState,
    obs: ExogenousObservation,
    actions: Sequence[ChargeAction],
    expenses_mode: str = LITERAL,
) -> ChargeAction:
    """Action with the largest immediate reward; ties go to the earliest action."""
    _nonempty(actions)
    best, best_r = None, None
    for a in actions:
        incomes, expenses = reward_parts(state, a, obs)
        if expenses_mode == CLAMPED:
            expenses = max(0.0, expenses)
        r = incomes - expenses
        if best_r is None or r > best_r:
            best, best_r = a, r
    return best


def learned_policy(
    table: QTable,
    state: StationState,
    obs: ExogenousObservation,
    actions: Sequence[ChargeAction],
) -> ChargeAction:
    """Greedy action under a frozen table; never draws random numbers."""
    _nonempty(actions)
    return actions[table.best(encode_state(state, obs), len(actions))[0]]


class RandomPolicy:
    name = "random"

    def __call__(self, state, obs, actions, rng):
        return random_policy(actions, rng)


class MyopicPolicy:
    name = "myopic"

    def __init__(self, expenses_mode: str = LITERAL):
        self.expenses_mode = expenses_mode

    def __call__(self, state, obs, actions, rng=None):
        return myopic_policy(state, obs, actions, self.expenses_mode)


class LearnedPolicy:
    name = "learned"

    def __init__(self, table: QTable):
        if table is None:
            raise ConfigError("the learned policy needs a Q-table")
        self.table = table

    def __call__(self, state, obs, actions, rng=None):
        return learned_policy(self.table, state, obs, actions)


def make_policy(name: str, env: Optional[StationEnv] = None, table: Optional[QTable] = None):
    if name == "random":
        return RandomPolicy()
    if name == "myopic":
        return MyopicPolicy(env.expenses_mode if env is not None else LITERAL)
    if name == "learned":
        return LearnedPolicy(table)
    raise ConfigError(f"unknown policy {name!r}, expected one of {POLICY_NAMES}")

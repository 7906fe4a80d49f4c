from collections import Counter

import numpy as np
import pytest

from evstation.domain import RICH, Vehicle, empty_state, make_state
from evstation.env import CLAMPED, StationEnv, enumerate_actions
from evstation.errors import ConfigError, DomainError
from evstation.exogenous import ExogenousObservation
from evstation.learner import QTable, encode_state
from evstation.policies import (
    LearnedPolicy,
    MyopicPolicy,
    RandomPolicy,
    make_policy,
    myopic_policy,
    random_policy,
)

ONE_CAR = make_state(10, [Vehicle(3, 0, RICH)], 1)
OBS = ExogenousObservation(0, 0, 0.0, 0.01)


def test_random_policy_is_uniform(rng):
    actions = ("a", "b", "c", "d")
    counts = Counter(random_policy(actions, rng) for _ in range(10_000))
    assert all(abs(counts[a] / 10_000 - 0.25) <= 0.02 for a in actions)


def test_random_policy_on_lone_noop(rng):
    assert RandomPolicy()(empty_state(5), OBS, enumerate_actions(empty_state(5), 3), rng) == (0,) * 5


def test_myopic_charges_when_cheap():
    # 3.6 - 0.01 * 100 > 0.36 - 0.01 * 10 > 0
    assert myopic_policy(ONE_CAR, OBS, enumerate_actions(ONE_CAR, 1)) == (100,)


def test_myopic_waits_when_expensive():
    dear = ExogenousObservation(0, 1, 0.0, 0.1)
    assert myopic_policy(ONE_CAR, dear, enumerate_actions(ONE_CAR, 1)) == (0,)


def test_myopic_respects_clamping():
    # with 200 points of free energy every charge is pure profit in clamped mode
    sunny = ExogenousObservation(1, 1, 200.0, 0.1)
    assert MyopicPolicy(CLAMPED)(ONE_CAR, sunny, enumerate_actions(ONE_CAR, 1)) == (100,)


def test_learned_defaults_to_noop():
    s = make_state(4, [Vehicle(2, 0, RICH), Vehicle(3, 50, RICH)], 5)
    assert LearnedPolicy(QTable())(s, OBS, enumerate_actions(s, 3)) == (0,) * 5


def test_learned_follows_dominant_entry():
    actions = enumerate_actions(ONE_CAR, 1)
    t = QTable()
    t.set(encode_state(ONE_CAR, OBS), 2, 9.0)
    assert LearnedPolicy(t)(ONE_CAR, OBS, actions) == actions[2]


def test_learned_draws_no_random_numbers():
    rng = np.random.default_rng(0)
    before = rng.bit_generator.state
    LearnedPolicy(QTable())(ONE_CAR, OBS, enumerate_actions(ONE_CAR, 1), rng)
    assert rng.bit_generator.state == before


def test_make_policy():
    env = StationEnv(expenses_mode=CLAMPED)
    assert make_policy("myopic", env).expenses_mode == CLAMPED
    assert make_policy("random").name == "random"
    with pytest.raises(ConfigError):
        make_policy("learned")
    with pytest.raises(ConfigError):
        make_policy("greedy")


def test_policies_reject_empty_action_sets(rng):
    with pytest.raises(DomainError):
        random_policy((), rng)
    with pytest.raises(DomainError):
        myopic_policy(ONE_CAR, OBS, ())

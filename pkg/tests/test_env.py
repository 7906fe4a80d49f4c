import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from evstation.domain import MEDIUM, RICH, Vehicle, empty_state, make_state
from evstation.env import (
    CLAMPED,
    LITERAL,
    CustomerModel,
    StationEnv,
    admit,
    advance_time,
    apply_action,
    check_state,
    enumerate_actions,
    reward,
    reward_parts,
    sample_arrival_count,
    sample_vehicle,
    step,
)
from evstation.errors import ConfigError, DomainError
from evstation.exogenous import ExogenousObservation

from conftest import states

QUIET = CustomerModel(lam=[0.0] * 24)


def brute_force_actions(state, k):
    """Filter the full {0, 10, 100 - soc}^M grid."""
    options = []
    for v in state.slots:
        options.append((0,) if v is None else (0, 10, 100 - v.soc))
    out = set()
    for u in itertools.product(*options):
        if sum(x != 0 for x in u) > k:
            continue
        ok = all(x == 0 or (v is not None and not v.completed and v.soc + x <= 100) for v, x in zip(state.slots, u))
        if ok:
            out.add(u)
    return out


# arrivals -------------------------------------------------------------------

def test_zero_rate_gives_no_arrivals(rng):
    assert all(sample_arrival_count(rng, 0.0) == 0 for _ in range(100))


def test_poisson_mean_and_zero_mass(rng):
    draws = np.array([sample_arrival_count(rng, 2.0) for _ in range(100_000)])
    assert 1.97 <= draws.mean() <= 2.03
    assert abs((draws == 0).mean() - math.exp(-2)) <= 0.01


def test_negative_rate_rejected(rng):
    with pytest.raises(DomainError):
        sample_arrival_count(rng, -0.1)


def test_vehicle_sampling_clamps_ttl(rng):
    one_soc = [1.0] + [0.0] * 9
    far = CustomerModel(ttl_mean=[100.0] * 24, soc_weights=one_soc)
    assert {sample_vehicle(rng, 5, far).ttl for _ in range(50)} == {12}
    assert {sample_vehicle(rng, 5, far).soc for _ in range(50)} == {0}
    past = CustomerModel(ttl_mean=[-5.0] * 24)
    assert {sample_vehicle(rng, 5, past).ttl for _ in range(50)} == {1}
    assert not sample_vehicle(rng, 0, CustomerModel()).completed


def test_customer_model_validation():
    with pytest.raises(ConfigError):
        CustomerModel(lam=[1.0] * 23)
    with pytest.raises(ConfigError):
        CustomerModel(soc_weights=[0.5] * 10)
    with pytest.raises(ConfigError):
        CustomerModel(ttl_std=[0.0] * 24)


def test_customer_model_dict_roundtrip():
    m = CustomerModel()
    assert CustomerModel.from_dict(m.to_dict()) == m


# admission --------------------------------------------------------------------

def test_admit_full_station():
    full = make_state(3, [Vehicle(2, 0, RICH)] * 2, 2)
    newcomers = [Vehicle(1, 0, MEDIUM)] * 3
    assert admit(full, newcomers) == (full, 3)


def test_admit_single():
    s, rejected = admit(empty_state(5), [Vehicle(4, 30, RICH)])
    assert s.occupied == 1 and rejected == 0


def test_admit_first_come_first_served():
    s = make_state(0, [Vehicle(5, 0, RICH)], 3)
    a, b, c = Vehicle(3, 10, MEDIUM), Vehicle(4, 20, RICH), Vehicle(1, 0, RICH)
    out, rejected = admit(s, [a, b, c])
    assert rejected == 1
    assert set(out.vehicles) == {Vehicle(5, 0, RICH), a, b}


# actions --------------------------------------------------------------------------

def test_empty_station_has_only_noop():
    assert enumerate_actions(empty_state(5), 3) == ((0, 0, 0, 0, 0),)


def test_two_vehicles_one_charger():
    s = make_state(0, [Vehicle(1, 0, RICH), Vehicle(2, 90, RICH)], 2)
    assert set(enumerate_actions(s, 1)) == {(0, 0), (10, 0), (100, 0), (0, 10)}
    assert len(enumerate_actions(s, 1)) == 4


def test_five_empty_vehicles_three_chargers():
    s = make_state(0, [Vehicle(i + 1, 0, RICH) for i in range(5)], 5)
    # sum_{j<=3} C(5, j) 2^j
    expected = sum(math.comb(5, j) * 2 ** j for j in range(4))
    assert expected == 131
    assert len(enumerate_actions(s, 3)) == 131


@given(states(), st.integers(1, 5))
def test_enumeration_matches_brute_force(state, k):
    got = enumerate_actions(state, k)
    assert len(got) == len(set(got))
    assert set(got) == brute_force_actions(state, k)
    assert got[0] == (0,) * state.capacity


# reward ------------------------------------------------------------------------------

def test_reward_fast_charge_example():
    s = make_state(0, [Vehicle(3, 0, RICH)], 1)
    obs = ExogenousObservation(0, 0, r_value=20.0, p_value=0.02)
    # 3.6 - 0.02 * (100 - 20)
    assert reward(s, (100,), obs, 1) == pytest.approx(2.0, abs=1e-12)


def test_noop_reward_with_and_without_renewables():
    s = make_state(0, [Vehicle(3, 0, RICH)], 1)
    assert reward(s, (0,), ExogenousObservation(0, 0, 0.0, 0.02), 1) == 0.0
    sunny = ExogenousObservation(0, 0, 20.0, 0.02)
    assert reward(s, (0,), sunny, 1, LITERAL) == pytest.approx(0.4)
    assert reward(s, (0,), sunny, 1, CLAMPED) == 0.0


def test_infeasible_action_rejected():
    s = make_state(0, [Vehicle(3, 50, RICH)], 1)
    with pytest.raises(DomainError):
        reward(s, (30,), ExogenousObservation(0, 0), 1)
    with pytest.raises(DomainError):
        apply_action(s, (30,), 1)


@given(states(), st.floats(0, 1), st.floats(0, 200))
def test_reward_sign_properties(state, p, r):
    obs = ExogenousObservation(0, 0, r, p)
    zero = (0,) * state.capacity
    assert reward(state, zero, ExogenousObservation(0, 0, 0.0, p)) == 0.0
    for u in enumerate_actions(state, 3):
        incomes, expenses = reward_parts(state, u, obs)
        assert incomes >= 0
        assert reward(state, u, obs, 3, CLAMPED) <= incomes + 1e-12


# transitions ---------------------------------------------------------------------------

def test_apply_action_examples():
    s = make_state(0, [Vehicle(2, 90, RICH), Vehicle(3, 50, RICH), Vehicle(4, 0, MEDIUM)], 3)
    out = apply_action(s, (10, 0, 100), 3)
    assert out.vehicles == (Vehicle(2, 0, RICH, True), Vehicle(3, 50, RICH, False), Vehicle(4, 0, MEDIUM, True))


@given(states())
def test_apply_action_keeps_ttls(state):
    for u in enumerate_actions(state, 3)[:20]:
        out = apply_action(state, u, 3)
        assert sorted(v.ttl for v in out.vehicles) == sorted(v.ttl for v in state.vehicles)


def test_advance_time_removes_expired():
    s = make_state(7, [Vehicle(3, 10, RICH), Vehicle(1, 20, RICH), Vehicle(2, 30, MEDIUM)], 5)
    out, rejected = advance_time(s)
    assert out.hour == 8 and rejected == 0
    assert sorted(v.ttl for v in out.vehicles) == [1, 2]


def test_advance_time_wraps_and_empty():
    out, _ = advance_time(empty_state(5, hour=23))
    assert out == empty_state(5, hour=0)


@given(states())
def test_advance_time_keeps_soc(state):
    out, _ = advance_time(state)
    survivors = sorted((v.ttl - 1, v.user_type.id, v.soc, v.completed) for v in state.vehicles if v.ttl > 1)
    assert sorted((v.ttl, v.user_type.id, v.soc, v.completed) for v in out.vehicles) == survivors


def test_step_with_no_customers(rng):
    s = make_state(5, [Vehicle(1, 0, RICH), Vehicle(3, 40, MEDIUM)], 5)
    obs = ExogenousObservation(0, 0, 0.0, 0.02)
    tr = step(s, (0,) * 5, obs, obs, rng, QUIET)
    assert tr.reward == 0.0
    assert tr.next_state == make_state(6, [Vehicle(2, 40, MEDIUM)], 5)


def test_mass_expiry(rng):
    s = make_state(5, [Vehicle(1, 0, RICH)] * 4, 5)
    tr = step(s, (0,) * 5, ExogenousObservation(0, 0), ExogenousObservation(0, 0), rng, QUIET)
    assert tr.next_state.occupied == 0


def test_step_is_deterministic_for_a_seed():
    s = make_state(8, [Vehicle(2, 0, RICH), Vehicle(4, 90, MEDIUM)], 5)
    obs = ExogenousObservation(1, 0, 10.0, 0.01)
    a = step(s, (100, 0, 0, 0, 0), obs, obs, np.random.default_rng(3), CustomerModel())
    b = step(s, (100, 0, 0, 0, 0), obs, obs, np.random.default_rng(3), CustomerModel())
    assert a == b


def test_env_rejects_bad_shape():
    with pytest.raises(ConfigError):
        StationEnv(M=2, k=3)


def test_random_walk_keeps_invariants():
    rng = np.random.default_rng(0)
    env = StationEnv(model=CustomerModel(lam=[2.0] * 24, soc_weights=[0.1] * 10, ttl_mean=[4.0] * 24, ttl_std=[3.0] * 24))
    state = empty_state(5)
    obs = ExogenousObservation(1, 1, 5.0, 0.012)
    for _ in range(2000):
        actions = env.actions(state)
        u = actions[int(rng.integers(len(actions)))]
        tr = env.step(state, u, obs, obs, rng)
        assert tr.reward == env.reward(state, u, obs)
        check_state(tr.next_state, 5)
        state = tr.next_state


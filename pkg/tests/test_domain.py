import pytest
from hypothesis import given, strategies as st

from evstation.domain import (
    MEDIUM,
    RICH,
    StationState,
    Vehicle,
    canonical_slots,
    charge_price,
    check_action,
    is_canonical,
    make_state,
    make_user_type,
    user_type_value,
)
from evstation.env import enumerate_actions
from evstation.errors import DomainError

from conftest import states


def test_full_charge_prices_match_type_maxima():
    assert user_type_value(RICH, 100) == 3.6
    assert user_type_value(MEDIUM, 100) == 2.4
    assert user_type_value(RICH, 0) == 0.0


def test_half_charge_rich():
    # 3.6/100 * (100 - 25)
    assert user_type_value(RICH, 50) == pytest.approx(2.7, abs=1e-12)


def test_above_full_is_capped():
    assert user_type_value(RICH, 150) == 3.6


def test_negative_soc_rejected():
    with pytest.raises(DomainError):
        user_type_value(RICH, -10)


@pytest.mark.parametrize(
    "soc_from, soc_to, expected",
    [(0, 100, 3.6), (50, 50, 0.0), (90, 100, 0.036)],
)
def test_charge_price_examples(soc_from, soc_to, expected):
    assert charge_price(RICH, soc_from, soc_to) == pytest.approx(expected, abs=1e-12)


def test_charge_price_reversed_range():
    with pytest.raises(DomainError):
        charge_price(RICH, 60, 50)


def test_user_type_needs_positive_price():
    with pytest.raises(DomainError):
        make_user_type(2, 0.0)


@given(st.sampled_from([MEDIUM, RICH]), st.floats(0, 100), st.floats(0, 100))
def test_value_is_monotone(t, a, b):
    lo, hi = sorted((a, b))
    assert user_type_value(t, lo) <= user_type_value(t, hi) + 1e-12


@pytest.mark.parametrize("t", [MEDIUM, RICH])
def test_diminishing_returns(t):
    steps = [charge_price(t, x, x + 10) for x in range(0, 100, 10)]
    assert all(a > b for a, b in zip(steps, steps[1:]))


@given(states())
def test_canonical_sort_is_idempotent(state):
    assert is_canonical(state)
    assert canonical_slots(state.slots, state.capacity) == state.slots


def test_canonical_order_ttl_then_type():
    vs = [Vehicle(3, 0, RICH), Vehicle(1, 50, RICH), Vehicle(3, 20, MEDIUM)]
    s = make_state(0, [None] + vs, 5)
    assert [(v.ttl, v.user_type.id) for v in s.vehicles] == [(1, 1), (3, 0), (3, 1)]
    assert s.slots[3:] == (None, None)


def test_permutations_share_canonical_form():
    vs = [Vehicle(2, 10, RICH), Vehicle(2, 30, RICH), Vehicle(5, 0, MEDIUM, True)]
    assert make_state(4, vs, 4) == make_state(4, vs[::-1], 4)


@given(states(), st.integers(1, 5))
def test_enumerated_actions_satisfy_invariants(state, k):
    for u in enumerate_actions(state, k):
        assert sum(x != 0 for x in u) <= k
        for v, x in zip(state.slots, u):
            if v is None or v.completed:
                assert x == 0
            else:
                assert v.soc + x <= 100
                assert x in (0, 10, 100 - v.soc)
        check_action(state, u, k)


def test_check_action_rejects_completed_vehicle():
    s = make_state(0, [Vehicle(2, 0, RICH, True)], 1)
    with pytest.raises(DomainError):
        check_action(s, (10,), 1)


def test_check_action_rejects_too_many_chargers():
    s = make_state(0, [Vehicle(2, 0, RICH), Vehicle(2, 0, RICH)], 2)
    with pytest.raises(DomainError):
        check_action(s, (10, 10), 1)

import numpy as np
import pytest
from hypothesis import strategies as st

from evstation.domain import MEDIUM, RICH, Vehicle, make_state
from evstation.exogenous import ExogenousObservation

SOCS = list(range(0, 100, 10))


@st.composite
def vehicles(draw, ttl_max=12):
    completed = draw(st.booleans())
    soc = 0 if completed else draw(st.sampled_from(SOCS))
    return Vehicle(draw(st.integers(1, ttl_max)), soc, draw(st.sampled_from([MEDIUM, RICH])), completed)


@st.composite
def states(draw, max_m=5):
    m = draw(st.integers(1, max_m))
    vs = draw(st.lists(vehicles(), max_size=m))
    return make_state(draw(st.integers(0, 23)), vs, m)


def random_state(rng, m, hour=None):
    n = int(rng.integers(0, m + 1))
    vs = []
    for _ in range(n):
        completed = bool(rng.random() < 0.2)
        soc = 0 if completed else int(rng.choice(SOCS))
        vs.append(Vehicle(int(rng.integers(1, 13)), soc, [MEDIUM, RICH][int(rng.integers(2))], completed))
    return make_state(int(rng.integers(24)) if hour is None else hour, vs, m)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def obs0():
    return ExogenousObservation(0, 0, 0.0, 0.02)


ACCEPTANCE = []


@pytest.fixture
def verdict():
    """Record one acceptance line; shown in the terminal summary."""

    def record(name, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        ACCEPTANCE.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)

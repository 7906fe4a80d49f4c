"""Value types of the station model and the user-type price curves.

Energy is counted in SOC-points: one point raises one battery by one
percentage point. All batteries share one capacity, so a point is a fixed
amount of energy (``battery_capacity_kwh / 100``).
"""

from __future__ import annotations

from typing import NamedTuple, Optional, Sequence, Tuple

from .errors import ContractViolation, DomainError

TTL_MAX = 12
SOC_STEP = 10
FULL_SOC = 100
NORMAL_CHARGE = 10


class UserType(NamedTuple):
    """A customer class with a concave willingness-to-pay curve.

    ``id`` orders types when vehicles with equal time-to-leave are sorted.
    ``max_price`` is what a full 0-100 % charge is worth to the customer.
    """

    id: int
    max_price: float
    name: str = ""


MEDIUM = UserType(0, 2.4, "medium")
RICH = UserType(1, 3.6, "rich")
DEFAULT_TYPES: Tuple[UserType, ...] = (MEDIUM, RICH)


def make_user_type(id: int, max_price: float, name: str = "") -> UserType:
    if max_price <= 0:
        raise DomainError(f"max_price must be positive, got {max_price}")
    return UserType(int(id), float(max_price), name)


class Vehicle(NamedTuple):
    ttl: int
    soc: int
    user_type: UserType
    completed: bool = False

    def sort_key(self):
        # (ttl, type) is the required order; soc and completed only make it total
        return (self.ttl, self.user_type.id, self.soc, self.completed)

    @property
    def eligible(self) -> bool:
        """True when the vehicle may still receive energy."""
        return not self.completed and self.soc < FULL_SOC


Slots = Tuple[Optional[Vehicle], ...]
ChargeAction = Tuple[int, ...]


class StationState(NamedTuple):
    """Hour of day plus ``M`` parking slots; ``None`` marks a vacant slot."""

    hour: int
    slots: Slots

    @property
    def capacity(self) -> int:
        return len(self.slots)

    @property
    def occupied(self) -> int:
        return sum(v is not None for v in self.slots)

    @property
    def vehicles(self) -> Tuple[Vehicle, ...]:
        return tuple(v for v in self.slots if v is not None)


def canonical_slots(vehicles: Sequence[Optional[Vehicle]], capacity: int) -> Slots:
    occupied = sorted((v for v in vehicles if v is not None), key=Vehicle.sort_key)
    if len(occupied) > capacity:
        raise ContractViolation(
            f"{len(occupied)} vehicles do not fit into {capacity} slots"
        )
    return tuple(occupied) + (None,) * (capacity - len(occupied))


def empty_state(capacity: int, hour: int = 0) -> StationState:
    return StationState(hour, (None,) * capacity)


def make_state(hour: int, vehicles: Sequence[Optional[Vehicle]], capacity: int) -> StationState:
    """Build a canonical state from vehicles given in any order."""
    if not 0 <= hour < 24:
        raise DomainError(f"hour must lie in 0..23, got {hour}")
    for v in vehicles:
        if v is not None:
            check_vehicle(v)
    return StationState(hour, canonical_slots(vehicles, capacity))


def check_vehicle(v: Vehicle, ttl_max: int = TTL_MAX) -> None:
    if not 1 <= v.ttl <= ttl_max:
        raise ContractViolation(f"ttl {v.ttl} outside 1..{ttl_max}")
    if v.soc % SOC_STEP or not 0 <= v.soc <= FULL_SOC:
        raise ContractViolation(f"soc {v.soc} is not a multiple of 10 in [0, 100]")


def is_canonical(state: StationState) -> bool:
    return state.slots == canonical_slots(state.slots, len(state.slots))


def user_type_value(user_type: UserType, soc: float) -> float:
    """Cumulative price a customer pays for reaching ``soc`` percent from empty."""
    if soc < 0:
        raise DomainError(f"soc must be non-negative, got {soc}")
    m = user_type.max_price
    if soc >= FULL_SOC:
        return m
    return m * (2 * soc - soc * soc / 100) / 100


def charge_price(user_type: UserType, soc_from: float, soc_to: float) -> float:
    """Price of charging from ``soc_from`` to ``soc_to`` percent."""
    if soc_from < 0 or soc_to > FULL_SOC:
        raise DomainError(f"soc range [{soc_from}, {soc_to}] outside [0, 100]")
    if soc_from > soc_to:
        raise DomainError(f"soc_from {soc_from} exceeds soc_to {soc_to}")
    return user_type_value(user_type, soc_to) - user_type_value(user_type, soc_from)


def check_action(state: StationState, action: ChargeAction, k: int) -> None:
    """Raise :class:`DomainError` unless ``action`` is feasible in ``state``."""
    if len(action) != len(state.slots):
        raise DomainError(f"action has {len(action)} entries for {len(state.slots)} slots")
    nonzero = 0
    for v, u in zip(state.slots, action):
        if u == 0:
            continue
        nonzero += 1
        if v is None:
            raise DomainError("action charges a vacant slot")
        if not v.eligible:
            raise DomainError("action charges a completed vehicle")
        if u not in (NORMAL_CHARGE, FULL_SOC - v.soc):
            raise DomainError(f"charge {u} not in {{10, {FULL_SOC - v.soc}}}")
    if nonzero > k:
        raise DomainError(f"action has {nonzero} nonzero entries, limit is {k}")

"""Revenue-maximizing EV charging station control with tabular Q-learning."""

from .config import ExperimentConfig, load_config
from .domain import (
    MEDIUM,
    RICH,
    ChargeAction,
    StationState,
    UserType,
    Vehicle,
    charge_price,
    empty_state,
    make_state,
    user_type_value,
)
from .env import CustomerModel, StationEnv, Transition, enumerate_actions
from .errors import ConfigError, ContractViolation, DataError, DomainError, EVStationError
from .estimator import ChargingController
from .exogenous import ExogenousObservation, HourlySeries, LevelCodec, LevelDiscretizer
from .harness import RunReport, compare, value_iteration_oracle
from .learner import QTable, Schedules

__version__ = "0.1.0"

"""Exception hierarchy shared by the library and the command line."""


class EVStationError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class DomainError(EVStationError, ValueError):
    """An argument lies outside the domain of an operation."""

    exit_code = 4


class ContractViolation(EVStationError, AssertionError):
    """A precondition or internal invariant did not hold."""

    exit_code = 4


class DataError(EVStationError, ValueError):
    """Input data could not be parsed or is inconsistent."""

    exit_code = 3


class DegenerateLevelsError(DataError):
    """A series cannot be split into the requested number of levels."""


class ConfigError(EVStationError, ValueError):
    """An experiment configuration is malformed or inconsistent."""

    exit_code = 2

"""Exception hierarchy; each class carries the CLI exit code it maps to."""


class PhasePatError(Exception):
    exit_code = 1


class InputError(PhasePatError):
    """Unreadable, malformed, or invalid input data."""

    exit_code = 2


class ConfigError(PhasePatError):
    exit_code = 3


class DegenerateDataError(PhasePatError):
    """Data with no usable variance (zero std, constant phases, too-small pools)."""

    exit_code = 4


class NonConvergenceError(PhasePatError):
    exit_code = 5

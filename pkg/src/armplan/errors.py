"""Exception hierarchy shared across the library."""


class ArmPlanError(Exception):
    """Base class for all library errors."""


class ConfigError(ArmPlanError):
    """Bad configuration or input file (CLI exit code 1)."""


class SolverFailure(ArmPlanError):
    """A numerical solve could not be completed (CLI exit code 2)."""

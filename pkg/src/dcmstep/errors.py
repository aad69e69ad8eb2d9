"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class PlanError(ValueError):
    """A footstep plan is malformed."""


class InfeasibleError(RuntimeError):
    """A hard constraint set of a hierarchy level admits no solution."""

    def __init__(self, level, message=None):
        self.level = level
        super().__init__(message or f"level {level}: hard constraints are infeasible")


class ConfigError(ValueError):
    """Invalid scenario or model configuration."""


class SimulationFault(RuntimeError):
    """The plant integration could not proceed (e.g. singular contact solve)."""

"""Exception types raised by the simulator.

Everything inherits from SimulationError so callers can catch broadly;
ConfigError carries file/line context for CLI diagnostics.
"""


class SimulationError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateInput(SimulationError):
    """Geometric input outside the domain of an operation (zero vector, coincident points, ...)."""


class InvalidSpec(SimulationError):
    """Constellation or orbit specification violates a structural invariant."""


class NegativeRtt(SimulationError):
    """Round-trip interval minus processing delay came out negative."""


class InsufficientSamples(SimulationError):
    """Not enough distinct samples for an estimate."""


class NegativeDelay(SimulationError):
    """Adversarial delays must be nonnegative; a negative one was supplied."""


class UnauthenticatedResponse(SimulationError):
    """A response failed authentication and cannot anchor a constraint."""


class StaleReference(SimulationError):
    """A broadcast arrival predates the challenge it should be referenced to."""


class NonConvergence(SimulationError):
    """Iterative solver exhausted its iteration budget.

    best carries the last iterate as a solution object (converged False)
    so callers logging failures can still record where the solver stood.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DegenerateGeometry(SimulationError):
    """Constraint geometry cannot determine a position (too few rows or rank-deficient)."""


class FocusCoincidence(SimulationError):
    """Solver iterate pinned to a constraint focus where the Jacobian is undefined."""


class DegenerateTriangle(SimulationError):
    """Spherical triangle too small (or flat) to test containment against."""


class InfeasiblePlan(SimulationError):
    """A spoofing plan would require a negative signal delay."""


class ConfigError(SimulationError):
    """Malformed structured-text configuration.

    path/line are optional; __str__ renders "path:line: message" when known.
    """

    def __init__(self, message, path=None, line=None):
        super().__init__(message)
        self.message = message
        self.path = path
        self.line = line

    def __str__(self):
        prefix = ""
        if self.path is not None:
            prefix = str(self.path)
            if self.line is not None:
                prefix += f":{self.line}"
            prefix += ": "
        return prefix + self.message

"""Exception hierarchy shared by all lurecert modules."""


class LureCertError(Exception):
    """Base class for every error raised by lurecert."""


class ShapeError(LureCertError, ValueError):
    """Operand dimensions are inconsistent."""


class DomainError(LureCertError, ValueError):
    """An argument lies outside the admissible set (negative weight, s < 1, ...)."""


class ConvergenceError(LureCertError, ArithmeticError):
    """An iterative numerical routine failed to converge."""


class SingularityError(LureCertError, ArithmeticError):
    """A matrix that must be inverted is singular or numerically so."""


class PreconditionError(LureCertError, ValueError):
    """A mathematical precondition of an operation does not hold.

    Kept distinct from a negative verdict: a certificate check that *runs* and
    finds the certificate infeasible returns a report, it does not raise.
    """


class InconsistencyError(LureCertError, ArithmeticError):
    """Two routes that must agree mathematically disagreed numerically."""


class SimulationError(LureCertError, ArithmeticError):
    """The integrator produced a non-finite or exploding state."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class PositivityError(LureCertError, ArithmeticError):
    """A trajectory left the nonnegative orthant when it provably should not."""


class ConfigError(LureCertError, ValueError):
    """An experiment configuration is malformed or inconsistent."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line

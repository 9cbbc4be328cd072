"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function or distribution."""


class DegenerateSample(ValueError):
    """All observations are equal, so the closed-form estimators are undefined."""


class SingularMatrix(ArithmeticError):
    """A matrix that must be inverted is numerically singular."""


class QuadratureError(ArithmeticError):
    """An integrand returned a non-finite value at a quadrature node."""


class NonConvergence(RuntimeError):
    """An iterative solver stopped before meeting its tolerance.

    Parameters
    ----------
    message : str
        Human readable description.
    last_iterate : array_like, optional
        The final iterate reached by the solver.
    residual : float, optional
        Residual norm at ``last_iterate``.
    """

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual

"""Exception types raised by the toolkit."""


class ContractViolation(ValueError):
    """An input broke a documented precondition."""


class NoCrossingError(ContractViolation):
    """The two unperturbed levels are parallel and never cross."""


class InvalidEnergyError(ValueError):
    """Energy lies outside the domain of a channel form factor."""


class SingularityError(ArithmeticError):
    """The resolvent is singular at the requested energy."""


class DoublePoleError(ArithmeticError):
    """The effective Hamiltonian is (numerically) defective."""


class LoopHitsEPError(ArithmeticError):
    """A continuation path ran into a degeneracy."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ContinuityError(ArithmeticError):
    """Adaptive bisection could not resolve branch matching."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step

"""Exception types shared across the package."""


class LooptreeError(Exception):
    """Base class for every error raised by looptrees."""


class DomainError(LooptreeError, ValueError):
    pass


class InvalidEncoding(LooptreeError, ValueError):
    pass


class HullConstraint(LooptreeError, ValueError):
    pass


class Overflow(LooptreeError):
    """Unconditioned GW generation exceeded the size cap."""


class ZeroProbability(LooptreeError, ValueError):
    pass


class Disconnected(LooptreeError, ValueError):
    pass


class DegenerateInput(LooptreeError, ValueError):
    pass


class ConvergenceFailure(LooptreeError, ArithmeticError):
    pass


class CapTooSmall(LooptreeError, ValueError):
    pass


class TailBoundExceeded(LooptreeError, ArithmeticError):
    pass


class BoundViolated(LooptreeError, AssertionError):
    pass

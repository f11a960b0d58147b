"""Exception hierarchy shared by all netarch modules."""


class NetarchError(Exception):
    """Base class for every error raised by this package."""


class DomainError(NetarchError, ValueError):
    """An argument lies outside the domain of the requested quantity."""


class RangeError(NetarchError, ValueError):
    """A value lies outside the range of a (possibly bounded) function."""


class DivergenceDetected(NetarchError, ArithmeticError):
    """A series did not converge within the term or magnitude cap."""


class BracketFailure(NetarchError, ArithmeticError):
    """A root-finding bracket does not enclose a sign change."""


class ResourceError(NetarchError, MemoryError):
    """A simulation exceeded its population or event budget."""

"""Exception hierarchy shared by all rdipe modules."""


class RdipeError(Exception):
    """Base class for every error raised by this package."""


class PhaseNotReal(RdipeError):
    """A Pauli product or conjugation produced a +-i phase."""


class InvalidSite(RdipeError, ValueError):
    pass


class DimensionMismatch(RdipeError, ValueError):
    pass


class LengthMismatch(RdipeError, ValueError):
    pass


class TooLarge(RdipeError, ValueError):
    pass


class TooLargeForDense(TooLarge):
    pass


class SupportCapExceeded(RdipeError, ValueError):
    pass


class OddN(RdipeError, ValueError):
    pass


class NotReal(RdipeError, ValueError):
    pass


class NoSolution(RdipeError, ValueError):
    pass


class EmptyRounds(RdipeError, ValueError):
    pass


class PurityTooLow(RdipeError, ValueError):
    pass


class InvalidChannelParam(RdipeError, ValueError):
    pass


class CalibrationFailed(RdipeError):
    pass


class ConfigMismatch(RdipeError):
    pass


class ProtocolViolation(RdipeError):
    pass


class ChannelError(RdipeError):
    """The transport to the peer failed (closed socket, timeout)."""

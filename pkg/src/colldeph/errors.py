"""Exception hierarchy shared by all modules."""


class ColldephError(Exception):
    """Base class for every error raised by this package."""


class NotHermitian(ColldephError, ValueError):
    pass


class ShapeMismatch(ColldephError, ValueError):
    pass


class DimensionMismatch(ShapeMismatch):
    pass


class InvalidState(ColldephError, ValueError):
    pass


class UnsupportedQubitCount(ColldephError, ValueError):
    pass


class UnsupportedPartyCount(ColldephError, ValueError):
    pass


class DegenerateOrientation(ColldephError, ValueError):
    pass


class AlphaOutOfRange(ColldephError, ValueError):
    pass


class RankDeficientConstraints(ColldephError, ValueError):
    pass


class NumericalFailure(ColldephError, ArithmeticError):
    pass


class CertificateInvalid(ColldephError, ValueError):
    """A witness certificate failed one of its audit checks.

    ``check`` names the failed invariant, ``bipartition`` the offending split
    (``None`` when the failure is not split-specific).
    """

    def __init__(self, check: str, message: str, bipartition=None):
        super().__init__(message)
        self.check = check
        self.bipartition = bipartition


class UnknownFamily(ColldephError, KeyError):
    pass


class NonMonotoneTrajectory(ColldephError, RuntimeError):
    """The Svetlichny trajectory re-crosses the threshold; ``crossings`` holds all of them."""

    def __init__(self, message: str, crossings):
        super().__init__(message)
        self.crossings = list(crossings)


class ConfigParseError(ColldephError, ValueError):
    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
        self.field = field
        self.line = line

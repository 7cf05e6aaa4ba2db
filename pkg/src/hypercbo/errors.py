"""Exception hierarchy shared by all modules."""


class CBOError(Exception):
    """Base class for every error raised by hypercbo."""


class SingularPoint(CBOError, ValueError):
    """The signed distance (or one of its derivatives) is undefined at the point."""


class OffManifold(CBOError, ValueError):
    pass


class ProjectionDiverged(CBOError, RuntimeError):
    """Closest-point iteration did not reach tolerance; the point is likely
    outside the reach of the surface (time step too large)."""


class UnsupportedSampler(CBOError, NotImplementedError):
    pass


class DimensionMismatch(CBOError, ValueError):
    pass


class EmptyEnsemble(CBOError, ValueError):
    pass


class NonFiniteEnergy(CBOError, ValueError):
    pass


class NonFiniteState(CBOError, RuntimeError):
    pass


class OracleLimitExceeded(CBOError, ValueError):
    pass


class UnequalSupport(CBOError, ValueError):
    pass


class InsufficientRepeats(CBOError, ValueError):
    pass


class ReferencePathMissing(CBOError, ValueError):
    pass


class ParseError(CBOError, ValueError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class ValidationError(CBOError, ValueError):
    """Raised with one message per violated constraint."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))

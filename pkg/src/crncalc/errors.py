"""Exception hierarchy shared by every crncalc module."""


class CrnCalcError(Exception):
    """Base class for all errors raised by crncalc."""


class DimensionMismatch(CrnCalcError, ValueError):
    pass


class DivisorZero(CrnCalcError, ValueError):
    pass


class ProbabilityOutOfRange(CrnCalcError, ValueError):
    pass


class EpsilonOutOfRange(CrnCalcError, ValueError):
    pass


class InvalidPmf(CrnCalcError, ValueError):
    """Raised when entries do not form a probability mass function."""


class FormulaSyntaxError(CrnCalcError, ValueError):
    """Parse error in formula or network text, with a 1-based position."""

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


class InvalidWeight(CrnCalcError, ValueError):
    pass


class UnboundVariable(CrnCalcError, KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(name)

    def __str__(self):
        return f"unbound environment variable {self.name!r}"


class DegenerateWeight(CrnCalcError, ArithmeticError):
    pass


class UnknownSpecies(CrnCalcError, KeyError):
    def __str__(self):
        return f"unknown species {self.args[0]!r}"


class NotFresh(CrnCalcError, ValueError):
    pass


class NotEnabled(CrnCalcError, ValueError):
    pass


class NotNormalized(CrnCalcError, ValueError):
    pass


class NotNro(CrnCalcError, ValueError):
    pass


class OutputNotFound(CrnCalcError, KeyError):
    def __str__(self):
        return f"output species {self.args[0]!r} not found"


class EmptySupport(CrnCalcError, ValueError):
    pass


class NonPositiveRate(CrnCalcError, ValueError):
    pass


class NonRepresentableCount(CrnCalcError, ValueError):
    pass


class StateCapExceeded(CrnCalcError, RuntimeError):
    def __init__(self, cap):
        self.cap = cap
        super().__init__(f"reachable state space exceeds cap of {cap} states")

"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class MultiscaleError(Exception):
    """Base class; ``structural`` errors map to CLI exit code 2."""

    structural = True


class ParseError(MultiscaleError):
    structural = False

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class MixedTimeKind(ParseError):
    pass


class UnknownFunction(ParseError):
    pass


class NonIntegerShift(ParseError):
    pass


class UnknownParameter(MultiscaleError):
    structural = False


class ZeroDenominatorAtOrigin(MultiscaleError):
    pass


class NonzeroAtOrigin(MultiscaleError):
    pass


class DegenerateLinearPart(MultiscaleError):
    pass


class NonlinearTimeDerivative(MultiscaleError):
    pass


class ComplexFieldModel(MultiscaleError):
    pass


class FullyDiscreteModel(MultiscaleError):
    pass


class NoDispersiveBranch(MultiscaleError):
    pass


class BranchOutOfRange(MultiscaleError):
    pass


class StationarySymbol(MultiscaleError):
    pass


class TransportMismatch(MultiscaleError):
    pass


class HarmonicResonance(MultiscaleError):
    pass


class NonIntegrableMeanField(MultiscaleError):
    pass


class BareMeanField(MultiscaleError):
    pass


class UnreducedTerm(MultiscaleError):
    pass


class ZeroDispersion(MultiscaleError):
    pass


class UnknownModel(MultiscaleError):
    structural = False


class ConstraintViolated(MultiscaleError):
    pass


class SingularFormula(MultiscaleError):
    pass


class CarrierNotPeriodic(MultiscaleError):
    pass


class BlowUp(MultiscaleError):
    pass


class FixedPointDivergence(MultiscaleError):
    pass


class GridMismatch(MultiscaleError):
    pass


class UnstableScheme(MultiscaleError):
    """The explicit time stepping amplifies some ring wavenumber even linearly."""

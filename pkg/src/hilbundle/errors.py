"""Exception hierarchy shared by every module of the package."""


class HilbundleError(Exception):
    """Base class for all errors raised by hilbundle."""


class DimensionMismatch(HilbundleError, ValueError):
    pass


class BasePointMismatch(HilbundleError, ValueError):
    """Two fibre vectors (or a vector and a map) live over different base points."""


class SingularTrivializer(HilbundleError, ArithmeticError):
    """The trivializer matrix is singular or too badly conditioned to invert."""


class SingularBasisChange(HilbundleError, ArithmeticError):
    pass


class SingularCoordinateChange(HilbundleError, ArithmeticError):
    pass


class EpsilonTooSmall(HilbundleError, ValueError):
    pass


class EvaluationFailure(HilbundleError, RuntimeError):
    """A field could not be evaluated at a (possibly displaced) point."""


class UnsupportedMorphism(HilbundleError, TypeError):
    """The derivation was asked to act on something other than a generated section morphism."""


class SupportOutOfGrid(HilbundleError, ValueError):
    pass


class ParseError(HilbundleError, ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}, column {column})"
        super().__init__(f"{message}{where}")


class ValidationError(HilbundleError, ValueError):
    pass


class UnknownFamily(ValidationError):
    pass

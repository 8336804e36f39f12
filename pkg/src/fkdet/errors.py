"""Exception types raised by fkdet.

Every exception carries a short machine-readable ``kind`` string so the
CLI (and callers) can dispatch on failure class without parsing messages.
Input problems derive from :class:`InputError`, numerical breakdowns from
:class:`NumericalError`.
"""


class FKDetError(Exception):
    kind = "error"


class InputError(FKDetError, ValueError):
    kind = "input"


class NumericalError(FKDetError, ArithmeticError):
    kind = "numerical"


class DimensionError(InputError):
    kind = "dimension"


class ParseError(InputError):
    kind = "parse"

    def __init__(self, message, text=None, position=None):
        self.text = text
        self.position = position
        if text is not None and position is not None:
            message = f"{message} at position {position}\n  {text}\n  {' ' * position}^"
        super().__init__(message)


class ZeroPolynomialError(InputError):
    kind = "zero_polynomial"


class ZeroSymbolError(InputError):
    kind = "zero_symbol"


class NotNormalizedError(InputError):
    kind = "not_normalized"


class ConstantOperatorError(InputError):
    kind = "constant_operator"


class NotNormalizableError(InputError):
    kind = "not_normalizable"


class SingularSampleError(NumericalError):
    kind = "singular_sample"

    def __init__(self, message, point=None):
        self.point = point
        super().__init__(message)


class DegenerateQuadratureError(NumericalError):
    kind = "degenerate_quadrature"


class SingularCocycleError(NumericalError):
    kind = "singular_cocycle"


class SingularMatrixError(NumericalError):
    kind = "singular_matrix"

    def __init__(self, message, step=None):
        self.step = step
        super().__init__(message)


class DegenerateCocycleError(NumericalError):
    kind = "degenerate_cocycle"


class CocycleOverflowError(NumericalError):
    kind = "overflow"


class FiberFailuresError(NumericalError):
    kind = "fiber_failures"

    def __init__(self, message, zetas=()):
        self.zetas = list(zetas)
        super().__init__(message)

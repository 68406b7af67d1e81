"""Exception hierarchy shared by all modules."""


class ParameterError(ValueError):
    """An argument violates an operation's precondition."""


class DimensionError(ParameterError):
    """Face dimension exceeds the ambient dimension."""


class AdmissibilityError(ParameterError):
    """A (k, alpha) spec or a spec sequence is not admissible.

    ``clause`` names the violated condition.
    """

    def __init__(self, message, clause):
        super().__init__(f"{message} [clause: {clause}]")
        self.clause = clause


class NumericalError(ArithmeticError):
    """Round-off beyond tolerance, e.g. a clearly negative Gram determinant."""


class DegenerateFaceError(NumericalError):
    """Zero-volume face raised to a negative power."""


class UndefinedEstimateError(ValueError):
    """Estimator evaluated on an empty face stream."""


class TableMissError(KeyError):
    """A geometric constant needed by a prediction is missing from the table."""

    def __init__(self, key):
        super().__init__(f"moment table has no entry for {key}")
        self.key = key


class DiagnosticError(ValueError):
    """A statistical diagnostic is undefined for the given samples."""


class ShapeMismatchError(ValueError):
    pass

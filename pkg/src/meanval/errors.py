"""Exception hierarchy.

Every library error carries a short machine-readable ``code`` so the CLI can
report failures without parsing messages.
"""


class MeanValError(Exception):
    code = "error"


class DimensionMismatch(MeanValError, ValueError):
    code = "dimension_mismatch"


class NonIntegrable(MeanValError, ArithmeticError):
    code = "non_integrable"


class BudgetExceeded(MeanValError, RuntimeError):
    """Raised when the evaluation budget runs out before the tolerance is met.

    The best estimate reached so far is available as ``partial``.
    """

    code = "budget_exceeded"

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ZeroMassRegion(MeanValError, ValueError):
    code = "zero_mass_region"


class UnboundedSublevel(MeanValError, ValueError):
    code = "unbounded_sublevel"


class ThetaDiverges(MeanValError, ArithmeticError):
    code = "theta_diverges"


class ExcludedCase(MeanValError, ValueError):
    code = "excluded_case"


class TermDiverged(MeanValError, ArithmeticError):
    code = "term_diverged"


class InvalidRenorm(MeanValError, ValueError):
    code = "invalid_renorm"


class SupportEscapesFlag(MeanValError, ValueError):
    code = "support_escapes_flag"


class NotOrthogonal(MeanValError, ValueError):
    code = "not_orthogonal"


class FlagNotContained(MeanValError, ValueError):
    code = "flag_not_contained"


class ExprError(MeanValError):
    code = "expr_error"


class ExprSyntaxError(ExprError, SyntaxError):
    """Parse failure with a 1-based line/column position."""

    code = "syntax_error"

    def __init__(self, message, line=1, column=1):
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


class UnknownIdentifier(ExprError):
    code = "unknown_identifier"


class ArityError(ExprError):
    code = "arity_error"


class EvalError(ExprError, ArithmeticError):
    code = "eval_error"


class ConfigInvalid(MeanValError, ValueError):
    code = "config_invalid"

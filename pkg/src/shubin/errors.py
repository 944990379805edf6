"""Exception hierarchy.

Every error carries a short machine-readable ``code`` that the command line
interface writes into its JSON output.  Validation problems map to exit
status 2, numerical failures to exit status 3.
"""


class ShubinError(Exception):
    """Base class for all package errors."""

    code = "error"
    exit_status = 3


class ValidationError(ShubinError):
    code = "validation"
    exit_status = 2


class DegreeMismatch(ValidationError):
    code = "degree_mismatch"


class DimensionMismatch(ValidationError):
    code = "dimension_mismatch"


class InvalidExcision(ValidationError):
    code = "invalid_excision"


class InvalidSector(ValidationError):
    code = "invalid_sector"


class TruncationMismatch(ValidationError):
    code = "truncation_mismatch"


class InsufficientExpansion(ValidationError):
    code = "insufficient_expansion"


class InvalidBranch(ValidationError):
    code = "invalid_branch"


class InvalidSymbol(ValidationError):
    code = "invalid_symbol"


class NotSelfAdjoint(ValidationError):
    code = "not_self_adjoint"


class NumericalError(ShubinError):
    code = "numerical"
    exit_status = 3


class ZeroPoint(NumericalError):
    """A homogeneous component was evaluated at the origin."""

    code = "zero_point"


class NotElliptic(NumericalError):
    code = "not_elliptic"


class NotLambdaElliptic(NumericalError):
    code = "not_lambda_elliptic"


class JetExhausted(NumericalError):
    code = "jet_exhausted"


class GridResolution(NumericalError):
    code = "grid_resolution"


class ContourConvergence(NumericalError):
    code = "contour_convergence"


class IntegerOrderPole(NumericalError):
    code = "integer_order_pole"


class QuadratureConvergence(NumericalError):
    code = "quadrature_convergence"


class PolePoint(NumericalError):
    code = "pole_point"


class FitIllConditioned(NumericalError):
    code = "fit_ill_conditioned"


class SpectrumNotConverged(NumericalError):
    code = "spectrum_not_converged"


class Divergent(NumericalError):
    code = "divergent"


class UnsupportedSymbol(NumericalError):
    code = "unsupported_symbol"


class TailDivergence(NumericalError):
    code = "tail_divergence"

"""Regularized-gap error bounds for polynomial variational inequalities.

The package evaluates the regularized gap function of a polynomial
variational inequality, derives the explicit Hölder exponent its
dimensions and degrees entitle it to, and checks distance/gradient
error bounds empirically on point clouds.  ``gapbound.cli`` is the
command-line frontend and ``gapbound.service`` the HTTP one.
"""

from .boundlab import (
    BoundReport,
    BoundRow,
    SampleCloud,
    ZeroSetEstimate,
    cloud_from_points,
    estimate_zero_set,
    fit_exponent,
    sample_cloud,
    verify_error_bound,
    verify_lojasiewicz,
)
from .errors import (
    BudgetExhaustedError,
    DegenerateFitError,
    DimensionMismatchError,
    EmptySetError,
    GapboundError,
    InfeasiblePointError,
    InstanceParseError,
    SolverConvergenceError,
    UnsupportedSetError,
)
from .exponents import (
    ExponentCertificate,
    alpha_for_instance,
    exponent_denominator,
    pow_alpha,
    resolve_alpha,
)
from .feasible import FeasibleSet, MfcqReport
from .gap import (
    GapEvaluation,
    ViInstance,
    argmax_set,
    clarke_generators,
    evaluate_gap,
    gap_objective,
    gap_objective_grad_x,
    regularized_gap,
    stationarity_residual,
)
from .instances import (
    dump_instance,
    instance_from_json,
    instance_from_string,
    instance_to_json,
    instance_to_string,
    load_instance,
)
from .poly import Polynomial, PolynomialMap, affine, constant, variable
from .solver import (
    RateRow,
    RateTable,
    SolverTrace,
    correlate_rate,
    default_extragradient_step,
    extragradient,
    gap_descent,
    natural_residual,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # polynomials and sets
    "Polynomial",
    "PolynomialMap",
    "affine",
    "constant",
    "variable",
    "FeasibleSet",
    "MfcqReport",
    # gap machinery
    "ViInstance",
    "GapEvaluation",
    "gap_objective",
    "gap_objective_grad_x",
    "argmax_set",
    "regularized_gap",
    "clarke_generators",
    "stationarity_residual",
    "evaluate_gap",
    # exponents
    "ExponentCertificate",
    "exponent_denominator",
    "alpha_for_instance",
    "resolve_alpha",
    "pow_alpha",
    # solvers
    "SolverTrace",
    "RateRow",
    "RateTable",
    "natural_residual",
    "default_extragradient_step",
    "extragradient",
    "gap_descent",
    "correlate_rate",
    # bound lab
    "SampleCloud",
    "ZeroSetEstimate",
    "BoundRow",
    "BoundReport",
    "sample_cloud",
    "cloud_from_points",
    "estimate_zero_set",
    "verify_error_bound",
    "verify_lojasiewicz",
    "fit_exponent",
    # instance files
    "instance_from_json",
    "instance_to_json",
    "instance_from_string",
    "instance_to_string",
    "load_instance",
    "dump_instance",
    # errors
    "GapboundError",
    "InstanceParseError",
    "DimensionMismatchError",
    "InfeasiblePointError",
    "UnsupportedSetError",
    "EmptySetError",
    "BudgetExhaustedError",
    "DegenerateFitError",
    "SolverConvergenceError",
]

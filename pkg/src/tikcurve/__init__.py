"""Tikhonov regularization for vector fields on curves known only approximately."""

from .errors import (
    ConfigError,
    CurvesTooCloseError,
    DegenerateJacobianError,
    DomainMismatchError,
    GridMismatchError,
    GridTooSmallError,
    NonTangentError,
    RegularityLostError,
    SolverError,
    TikcurveError,
    TooFewKnotsError,
)
from .geometry import (
    ParametricCurve, circle, ellipse, frame_at, line_segment, parameter_grid,
    polygon_approximation, polyline, projection_matrices, reparametrize,
    semicircle_graph, sine_graph, surface_gradient, surface_gradient_vector,
    covariant_derivative,
)
from .spline import (
    PullbackOperator, SplineCurve, fit_spline, gamma, load_spline,
    operator_perturbation_rho, pullback, save_spline,
)
from .fields import (
    DiscreteVectorField, h1_ambient_norm, h1_ambient_seminorm, h1_split_norm,
    h1_split_seminorm, l2_inner, l2_norm, load_field, norm_report, save_field,
)
from .operators import (
    LinearOperatorDiscrete, apply_adjoint_magnetization, build_embedding_operator,
    build_magnetization_operator, build_normal_constraint_operator,
    magnetization_norm_bound, operator_norm,
)
from .solver import (
    SolveResult, TikhonovProblem, assemble_normal_equations, bregman_error,
    check_optimality, solve, solve_unregularized,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CurvesTooCloseError",
    "DegenerateJacobianError",
    "DomainMismatchError",
    "GridMismatchError",
    "GridTooSmallError",
    "NonTangentError",
    "RegularityLostError",
    "SolverError",
    "TikcurveError",
    "TooFewKnotsError",
    "ParametricCurve",
    "circle",
    "ellipse",
    "frame_at",
    "line_segment",
    "parameter_grid",
    "polygon_approximation",
    "polyline",
    "projection_matrices",
    "reparametrize",
    "semicircle_graph",
    "sine_graph",
    "surface_gradient",
    "surface_gradient_vector",
    "covariant_derivative",
    "PullbackOperator",
    "SplineCurve",
    "fit_spline",
    "gamma",
    "load_spline",
    "operator_perturbation_rho",
    "pullback",
    "save_spline",
    "DiscreteVectorField",
    "h1_ambient_norm",
    "h1_ambient_seminorm",
    "h1_split_norm",
    "h1_split_seminorm",
    "l2_inner",
    "l2_norm",
    "load_field",
    "norm_report",
    "save_field",
    "LinearOperatorDiscrete",
    "apply_adjoint_magnetization",
    "build_embedding_operator",
    "build_magnetization_operator",
    "build_normal_constraint_operator",
    "magnetization_norm_bound",
    "operator_norm",
    "SolveResult",
    "TikhonovProblem",
    "assemble_normal_equations",
    "bregman_error",
    "check_optimality",
    "solve",
    "solve_unregularized",
]

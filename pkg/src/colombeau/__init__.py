"""Colombeau generalized functions and semilinear hyperbolic mixed problems.

Regularized representatives of distributions, moderateness, invertibility and
association estimators, and a characteristics-based Picard solver for
``(d_t + Lambda d_x) U = f`` with nonlocal boundary conditions.
"""
from .mollifier import Mollifier, ScaledMollifier, build_mollifier, build_nonnegative_profile, moment, scale
from .problem import ProblemSpec, build_R, builtin_problem, load_problem, validate
from .solver import picard_solve

__all__ = [
    "Mollifier", "ScaledMollifier", "build_mollifier", "build_nonnegative_profile", "moment", "scale",
    "ProblemSpec", "build_R", "builtin_problem", "load_problem", "validate", "picard_solve",
]
__version__ = "0.1.0"

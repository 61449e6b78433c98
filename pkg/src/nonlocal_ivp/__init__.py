"""Nonlocal initial value problems for countable systems of ODEs.

Solves ``x_n' = f_n(t, x)``, ``x_n(0) = <alpha_n, x_n|[0,t0]>`` for
``n = 1, 2, ...`` after truncation to ``N`` components, checks the growth
hypotheses of the associated existence theorem, and studies how solutions
settle as ``N`` grows.
"""

from .config import build_problem, load_config, parse_config
from .core import Grid, SeminormConfig, SeminormValues, Trajectory, evaluate_seminorms, seminorm_bracket
from .errors import (BandViolation, ConfigError, DslNameError, DslSyntaxError, EvaluationError,
                     HypothesisViolation, IllConditionedWarning, NonConvergenceError, NonlocalIVPError)
from .functionals import (FunctionalFamily, FunctionalGenerator, PiecewisePolynomial, StieltjesFunctional,
                          apply, dual_norm, one_value)
from .hypotheses import (GrowthEnvelope, HypothesisReport, check_hypotheses, compute_constants, compute_G,
                         select_theta, validate_envelope_by_sampling)
from .operator import PicardSettings, SolveResult, apply_T, integrate_rhs, solve_picard
from .problem import ProblemSpec, System, make_problem
from .rhs import RhsFamily
from .shooting import integrate_ivp, solve_shooting
from .truncation import convergence_study, pad_finite, truncate

__version__ = "0.1.0"

__all__ = [
    "BandViolation", "ConfigError", "DslNameError", "DslSyntaxError", "EvaluationError",
    "FunctionalFamily", "FunctionalGenerator", "Grid", "GrowthEnvelope", "HypothesisReport",
    "HypothesisViolation", "IllConditionedWarning", "NonConvergenceError", "NonlocalIVPError",
    "PicardSettings", "PiecewisePolynomial", "ProblemSpec", "RhsFamily", "SeminormConfig",
    "SeminormValues", "SolveResult", "StieltjesFunctional", "System", "Trajectory",
    "apply", "apply_T", "build_problem", "check_hypotheses", "compute_G", "compute_constants",
    "convergence_study", "dual_norm", "evaluate_seminorms", "integrate_ivp", "integrate_rhs",
    "load_config", "make_problem", "one_value", "pad_finite", "parse_config", "seminorm_bracket",
    "select_theta", "solve_picard", "solve_shooting", "truncate", "validate_envelope_by_sampling",
]

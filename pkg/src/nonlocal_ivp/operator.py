"""Integral operator, fixed-point operator and the Picard solver."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core import Trajectory, evaluate_seminorms
from .errors import ConfigError, IllConditionedWarning, NonConvergenceError

__all__ = [
    "PicardSettings", "SolveResult",
    "integrate_rhs", "apply_T", "solve_picard", "nonlocal_residuals", "weighted_change",
]


@dataclass(frozen=True)
class PicardSettings:
    """Stopping and damping controls for :func:`solve_picard`.

    The iteration stops once ``max_p R_p(v_new - v_old) / (lam (1 + R_p(v_old)))``
    drops to ``tol``. After two consecutive residual increases the damping
    ``lam`` is halved, never below ``damping_floor``.
    """

    tol: float = 1e-12
    max_iter: int = 1000
    damping: float = 1.0
    damping_floor: float = 1.0 / 16

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigError("tol must be positive", "tol")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1", "max_iter")
        if not 0 < self.damping <= 1:
            raise ConfigError("damping must lie in (0, 1]", "damping")


@dataclass
class SolveResult:
    """Converged trajectory plus diagnostics.

    Attributes:
        method: ``"picard"`` or ``"shoot"``.
        nonlocal_residuals: ``|x_n(0) - <alpha_n, x_n|[0,t0]>|`` per component.
        seminorms: ``(P_p, Q_p, R_p)`` of the solution for each solver seminorm.
        history: residual after each iteration.
        seminorm_history: ``R_p`` of every iterate, starting with the initial guess.
        initial: description of the starting point (runs are reproducible
            from it; fixed points need not be unique).
        initial_vector: ``x(0)`` of the solution.
    """

    trajectory: Trajectory
    method: str
    iterations: int
    final_residual: float
    nonlocal_residuals: np.ndarray
    seminorms: list
    status: str = "converged"
    history: list = field(default_factory=list)
    seminorm_history: list = field(default_factory=list)
    initial: Any = "zero"
    warnings: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def initial_vector(self):
        return self.trajectory.values[0].copy()


def _rhs_values(values, spec):
    return spec.f(spec.grid.nodes, values)


def _cumulative_trapezoid(F, nodes):
    out = np.zeros_like(F)
    h = np.diff(nodes).reshape((-1,) + (1,) * (F.ndim - 1))
    np.cumsum(0.5 * h * (F[1:] + F[:-1]), axis=0, out=out[1:])
    return out


def _integrate(values, spec):
    return _cumulative_trapezoid(_rhs_values(values, spec), spec.grid.nodes)


def integrate_rhs(v, spec):
    """``R(v)(t) = int_0^t f(s, v(s)) ds`` by the cumulative composite trapezoid rule."""
    _check_shape(v, spec)
    return Trajectory(spec.grid, _integrate(v.values, spec))


def _apply_T(values, spec, factor):
    R = _integrate(values, spec)
    return R + factor * spec.apply_functionals(R)


def apply_T(v, spec):
    """Fixed-point operator: ``(1 - <alpha,1>)^{-1} <alpha, R(v)|[0,t0]> + R(v)``.

    Raises:
        HypothesisViolation: ``<alpha_n, 1> = 1`` for some ``n <= N``.

    Warns:
        IllConditionedWarning: ``|1 - <alpha_n, 1>| < 1e-8``.
    """
    _check_shape(v, spec)
    return Trajectory(spec.grid, _apply_T(v.values, spec, spec.nonlocal_factor()))


def nonlocal_residuals(x, spec):
    """``|x_n(0) - <alpha_n, x_n|[0,t0]>|`` for every component."""
    values = x.values if isinstance(x, Trajectory) else np.asarray(x)
    return np.abs(values[0] - spec.apply_functionals(values))


def weighted_change(new, old, cfg, t0, grid, damping=1.0):
    """``max_p R_p(new - old) / (damping (1 + R_p(old)))`` on raw value arrays."""
    diff = evaluate_seminorms(Trajectory(grid, new - old), cfg, t0)
    base = evaluate_seminorms(Trajectory(grid, old), cfg, t0)
    return max(d.R / (damping * (1.0 + b.R)) for d, b in zip(diff, base))


def _check_shape(v, spec):
    if v.n_components != spec.N or v.grid.size != spec.grid.size:
        raise ConfigError(f"trajectory has shape {v.values.shape}, problem needs "
                          f"({spec.grid.size}, {spec.N})")


def solve_picard(spec, settings=None, initial=None):
    """Iterate ``v <- (1 - lam) v + lam T(v)`` to a fixed point.

    Args:
        spec: the truncated problem.
        settings: :class:`PicardSettings`; defaults to undamped, ``tol=1e-12``.
        initial: starting :class:`Trajectory`; zero by default.

    Raises:
        HypothesisViolation: some ``<alpha_n, 1> = 1``.
        NonConvergenceError: ``max_iter`` reached; carries the residual history.
        EvaluationError: the right-hand side failed, with ``(t, component)``.
    """
    settings = settings or PicardSettings()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", IllConditionedWarning)
        factor = spec.nonlocal_factor()
    cfg = spec.solver_seminorms()
    grid, t0 = spec.grid, spec.t0

    if initial is None:
        v = np.zeros((grid.size, spec.N))
        initial_desc = "zero"
    else:
        _check_shape(initial, spec)
        v = np.array(initial.values)
        initial_desc = "user"

    def radii(values):
        return [s.R for s in evaluate_seminorms(Trajectory(grid, values), cfg, t0)]

    lam = settings.damping
    history = []
    seminorm_history = [radii(v)]
    rises = 0
    damping_events = []
    for k in range(1, settings.max_iter + 1):
        v_new = (1.0 - lam) * v + lam * _apply_T(v, spec, factor)
        if not np.all(np.isfinite(v_new)):
            raise NonConvergenceError(f"Picard iterate {k} is not finite", history, None)
        res = weighted_change(v_new, v, cfg, t0, grid, lam)
        history.append(res)
        seminorm_history.append(radii(v_new))
        v = v_new
        if res <= settings.tol:
            x = Trajectory(grid, v)
            return SolveResult(
                trajectory=x,
                method="picard",
                iterations=k,
                final_residual=res,
                nonlocal_residuals=nonlocal_residuals(x, spec),
                seminorms=evaluate_seminorms(x, cfg, t0),
                history=history,
                seminorm_history=seminorm_history,
                initial=initial_desc,
                warnings=[str(w.message) for w in caught],
                diagnostics={"damping": lam, "damping_events": damping_events},
            )
        rises = rises + 1 if len(history) > 1 and res > history[-2] else 0
        if rises >= 2 and lam > settings.damping_floor:
            lam = max(lam / 2.0, settings.damping_floor)
            damping_events.append((k, lam))
            rises = 0
    raise NonConvergenceError(
        f"Picard iteration did not reach tol={settings.tol:g} in {settings.max_iter} iterations "
        f"(last residual {history[-1]:.3e})",
        history, Trajectory(grid, v),
    )

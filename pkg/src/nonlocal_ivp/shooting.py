"""Shooting solver: root-finding on the initial vector of a classical IVP.

``F(c) = c - <alpha, x_c|[0,t0]>`` where ``x_c`` solves ``x' = f(t, x)``,
``x(0) = c`` by classical RK4 on the problem grid. Serves as an
independent check on the fixed-point solver.
"""

from __future__ import annotations

import warnings

import numpy as np

from .core import Trajectory, evaluate_seminorms
from .errors import ConfigError, IllConditionedWarning, NonConvergenceError
from .operator import SolveResult, nonlocal_residuals

__all__ = ["integrate_ivp", "residual", "solve_shooting", "NEWTON_MAX_N"]

NEWTON_MAX_N = 64


def _rk4(spec, C):
    """RK4 on the grid for a batch of initial vectors; returns ``(nodes, *C.shape)``."""
    C = np.asarray(C, dtype=float)
    t = spec.grid.nodes
    out = np.empty((t.size,) + C.shape)
    out[0] = x = C
    f = spec.f
    for i in range(t.size - 1):
        s, h = t[i], t[i + 1] - t[i]
        k1 = f(s, x)
        k2 = f(s + 0.5 * h, x + 0.5 * h * k1)
        k3 = f(s + 0.5 * h, x + 0.5 * h * k2)
        k4 = f(t[i + 1], x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise NonConvergenceError(f"IVP solution blew up before t={t[i + 1]:.6g}")
        out[i + 1] = x
    return out


def _check_c(c, spec):
    c = np.asarray(c, dtype=float)
    if c.shape[-1] != spec.N:
        raise ConfigError(f"initial vector has length {c.shape[-1]}, problem has N={spec.N}")
    return c


def integrate_ivp(c, spec):
    """Trajectory of ``x' = f(t, x)``, ``x(0) = c`` on ``spec.grid``."""
    c = _check_c(c, spec)
    return Trajectory(spec.grid, _rk4(spec, c))


def residual(c, spec):
    """``F(c) = c - <alpha, x_c|[0,t0]>``, componentwise."""
    c = _check_c(c, spec)
    return c - spec.apply_functionals(_rk4(spec, c))


def solve_shooting(spec, tol=1e-12, max_iter=50, initial=None):
    """Solve ``F(c) = 0``.

    For ``N <= 64`` each step is a Newton step with a forward-difference
    Jacobian (step ``sqrt(eps) (1 + |c_j|)``); all Jacobian columns are
    integrated as one batch. When the Jacobian is singular, or a Newton step
    fails to lower ``max|F|`` after backtracking, the step falls back to the
    scaled fixed-point map ``c <- c - lam F(c) / (1 - <alpha,1>)``, which
    lands on the root in one step when ``f`` does not depend on ``x``.

    Raises:
        HypothesisViolation: some ``<alpha_n, 1> = 1``.
        NonConvergenceError: ``max|F| > tol`` after ``max_iter`` steps.
    """
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", IllConditionedWarning)
        factor = spec.nonlocal_factor()
    N = spec.N
    c = np.zeros(N) if initial is None else _check_c(initial, spec).copy()
    use_newton = N <= NEWTON_MAX_N
    eps = np.sqrt(np.finfo(float).eps)
    diag = {"newton_steps": 0, "fixed_point_steps": 0, "singular_jacobian": 0,
            "newton_rejected": 0, "newton": use_newton}
    history = []

    def shoot(c):
        """Trajectory, F(c) and (for Newton) the difference Jacobian, in one batch."""
        if not use_newton:
            X = _rk4(spec, c)
            return X, c - spec.apply_functionals(X), None
        delta = eps * (1.0 + np.abs(c))
        C = np.vstack([c, c[None, :] + np.diag(delta)])
        Xb = _rk4(spec, C)
        Fb = C - spec.apply_functionals(Xb)
        J = ((Fb[1:] - Fb[0][None, :]) / delta[:, None]).T
        return Xb[:, 0, :], Fb[0], J

    X, F, J = shoot(c)
    lam = 1.0
    for k in range(max_iter + 1):
        r = float(np.max(np.abs(F)))
        history.append(r)
        if r <= tol:
            x = Trajectory(spec.grid, X)
            cfg = spec.solver_seminorms()
            return SolveResult(
                trajectory=x,
                method="shoot",
                iterations=k,
                final_residual=r,
                nonlocal_residuals=nonlocal_residuals(x, spec),
                seminorms=evaluate_seminorms(x, cfg, spec.t0),
                history=history,
                initial="zero" if initial is None else "user",
                warnings=[str(w.message) for w in caught],
                diagnostics=diag,
            )
        if k == max_iter:
            break
        accepted = False
        if J is not None:
            try:
                cond = np.linalg.cond(J)
                if not np.isfinite(cond) or cond > 1e14:
                    raise np.linalg.LinAlgError("ill-conditioned Jacobian")
                step = np.linalg.solve(J, F)
            except np.linalg.LinAlgError:
                diag["singular_jacobian"] += 1
            else:
                t_step = 1.0
                for _ in range(6):
                    c_try = c - t_step * step
                    trial = shoot(c_try)
                    if np.max(np.abs(trial[1])) < r:
                        c, (X, F, J) = c_try, trial
                        accepted = True
                        diag["newton_steps"] += 1
                        break
                    t_step *= 0.5
                if not accepted:
                    diag["newton_rejected"] += 1
        if not accepted:
            while True:
                c_try = c - lam * factor * F
                trial = shoot(c_try)
                if np.max(np.abs(trial[1])) < r or lam <= 1.0 / 64:
                    break
                lam *= 0.5
            c, (X, F, J) = c_try, trial
            diag["fixed_point_steps"] += 1
    raise NonConvergenceError(
        f"shooting did not reach tol={tol:g} in {max_iter} steps (last |F| = {history[-1]:.3e})",
        history, c,
    )

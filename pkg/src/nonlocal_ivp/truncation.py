"""Truncation of infinite systems, finite-system padding and convergence studies."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .core import Grid, Trajectory, evaluate_seminorms
from .dsl import CouplingBand
from .errors import ConfigError, EvaluationError, HypothesisViolation, NonConvergenceError
from .functionals import FunctionalFamily, one_value
from .operator import PicardSettings, solve_picard
from .problem import System
from .rhs import RhsFamily
from .shooting import solve_shooting

__all__ = ["CouplingBand", "truncate", "pad_finite", "convergence_study", "StudyRow", "StudyTable"]


def truncate(spec, N, closure="zero"):
    """The first ``N`` equations, out-of-range states closed by ``closure``.

    ``zero`` reads ``x_m = 0`` and ``freeze`` reads ``x_m = x_N`` for ``m > N``.

    Raises:
        BandViolation: an equation reads an absolute index beyond ``N``.
    """
    return spec.with_truncation(N, closure)


def pad_finite(g, eta):
    """Embed an ``N``-equation system into an infinite one.

    Component ``n`` of the result is ``(g_min(n,N), eta_min(n,N))``, the
    repeated equation keeping the arguments ``x_1..x_N`` of ``g_N``; the
    default seminorm indices become ``n_p = N + p - 1``.

    Args:
        g: a finite :class:`RhsFamily` or a list of expressions.
        eta: the ``N`` functionals.

    Raises:
        HypothesisViolation: ``<eta_n, 1> = 1`` for some ``n``.
    """
    if not isinstance(g, RhsFamily):
        g = RhsFamily(components=g)
    N = g.finite_length
    if N is None:
        raise ConfigError("pad_finite needs a finite system", "rhs")
    eta = list(eta)
    if len(eta) != N:
        raise ConfigError(f"{N} equations but {len(eta)} functionals", "functionals")
    for n, e in enumerate(eta, start=1):
        if one_value(e) == 1.0:
            raise HypothesisViolation(f"<eta_{n}, 1> = 1: the condition does not fix x_{n}(0)", component=n)
    rhs = RhsFamily(components=g.components, generator=g.components[-1],
                    generator_index=N, params=g.params)
    funcs = FunctionalFamily(eta[0].t0, eta, rule=eta[-1])
    return System(rhs, funcs, n_offset=N - 1)


@dataclass
class StudyRow:
    N: int
    d: float | None = None
    iterations: int | None = None
    status: str = "converged"
    message: str = ""
    non_monotone: bool = False


@dataclass
class StudyTable:
    rows: list = field(default_factory=list)
    results: dict = field(default_factory=dict)

    @property
    def differences(self):
        return [r.d for r in self.rows if r.d is not None]

    @property
    def nonincreasing(self):
        d = self.differences
        return all(b <= a for a, b in zip(d, d[1:]))

    @property
    def all_converged(self):
        return all(r.status == "converged" for r in self.rows)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "d", "iterations", "status"])
        for r in self.rows:
            w.writerow([r.N, "" if r.d is None else f"{r.d:.17g}",
                        "" if r.iterations is None else r.iterations, r.status])
        return buf.getvalue()


def _difference(a, b, spec, n_small):
    """``max_p R_p`` of ``a - b`` over shared components and shared nodes."""
    cfg = spec.seminorm_config.restrict(n_small)
    ga, gb = a.grid, b.grid
    if ga.size == gb.size and np.array_equal(ga.nodes, gb.nodes):
        grid, va, vb = ga, a.values, b.values
    else:
        common, ia, ib = np.intersect1d(ga.nodes, gb.nodes, return_indices=True)
        grid = Grid(ga.t_max, ga.h, common)
        va, vb = a.values[ia], b.values[ib]
    diff = Trajectory(grid, va[:, :n_small] - vb[:, :n_small])
    return max(s.R for s in evaluate_seminorms(diff, cfg, spec.t0))


def convergence_study(spec, N_list, solver="picard", tol=1e-12, max_iter=1000):
    """Solve at each truncation level and compare neighbours.

    Row ``i`` holds ``d(N_i)``: the largest seminorm ``R_p`` (over the
    configured ``p`` with ``n_p <= N_i``) of the difference between the
    ``N_i`` and ``N_{i+1}`` solutions on their common components. A solve
    failure is recorded in its row and the study continues.

    Args:
        solver: ``"picard"``, ``"shoot"`` or a callable ``spec -> SolveResult``.
    """
    N_list = [int(n) for n in N_list]
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ConfigError("truncation levels must be strictly increasing", "truncations")
    if callable(solver):
        run = solver
    elif solver == "picard":
        def run(s):
            return solve_picard(s, PicardSettings(tol=tol, max_iter=max_iter))
    elif solver in ("shoot", "shooting"):
        def run(s):
            return solve_shooting(s, tol=tol, max_iter=max_iter)
    else:
        raise ConfigError(f"unknown solver {solver!r}", "method")

    table = StudyTable()
    for N in N_list:
        row = StudyRow(N)
        try:
            res = run(truncate(spec, N, spec.closure))
        except NonConvergenceError as exc:
            row.status, row.message = "non-convergence", str(exc)
        except EvaluationError as exc:
            row.status, row.message = "evaluation-error", str(exc)
        except HypothesisViolation as exc:
            row.status, row.message = "hypothesis-violation", str(exc)
        else:
            row.iterations = res.iterations
            table.results[N] = res
        table.rows.append(row)

    for row, nxt in zip(table.rows, table.rows[1:]):
        if row.N in table.results and nxt.N in table.results:
            row.d = _difference(table.results[row.N].trajectory, table.results[nxt.N].trajectory,
                                spec, row.N)
    prev = None
    for row in table.rows:
        if row.d is None:
            continue
        if prev is not None and row.d > prev:
            row.non_monotone = True
        prev = row.d
    return table

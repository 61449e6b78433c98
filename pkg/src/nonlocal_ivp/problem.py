"""Problem specification: system, discretization, truncation and seminorms."""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import Grid, SeminormConfig
from .errors import ConfigError, HypothesisViolation, IllConditionedWarning
from .functionals import FunctionalFamily, one_value, quadrature_weights
from .rhs import CLOSURES, RhsFamily

__all__ = ["System", "ProblemSpec", "make_problem", "ILL_CONDITIONED"]

ILL_CONDITIONED = 1e-8


@dataclass(frozen=True, eq=False)
class System:
    """An infinite (or padded finite) family of equations and conditions.

    ``n_offset`` sets the default seminorm indices ``n_p = p + n_offset``.
    """

    rhs: RhsFamily
    functionals: FunctionalFamily
    n_offset: int = 0

    @property
    def t0(self):
        return self.functionals.t0

    def nodes_needed(self, n_max):
        """Abscissae and density breakpoints of ``alpha_1..alpha_{n_max}``."""
        out = {self.t0}
        limit = n_max if self.functionals.finite_length is None else min(n_max, self.functionals.finite_length)
        for n in range(1, limit + 1):
            a = self.functionals[n]
            out.update(a.abscissae)
            out.update(s for s in a.density.breakpoints if 0.0 <= s <= self.t0)
        return out


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """A truncated problem ready for the solvers and the hypothesis checker."""

    t0: float
    grid: Grid
    system: System
    truncation: int
    seminorm_config: SeminormConfig
    closure: str = "zero"
    envelopes: object = None
    name: str = ""

    def __post_init__(self):
        if not 0 < self.t0 < self.grid.t_max:
            raise ConfigError(f"need 0 < t0 < t_max, got t0={self.t0}, t_max={self.grid.t_max}", "t0")
        if abs(self.system.t0 - self.t0) > 1e-12 * self.t0:
            raise ConfigError("functionals are defined on a different [0, t0]", "functionals")
        if self.closure not in CLOSURES:
            raise ConfigError(f"closure must be one of {CLOSURES}", "truncation.closure")
        self.grid.index_of(self.t0)
        self.system.rhs.check_truncation(self.truncation)
        fl = self.system.functionals.finite_length
        if fl is not None and fl < self.truncation:
            raise ConfigError(f"{fl} functionals given for {self.truncation} components", "functionals")
        for t in self.system.nodes_needed(self.truncation):
            if not self.grid.has_node(t):
                raise ConfigError(f"abscissa {t!r} is not a grid node", "grid")
        self.seminorm_config.validate(self.t0, self.grid.t_max)
        for t in self.seminorm_config.t_seq:
            self.grid.index_of(t)

    @property
    def N(self):
        return self.truncation

    @property
    def rhs(self):
        return self.system.rhs

    def alpha(self, n):
        return self.system.functionals[n]

    def f(self, t, X):
        return self.system.rhs.evaluate(t, X, self.closure)

    @cached_property
    def i0(self):
        return self.grid.index_of(self.t0)

    @cached_property
    def weights(self):
        """Row ``n-1``: quadrature weights of ``alpha_n`` on nodes ``0..i0``."""
        return np.array([quadrature_weights(self.alpha(n), self.grid.nodes) for n in range(1, self.N + 1)])

    @cached_property
    def one_values(self):
        return np.array([one_value(self.alpha(n)) for n in range(1, self.N + 1)])

    def nonlocal_factor(self):
        """``(1 - <alpha_n, 1>)^{-1}`` for ``n = 1..N``.

        Raises:
            HypothesisViolation: some ``<alpha_n, 1>`` equals 1.
        """
        gap = 1.0 - self.one_values
        zero = np.flatnonzero(gap == 0.0)
        if zero.size:
            n = int(zero[0]) + 1
            raise HypothesisViolation(f"<alpha_{n}, 1> = 1: the nonlocal condition does not fix x_{n}(0)",
                                      component=n)
        small = np.flatnonzero(np.abs(gap) < ILL_CONDITIONED)
        if small.size:
            warnings.warn(f"|1 - <alpha_n, 1>| < {ILL_CONDITIONED:g} for n = {list(small + 1)}",
                          IllConditionedWarning, stacklevel=3)
        return 1.0 / gap

    def apply_functionals(self, V):
        """``<alpha_n, V[:, n-1]|[0,t0]>`` for every component.

        ``V`` has shape ``(nodes, ..., N)``; each component uses a 1-D dot
        product so that results do not depend on how many components exist.
        """
        V = np.asarray(V)
        W = self.weights
        seg = V[: self.i0 + 1]
        out = np.empty(V.shape[1:])
        for k in range(self.N):
            out[..., k] = np.tensordot(W[k], seg[..., k], axes=(0, 0))
        return out

    def solver_seminorms(self):
        return self.seminorm_config.restrict(self.N)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def with_truncation(self, N, closure=None):
        """Same problem at a new truncation level, grid re-snapped if needed."""
        closure = self.closure if closure is None else closure
        extra = set(self.system.nodes_needed(N)) | set(self.seminorm_config.t_seq)
        grid = self.grid
        if not all(grid.has_node(t) for t in extra):
            grid = Grid.build(grid.t_max, grid.h, extra)
        return dataclasses.replace(self, grid=grid, truncation=N, closure=closure)


def make_problem(system, t_max, h, N, *, closure="zero", envelopes=None, seminorms=None,
                 P=3, theta="auto", name=""):
    """Discretize ``system`` on ``[0, t_max]`` with step ``h`` at truncation ``N``.

    Args:
        seminorms: an explicit :class:`SeminormConfig`; by default
            ``n_p = p + system.n_offset`` and ``t_p = t0 + p (t_max - t0) / P``.
        theta: ``"auto"`` picks each ``theta_p`` from the hypothesis checker
            when the envelope inequality holds at ``p`` (1.0 otherwise); a
            number or sequence is used as given. Ignored when ``seminorms``
            is supplied.
    """
    t0 = system.t0
    if not 0 < t0 < t_max:
        raise ConfigError(f"need 0 < t0 < t_max, got t0={t0}, t_max={t_max}", "t0")
    auto = seminorms is None and isinstance(theta, str)
    if seminorms is None:
        seminorms = SeminormConfig.default(t0, t_max, P, system.n_offset)
        if not auto:
            th = np.broadcast_to(np.asarray(theta, dtype=float), (seminorms.P,))
            seminorms = seminorms.with_theta(tuple(th))
    extra = system.nodes_needed(max(N, max(seminorms.n_seq))) | set(seminorms.t_seq)
    grid = Grid.build(t_max, h, extra)
    spec = ProblemSpec(t0, grid, system, N, seminorms, closure, envelopes, name)
    if auto and envelopes is not None:
        from .hypotheses import auto_theta

        spec = spec.replace(seminorm_config=seminorms.with_theta(auto_theta(spec)))
    return spec

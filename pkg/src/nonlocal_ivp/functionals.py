"""Continuous linear functionals on C[0, t0] in Stieltjes form.

A functional acts as ``<alpha, v> = sum_k eta_k v(t_k) + int_0^t0 v(s) w(s) ds``
with finitely many point masses and a piecewise-polynomial density ``w``.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.polynomial import Polynomial

from . import dsl
from .errors import ConfigError

__all__ = [
    "PiecewisePolynomial", "StieltjesFunctional", "FunctionalGenerator", "FunctionalFamily",
    "apply", "one_value", "dual_norm", "quadrature_weights",
]


@dataclass(frozen=True)
class PiecewisePolynomial:
    """Pieces ``(a, b, coeffs)``; on ``[a, b]`` the value is ``sum_j coeffs[j] s**j``.

    Pieces must not overlap. Outside every piece the function is zero.
    """

    pieces: tuple = ()

    def __post_init__(self):
        pieces = []
        for a, b, coeffs in self.pieces:
            a, b = float(a), float(b)
            coeffs = tuple(float(c) for c in coeffs) or (0.0,)
            if not (np.isfinite(a) and np.isfinite(b) and a < b):
                raise ConfigError(f"density piece [{a}, {b}] is empty or not finite")
            if not all(np.isfinite(coeffs)):
                raise ConfigError("density coefficients must be finite")
            pieces.append((a, b, coeffs))
        pieces.sort()
        for (_, b0, _), (a1, _, _) in zip(pieces, pieces[1:]):
            if a1 < b0:
                raise ConfigError("density pieces overlap")
        object.__setattr__(self, "pieces", tuple(pieces))

    @property
    def breakpoints(self):
        return sorted({s for a, b, _ in self.pieces for s in (a, b)})

    def is_zero(self):
        return all(not any(c) for _, _, c in self.pieces)

    def piece_at(self, s):
        """Index of the piece whose closed interval contains ``s``, else ``None``."""
        for i, (a, b, _) in enumerate(self.pieces):
            if a <= s <= b:
                return i
        return None

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        # later pieces win at shared breakpoints: [a, b) convention except the last
        for a, b, coeffs in self.pieces:
            inside = (s >= a) & (s <= b)
            out = np.where(inside, np.polynomial.polynomial.polyval(s, coeffs), out)
        return out[()]

    def eval_piece(self, i, s):
        return np.polynomial.polynomial.polyval(s, self.pieces[i][2])

    def integral(self, lo=-np.inf, hi=np.inf):
        total = 0.0
        for a, b, coeffs in self.pieces:
            a, b = max(a, lo), min(b, hi)
            if a < b:
                anti = Polynomial(coeffs).integ()
                total += anti(b) - anti(a)
        return float(total)

    def abs_integral(self, lo=-np.inf, hi=np.inf):
        """``int |w|``, exact: each piece is split at its real roots."""
        total = 0.0
        for a, b, coeffs in self.pieces:
            a, b = max(a, lo), min(b, hi)
            if not a < b:
                continue
            poly = Polynomial(coeffs).trim()
            anti = poly.integ()
            cuts = [a, b]
            if poly.degree() >= 1:
                for r in poly.roots():
                    if abs(r.imag) <= 1e-12 * max(1.0, abs(r.real)) and a < r.real < b:
                        cuts.append(float(r.real))
            cuts.sort()
            for lo_, hi_ in zip(cuts, cuts[1:]):
                total += abs(anti(hi_) - anti(lo_))
        return float(total)


@dataclass(frozen=True)
class StieltjesFunctional:
    """Point masses ``(t_k, eta_k)`` plus a density on ``[0, t0]``."""

    t0: float
    point_masses: tuple = ()
    density: PiecewisePolynomial = field(default_factory=PiecewisePolynomial)

    def __post_init__(self):
        t0 = float(self.t0)
        if not (np.isfinite(t0) and t0 > 0):
            raise ConfigError("t0 must be positive")
        masses = tuple((float(t), float(w)) for t, w in self.point_masses)
        for t, w in masses:
            if not (np.isfinite(t) and np.isfinite(w)):
                raise ConfigError("point masses must be finite")
            if not 0.0 <= t <= t0:
                raise ConfigError(f"point-mass abscissa {t} outside [0, {t0}]")
        density = self.density
        if not isinstance(density, PiecewisePolynomial):
            density = PiecewisePolynomial(density)
        for a, b, _ in density.pieces:
            if a < 0.0 or b > t0 * (1 + 1e-12):
                raise ConfigError(f"density piece [{a}, {b}] leaves [0, {t0}]")
        object.__setattr__(self, "t0", t0)
        object.__setattr__(self, "point_masses", masses)
        object.__setattr__(self, "density", density)

    @classmethod
    def mass(cls, t, weight, t0):
        return cls(t0, ((t, weight),))

    @classmethod
    def constant_density(cls, value, t0):
        return cls(t0, (), PiecewisePolynomial(((0.0, t0, (value,)),)))

    @property
    def abscissae(self):
        return tuple(t for t, _ in self.point_masses)

    def to_dict(self):
        return {
            "point_masses": [{"t": t, "w": w} for t, w in self.point_masses],
            "density": {"pieces": [{"from": a, "to": b, "coeffs": list(c)}
                                   for a, b, c in self.density.pieces]},
        }


def quadrature_weights(alpha, nodes):
    """Weights ``q`` with ``apply(alpha, v) == q @ v[:len(q)]``.

    ``nodes`` must contain ``t0`` and every point-mass abscissa; the
    density part uses the composite trapezoid rule on ``[0, t0]``, with the
    density taken from the piece that contains each interval.
    """
    nodes = np.asarray(nodes, dtype=float)
    tol = 1e-9 * (nodes[-1] - nodes[0]) / max(nodes.size - 1, 1)

    def locate(t):
        i = int(np.argmin(np.abs(nodes - t)))
        if abs(nodes[i] - t) > tol:
            raise ConfigError(f"abscissa {t!r} is not a grid node")
        return i

    i0 = locate(alpha.t0)
    q = np.zeros(i0 + 1)
    for t, w in alpha.point_masses:
        q[locate(t)] += w
    dens = alpha.density
    if dens.pieces and not dens.is_zero():
        s = nodes[: i0 + 1]
        h = np.diff(s)
        mid = 0.5 * (s[1:] + s[:-1])
        left = np.zeros(i0)
        right = np.zeros(i0)
        for k, (a, b, _) in enumerate(dens.pieces):
            inside = (mid >= a) & (mid <= b)
            if np.any(inside):
                left[inside] = dens.eval_piece(k, s[:-1][inside])
                right[inside] = dens.eval_piece(k, s[1:][inside])
        q[:-1] += 0.5 * h * left
        q[1:] += 0.5 * h * right
    return q


def apply(alpha, nodes, v):
    """``<alpha, v>`` for ``v`` sampled on ``nodes``; trailing axes are batched."""
    q = quadrature_weights(alpha, nodes)
    v = np.asarray(v, dtype=float)
    return np.tensordot(q, v[: q.size], axes=(0, 0))[()]


def one_value(alpha):
    """``<alpha, 1>``, exact."""
    return float(sum(w for _, w in alpha.point_masses) + alpha.density.integral(0.0, alpha.t0))


def dual_norm(alpha):
    """Norm of ``alpha`` in the dual of C[0, t0] (total variation), exact."""
    return float(sum(abs(w) for _, w in alpha.point_masses) + alpha.density.abs_integral(0.0, alpha.t0))


@dataclass(frozen=True)
class FunctionalGenerator:
    """A functional whose data are expressions in ``n`` (and ``t0`` and params).

    Attributes:
        point_masses: tuple of ``(t_expr, weight_expr)``.
        pieces: tuple of ``(from_expr, to_expr, (coeff_expr, ...))``.
        params: bindings available to the expressions.
    """

    point_masses: tuple = ()
    pieces: tuple = ()
    params: Mapping[str, Any] = field(default_factory=dict)

    def __call__(self, n, t0):
        env = dsl.Env({"n": n, "t0": t0}, self.params)

        def ev(e):
            return float(dsl.evaluate(e, env))

        return StieltjesFunctional(
            t0,
            tuple((ev(t), ev(w)) for t, w in self.point_masses),
            PiecewisePolynomial(tuple((ev(a), ev(b), tuple(ev(c) for c in cs))
                                      for a, b, cs in self.pieces)),
        )


class FunctionalFamily:
    """``alpha_n`` for every ``n >= 1``: an explicit prefix plus a rule for the rest.

    ``rule`` may be ``None`` (finite family), a fixed
    :class:`StieltjesFunctional` repeated for every later index, or a
    callable ``(n, t0) -> StieltjesFunctional`` such as
    :class:`FunctionalGenerator`.
    """

    def __init__(self, t0, explicit=(), rule=None):
        self.t0 = float(t0)
        self.explicit = tuple(explicit)
        for a in self.explicit:
            if abs(a.t0 - self.t0) > 1e-12 * self.t0:
                raise ConfigError("every functional must live on [0, t0]")
        self.rule = rule
        self._cache = {}

    @property
    def finite_length(self):
        """Number of members of a finite family, ``None`` when infinite."""
        return len(self.explicit) if self.rule is None else None

    def __getitem__(self, n):
        if n < 1:
            raise IndexError("functional indices start at 1")
        if n <= len(self.explicit):
            return self.explicit[n - 1]
        if self.rule is None:
            raise IndexError(f"no functional alpha_{n}: family has {len(self.explicit)} members")
        if isinstance(self.rule, StieltjesFunctional):
            return self.rule
        if n not in self._cache:
            self._cache[n] = self.rule(n, self.t0)
        return self._cache[n]

    def first(self, n):
        return [self[i] for i in range(1, n + 1)]

"""Grids, trajectories and the sequence-space seminorms."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigError

__all__ = [
    "Grid", "Trajectory", "SeminormConfig", "SeminormValues",
    "seminorm_bracket", "evaluate_seminorms",
]

# Two abscissae closer than this fraction of h are the same node.
SNAP_FRACTION = 1e-9


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform lattice of step ``h`` on ``[0, t_max]`` with snapped extra nodes.

    Use :meth:`build` rather than the constructor; it inserts ``t0``, the
    point-mass abscissae and the seminorm times as exact nodes.
    """

    t_max: float
    h: float
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ConfigError("grid needs at least two nodes")
        if nodes[0] != 0.0 or nodes[-1] != self.t_max:
            raise ConfigError("grid must start at 0 and end at t_max")
        if np.any(np.diff(nodes) <= 0):
            raise ConfigError("grid nodes must be strictly increasing")
        object.__setattr__(self, "nodes", _frozen(nodes))

    @classmethod
    def build(cls, t_max, h, extra=()):
        t_max, h = float(t_max), float(h)
        if not (np.isfinite(t_max) and t_max > 0):
            raise ConfigError("t_max must be positive and finite", "t_max")
        if not (np.isfinite(h) and h > 0):
            raise ConfigError("h must be positive and finite", "grid.h")
        count = int(np.floor(t_max / h * (1 + 1e-12)))
        lattice = np.arange(count + 1) * h
        tol = SNAP_FRACTION * h
        lattice = lattice[lattice < t_max - tol]
        nodes = list(lattice) + [t_max]
        for e in sorted({float(e) for e in extra}):
            if not 0.0 <= e <= t_max:
                raise ConfigError(f"node {e!r} lies outside [0, {t_max}]")
            i = int(np.argmin(np.abs(np.asarray(nodes) - e)))
            if abs(nodes[i] - e) <= tol:
                if i not in (0, len(nodes) - 1):
                    nodes[i] = e
            else:
                nodes.insert(int(np.searchsorted(nodes, e)), e)
        return cls(t_max, h, np.asarray(nodes))

    @property
    def size(self):
        return self.nodes.size

    def index_of(self, t):
        """Index of the node equal to ``t`` (within the snapping tolerance)."""
        i = int(np.searchsorted(self.nodes, t))
        for j in (i - 1, i):
            if 0 <= j < self.size and abs(self.nodes[j] - t) <= SNAP_FRACTION * self.h:
                return j
        raise ConfigError(f"t={t!r} is not a grid node")

    def has_node(self, t):
        try:
            self.index_of(t)
        except ConfigError:
            return False
        return True


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Grid-sampled vector function: ``values[i, n-1] = x_n(s_i)``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] != self.grid.size or values.shape[1] < 1:
            raise ConfigError(f"values must have shape ({self.grid.size}, N), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ConfigError("trajectory values must be finite")
        object.__setattr__(self, "values", _frozen(values))

    @property
    def n_components(self):
        return self.values.shape[1]

    @property
    def t(self):
        return self.grid.nodes

    def component(self, n):
        return self.values[:, n - 1]

    def first(self, n):
        """The trajectory of components ``1..n``."""
        if not 1 <= n <= self.n_components:
            raise ConfigError(f"cannot keep {n} of {self.n_components} components")
        return Trajectory(self.grid, self.values[:, :n])

    def __sub__(self, other):
        if other.grid is not self.grid and not np.array_equal(other.grid.nodes, self.grid.nodes):
            raise ConfigError("trajectories live on different grids")
        return Trajectory(self.grid, self.values - other.values)

    @classmethod
    def zeros(cls, grid, n_components):
        return cls(grid, np.zeros((grid.size, n_components)))


@dataclass(frozen=True)
class SeminormConfig:
    """Index sequence ``n_p``, time sequence ``t_p`` and weights ``theta_p``."""

    n_seq: tuple
    t_seq: tuple
    theta: tuple

    def __post_init__(self):
        n_seq = tuple(int(n) for n in self.n_seq)
        t_seq = tuple(float(t) for t in self.t_seq)
        theta = tuple(float(th) for th in self.theta)
        if not n_seq or not len(n_seq) == len(t_seq) == len(theta):
            raise ConfigError("n_seq, t_seq and theta must be non-empty and of equal length", "seminorms")
        if n_seq[0] < 1 or any(b <= a for a, b in zip(n_seq, n_seq[1:])):
            raise ConfigError("n_seq must be strictly increasing positive integers", "seminorms.n_seq")
        if any(b <= a for a, b in zip(t_seq, t_seq[1:])):
            raise ConfigError("t_seq must be strictly increasing", "seminorms.t_seq")
        if not all(np.isfinite(th) and th > 0 for th in theta):
            raise ConfigError("theta must be positive", "seminorms.theta")
        object.__setattr__(self, "n_seq", n_seq)
        object.__setattr__(self, "t_seq", t_seq)
        object.__setattr__(self, "theta", theta)

    @property
    def P(self):
        return len(self.n_seq)

    def with_theta(self, theta):
        return SeminormConfig(self.n_seq, self.t_seq, tuple(theta))

    def restrict(self, n_max):
        """Drop the indices ``p`` whose ``n_p`` exceeds ``n_max``."""
        keep = [i for i, n in enumerate(self.n_seq) if n <= n_max]
        if not keep:
            raise ConfigError(f"no seminorm index n_p <= {n_max}", "seminorms.n_seq")
        return SeminormConfig(
            tuple(self.n_seq[i] for i in keep),
            tuple(self.t_seq[i] for i in keep),
            tuple(self.theta[i] for i in keep),
        )

    def validate(self, t0, t_max):
        if self.t_seq[0] <= t0:
            raise ConfigError(f"t_1 must exceed t0={t0}", "seminorms.t_seq")
        if self.t_seq[-1] > t_max * (1 + 1e-12):
            raise ConfigError(f"t_P must not exceed t_max={t_max}", "seminorms.t_seq")

    @classmethod
    def default(cls, t0, t_max, P, n_offset=0, theta=1.0):
        """``n_p = p + n_offset`` and equally spaced ``t_p`` ending at ``t_max``."""
        ps = range(1, P + 1)
        return cls(
            tuple(p + n_offset for p in ps),
            tuple(t_max if p == P else t0 + p * (t_max - t0) / P for p in ps),
            (theta,) * P,
        )


class SeminormValues(NamedTuple):
    P: float
    Q: float
    R: float


def seminorm_bracket(x, n):
    """``[x]_n``: the largest ``|x_i|`` over ``i = 1..n``."""
    x = np.asarray(x, dtype=float)
    if not 1 <= n <= x.shape[-1]:
        raise IndexError(f"n={n} outside 1..{x.shape[-1]}")
    return np.max(np.abs(x[..., :n]), axis=-1)[()]


def evaluate_seminorms(x, cfg, t0):
    """``(P_p, Q_p, R_p)`` of trajectory ``x`` for every ``p`` of ``cfg``.

    Maxima run over grid nodes: ``P_p`` over ``[0, t0]``, ``Q_p`` over
    ``[t0, t_p]`` with weight ``exp(-theta_p (t - t0))``.
    """
    if max(cfg.n_seq) > x.n_components:
        raise ConfigError(f"n_p={max(cfg.n_seq)} exceeds the {x.n_components} trajectory components",
                          "seminorms.n_seq")
    grid = x.grid
    i0 = grid.index_of(t0)
    t = grid.nodes
    absx = np.abs(x.values)
    running = np.maximum.accumulate(absx, axis=1)  # running[:, n-1] = [x(t)]_n
    out = []
    for n_p, t_p, theta in zip(cfg.n_seq, cfg.t_seq, cfg.theta):
        ip = grid.index_of(t_p)
        br = running[:, n_p - 1]
        P = float(np.max(br[: i0 + 1]))
        Q = float(np.max(np.exp(-theta * (t[i0: ip + 1] - t0)) * br[i0: ip + 1]))
        out.append(SeminormValues(P, Q, max(P, Q)))
    return out

"""Right-hand-side families ``f_n(t, x)`` built from expression trees."""

from __future__ import annotations

import numpy as np

from . import dsl
from .errors import BandViolation, ConfigError, EvaluationError

__all__ = ["RhsFamily", "CLOSURES"]

CLOSURES = ("zero", "freeze")


class _StateReader:
    """1-based state access over the last axis of ``X`` with a closure rule.

    Indices above ``N`` read 0 (``zero``) or ``x_N`` (``freeze``); indices
    below 1 always read 0. ``relative`` serves ``x[n+offset]`` for a whole
    block of components with cached gather indices.
    """

    def __init__(self, X, closure, cache):
        self.X = X
        self.N = X.shape[-1]
        self.closure = closure
        self.cache = cache

    def _plan(self, idx):
        N = self.N
        src = np.clip(idx, 1, N) - 1
        if self.closure == "zero":
            valid = (idx >= 1) & (idx <= N)
        else:
            valid = idx >= 1
        return src, None if valid.all() else valid.astype(float)

    def __call__(self, index):
        X = self.X
        idx = np.asarray(index)
        if idx.ndim == 0:
            i = int(idx)
            if 1 <= i <= self.N:
                return X[..., i - 1]
            if i > self.N and self.closure == "freeze":
                return X[..., self.N - 1]
            return np.zeros(X.shape[:-1])
        src, mask = self._plan(idx)
        vals = X[..., src]
        return vals if mask is None else vals * mask

    def relative(self, n, offset):
        if not isinstance(n, np.ndarray):
            return self(n + offset)
        key = (self.N, self.closure, int(n[0]), n.size, offset)
        plan = self.cache.get(key)
        if plan is None:
            plan = self.cache[key] = self._plan(n + offset)
        src, mask = plan
        vals = self.X[..., src]
        return vals if mask is None else vals * mask


class RhsFamily:
    """``f_n`` for ``n >= 1``: explicit expressions, then a generator.

    Component ``i <= len(components)`` evaluates ``components[i-1]`` with
    ``n = i``. Later components evaluate ``generator`` with ``n`` equal to
    the component index, or with ``n = generator_index`` when that is set
    (the repeated last equation of a padded finite system).

    Args:
        components: explicit expressions (strings or trees).
        generator: expression for every later component, or ``None`` for a
            finite system.
        generator_index: fixed binding of ``n`` inside the generator.
        params: parameter bindings shared by every expression.
    """

    def __init__(self, components=(), generator=None, generator_index=None, params=None):
        self.params = dict(params or {})
        self.components = tuple(dsl.coerce(c) for c in components)
        self.generator = None if generator is None else dsl.coerce(generator)
        self.generator_index = generator_index
        if not self.components and self.generator is None:
            raise ConfigError("a right-hand side needs at least one expression", "rhs")
        exprs = list(self.components) + ([self.generator] if self.generator is not None else [])
        band = dsl.CouplingBand()
        for e in exprs:
            band = band.merge(dsl.band_of(e))
        self.band = band
        self.absolute_reach = max((i for e in exprs for i in dsl.absolute_indices(e)), default=0)
        self._plans = {}

    @classmethod
    def from_source(cls, source, params=None):
        """A single string is an infinite generator; a list is a finite system."""
        params = {k: dsl.as_param(v) for k, v in (params or {}).items()}
        if isinstance(source, str):
            return cls(generator=source, params=params)
        return cls(components=source, params=params)

    @property
    def finite_length(self):
        return len(self.components) if self.generator is None else None

    def component(self, n):
        """``(expr, n binding)`` of component ``n``."""
        if n <= len(self.components):
            return self.components[n - 1], n
        if self.generator is None:
            raise IndexError(f"finite system has no component {n}")
        return self.generator, (n if self.generator_index is None else self.generator_index)

    def minimal_truncation(self):
        """Smallest admissible truncation level."""
        return max(1, self.absolute_reach)

    def check_truncation(self, N):
        if N < 1:
            raise ConfigError("truncation N must be >= 1", "truncation.N")
        if self.finite_length is not None and N > self.finite_length:
            raise BandViolation(f"finite system has {self.finite_length} equations, cannot truncate at {N}")
        if self.absolute_reach > N:
            raise BandViolation(f"an equation reads x[{self.absolute_reach}], beyond truncation N={N}")

    def evaluate(self, t, X, closure="zero"):
        """``f(t, X)`` for the first ``N = X.shape[-1]`` components.

        ``t`` must broadcast against ``X.shape[:-1]``; leading axes of ``X``
        are independent evaluation points.

        Raises:
            EvaluationError: carrying ``t`` and ``component`` of the first
                non-finite entry.
        """
        if closure not in CLOSURES:
            raise ConfigError(f"closure must be one of {CLOSURES}", "truncation.closure")
        X = np.asarray(X, dtype=float)
        N = X.shape[-1]
        self.check_truncation(N)
        lead = X.shape[:-1]
        t = np.asarray(t, dtype=float)
        read = _StateReader(X, closure, self._plans)
        out = np.empty(X.shape)
        n_explicit = min(len(self.components), N)
        for i in range(1, n_explicit + 1):
            env = dsl.Env({"t": t, "n": i}, self.params, read)
            try:
                val = dsl.evaluate(self.components[i - 1], env)
            except EvaluationError as exc:
                raise self._locate(exc, t, lead, lambda idx: (i, idx)) from None
            out[..., i - 1] = np.broadcast_to(val, lead)
        if N > n_explicit:
            start = n_explicit + 1
            if self.generator_index is not None:
                env = dsl.Env({"t": t, "n": self.generator_index}, self.params, read)
                try:
                    val = dsl.evaluate(self.generator, env)
                except EvaluationError as exc:
                    raise self._locate(exc, t, lead, lambda idx: (start, idx)) from None
                out[..., n_explicit:] = np.broadcast_to(val, lead)[..., None]
            else:
                n = np.arange(start, N + 1)
                env = dsl.Env({"t": t[..., None] if t.ndim else t, "n": n}, self.params, read)
                try:
                    val = dsl.evaluate(self.generator, env)
                except EvaluationError as exc:
                    raise self._locate(exc, t, lead + (N - n_explicit,),
                                       lambda idx: (start + idx[-1], idx[:-1])) from None
                out[..., n_explicit:] = np.broadcast_to(val, lead + (N - n_explicit,))
        return out

    @staticmethod
    def _locate(exc, t, shape, where):
        if exc.mask is None:
            first = (0,) * len(shape)
        else:
            mask = np.broadcast_to(exc.mask, shape) if exc.mask.ndim <= len(shape) else exc.mask
            hits = np.argwhere(mask)
            first = tuple(hits[0]) if hits.size else (0,) * len(shape)
        component, lead_idx = where(first)
        lead_idx = tuple(int(i) for i in lead_idx)
        tt = np.asarray(t)
        if tt.ndim:
            t_val = float(np.broadcast_to(tt, tt.shape)[lead_idx[: tt.ndim]])
        else:
            t_val = float(tt)
        message = str(exc).split(" at ")[0]
        err = EvaluationError(message, t=t_val, component=int(component))
        err.index = lead_idx
        return err

    def __repr__(self):
        parts = [dsl.to_source(e) for e in self.components]
        if self.generator is not None:
            g = dsl.to_source(self.generator)
            parts.append(f"... {g}" + (f" (n={self.generator_index})" if self.generator_index else ""))
        return f"RhsFamily([{'; '.join(parts)}])"

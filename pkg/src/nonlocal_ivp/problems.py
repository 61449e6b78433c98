"""Named builtin problems used by the CLI and the acceptance suite."""

from __future__ import annotations

import numpy as np

from . import dsl
from .errors import ConfigError
from .functionals import FunctionalFamily, FunctionalGenerator, StieltjesFunctional
from .hypotheses import GrowthEnvelope
from .problem import System, make_problem
from .rhs import RhsFamily
from .truncation import pad_finite

__all__ = [
    "BUILTINS", "build_builtin", "example35", "example35_system", "example35_threshold",
    "constant_rhs_oracle", "constant_rhs_system", "finite_affine", "finite_affine_system",
    "uncoupled_exp", "uncoupled_exp_system",
]

EXAMPLE35_RHS = "k[n]/(1+t^2)*x[n] + t*cos(x[n+1])"


def example35_threshold(t0):
    """Largest admissible constant ``|k|``: ``1 / ((1 + t0) arctan t0)``."""
    return 1.0 / ((1.0 + t0) * np.arctan(t0))


def example35_system(k=0.5, t0=1.0):
    """``x_n' = k_n/(1+t^2) x_n + t cos x_{n+1}``, ``x_n(0) = (n+t0)^{-1} int_0^t0 x_n``."""
    params = {"k": dsl.as_param(k), "t0": float(t0)}
    rhs = RhsFamily(generator=EXAMPLE35_RHS, params=params)
    gen = FunctionalGenerator(pieces=((dsl.Num(0.0), dsl.parse("t0"), (dsl.parse("1/(n+t0)"),)),),
                              params=params)
    envelope = GrowthEnvelope(A="bracket(k, p)/(1+t^2)", B="t0", C="bracket(k, p) + tp", params=params)
    return System(rhs, FunctionalFamily(t0, (), gen)), envelope


def example35(k=0.5, t0=1.0, t_max=2.0, h=1e-3, N=16, closure="zero", P=3, seminorms=None,
              theta="auto"):
    system, envelope = example35_system(k, t0)
    return make_problem(system, t_max, h, N, closure=closure, envelopes=envelope,
                        seminorms=seminorms, P=P, theta=theta, name="example35")


def constant_rhs_system(t1=0.5, beta=0.5, t0=1.0):
    """Scalar ``x' = 1``, ``x(0) = beta x(t1)``, padded; solution ``beta t1/(1-beta) + t``."""
    eta = StieltjesFunctional.mass(t1, beta, t0)
    system = pad_finite(["1"], [eta])
    return system, GrowthEnvelope(A="0", B="1", C="1")


def constant_rhs_oracle(t1=0.5, beta=0.5, t0=1.0, t_max=2.0, h=1e-3, P=1, seminorms=None,
                        theta="auto"):
    system, envelope = constant_rhs_system(t1, beta, t0)
    return make_problem(system, t_max, h, 1, envelopes=envelope, seminorms=seminorms, P=P,
                        theta=theta, name="constant_rhs_oracle")


def _sup(exprs, lo, hi, params, samples=20001):
    t = np.linspace(lo, hi, samples)
    env = dsl.Env({"t": t}, params)
    return float(max(np.max(np.abs(np.broadcast_to(dsl.evaluate(e, env), t.shape))) for e in exprs))


def _as_functional(f, t0):
    return f if isinstance(f, StieltjesFunctional) else StieltjesFunctional(t0, *f)


def finite_affine_system(A, b, functionals, t0=1.0, t_max=2.0, params=None):
    """``x' = A(t) x + b(t)`` with ``N = len(b)``, padded into an infinite system.

    Entries of ``A`` and ``b`` are expressions in ``t``. The returned growth
    data are ``A_p(t) = max_i sum_j |A_ij(t)|``, ``B_p = sup_[0,t0] max_i |b_i|``
    and ``C_p = sup_[t0,t_max]`` of the larger of both, the suprema taken
    over 20001 sample points.
    """
    N = len(b)
    if len(A) != N or any(len(row) != N for row in A):
        raise ConfigError(f"A must be {N}x{N}", "rhs.params.A")
    params = {k: dsl.as_param(v) for k, v in (params or {}).items()}
    A = [[dsl.coerce(a) for a in row] for row in A]
    b = [dsl.coerce(v) for v in b]
    src = []
    for i in range(N):
        terms = [f"({dsl.to_source(A[i][j])})*x[{j + 1}]" for j in range(N)]
        src.append(" + ".join(terms + [f"({dsl.to_source(b[i])})"]))
    eta = [_as_functional(f, t0) for f in functionals]
    system = pad_finite(RhsFamily(components=src, params=params), eta)
    rows = [" + ".join(f"abs({dsl.to_source(a)})" for a in row) for row in A]
    a_expr = dsl.parse(rows[0] if N == 1 else f"max({', '.join(rows)})")
    B = _sup(b, 0.0, t0, params)
    C = max(_sup([a_expr], t0, t_max, params), _sup(b, t0, t_max, params))
    return system, GrowthEnvelope(A=a_expr, B=B, C=C, params=params)


def finite_affine(A, b, functionals, t0=1.0, t_max=2.0, h=1e-3, params=None, envelopes=None,
                  P=1, seminorms=None, theta="auto", N=None):
    """Solvable problem for :func:`finite_affine_system`, truncated at ``len(b)`` by default."""
    system, default_env = finite_affine_system(A, b, functionals, t0, t_max, params)
    return make_problem(system, t_max, h, len(b) if N is None else N,
                        envelopes=default_env if envelopes is None else envelopes,
                        seminorms=seminorms, P=P, theta=theta, name="finite_affine")


def uncoupled_exp_system(lam="-0.25/n", weight=0.5, t0=1.0):
    """``x_n' = lam_n x_n + 1``, ``x_n(0) = weight * x_n(t0)``; components are independent.

    Exact solution: ``x_n(t) = (c_n + 1/lam_n) e^{lam_n t} - 1/lam_n`` with
    ``c_n = weight (e^{lam_n t0} - 1) / (lam_n (1 - weight e^{lam_n t0}))``.
    """
    params = {"lam": dsl.as_param(lam)}
    rhs = RhsFamily(generator="lam[n]*x[n] + 1", params=params)
    funcs = FunctionalFamily(t0, (), StieltjesFunctional.mass(t0, weight, t0))
    envelope = GrowthEnvelope(A="bracket(lam, p)", B="1", C="max(bracket(lam, p), 1)", params=params)
    return System(rhs, funcs), envelope


def uncoupled_exp(lam="-0.25/n", weight=0.5, t0=1.0, t_max=2.0, h=1e-3, N=8, P=3, seminorms=None,
                  theta="auto"):
    system, envelope = uncoupled_exp_system(lam, weight, t0)
    return make_problem(system, t_max, h, N, envelopes=envelope, seminorms=seminorms,
                        P=P, theta=theta, name="uncoupled_exp")


def _b_example35(t0, t_max, functionals, k=0.5):
    return example35_system(k, t0) + (16,)


def _b_constant(t0, t_max, functionals, t1=0.5, beta=0.5):
    return constant_rhs_system(t1, beta, t0) + (1,)


def _b_affine(t0, t_max, functionals, A, b, params=None):
    if functionals is None:
        raise ConfigError("finite_affine needs one functional per equation", "problem.functionals")
    return finite_affine_system(A, b, functionals, t0, t_max, params) + (len(b),)


def _b_uncoupled(t0, t_max, functionals, lam="-0.25/n", weight=0.5):
    return uncoupled_exp_system(lam, weight, t0) + (8,)


#: name -> builder ``(t0, t_max, functionals, **params) -> (system, envelope, default N)``
BUILTINS = {
    "example35": _b_example35,
    "constant_rhs_oracle": _b_constant,
    "finite_affine": _b_affine,
    "uncoupled_exp": _b_uncoupled,
}


def build_builtin(name, t0, t_max, functionals=None, **params):
    """``(system, envelope, default N)`` of a named builtin."""
    try:
        builder = BUILTINS[name]
    except KeyError:
        raise ConfigError(f"unknown builtin {name!r}; choose from {sorted(BUILTINS)}", "problem.rhs.name") from None
    try:
        return builder(t0, t_max, functionals, **params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for builtin {name!r}: {exc}", "problem.rhs.params") from None

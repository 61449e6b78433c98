"""Existence-theorem constants and the checks that decide its hypotheses.

For each seminorm index ``p`` (with ``n_p``, ``t_p`` from the problem's
seminorm configuration)::

    G_p   = max_{n<=n_p} |1 - <alpha_n,1>|^{-1} * max_{n<=n_p} ||alpha_n|| + 1
    lhs_p = G_p * ||A_p||_{L1(0,t0)}                  (must be < 1)
    theta = 2 C_p / (1 - lhs_p)      (1 when C_p = 0)
    M_p   = lhs_p + C_p / theta
    K_p   = G_p t0 B_p + C_p (t_p - t0)
    rho_p = K_p / (1 - M_p)
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from . import dsl
from .errors import ConfigError, EvaluationError, HypothesisViolation
from .functionals import PiecewisePolynomial, dual_norm, one_value

__all__ = [
    "GrowthEnvelope", "HypothesisRecord", "HypothesisReport", "SamplingReport",
    "compute_G", "check_inequality", "select_theta", "compute_constants",
    "check_hypotheses", "validate_envelope_by_sampling", "auto_theta",
]

MARGINAL = 1e-9
ENVELOPE_NAMES = ("t", "p", "t0", "tp")


@dataclass(frozen=True)
class GrowthEnvelope:
    """Bounds ``[f(t,x)]_{n_p} <= A_p(t)[x]_{n_p} + B_p`` on ``[0,t0]`` and
    ``<= C_p([x]_{n_p} + 1)`` on ``[t0, t_p]``.

    ``A`` is an expression in ``t, p, t0, tp`` (and parameters) or a tuple
    of density pieces ``(from, to, (coeff, ...))`` whose entries are
    expressions in ``p, t0, tp``; coefficients multiply powers of ``t``.
    ``B`` and ``C`` are expressions in ``p, t0, tp``.
    """

    A: object
    B: object
    C: object
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        A = self.A
        if isinstance(A, (tuple, list)):
            A = tuple((dsl.coerce(a), dsl.coerce(b), tuple(dsl.coerce(c) for c in cs)) for a, b, cs in A)
        else:
            A = dsl.coerce(A)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", dsl.coerce(self.B))
        object.__setattr__(self, "C", dsl.coerce(self.C))

    @property
    def piecewise(self):
        return isinstance(self.A, tuple)

    def _env(self, p, t0, tp, t=None):
        variables = {"p": p, "t0": t0, "tp": tp}
        if t is not None:
            variables["t"] = t
        return dsl.Env(variables, self.params)

    def A_pieces(self, p, t0, tp):
        env = self._env(p, t0, tp)
        ev = lambda e: float(dsl.evaluate(e, env))  # noqa: E731
        return PiecewisePolynomial(tuple((ev(a), ev(b), tuple(ev(c) for c in cs)) for a, b, cs in self.A))

    def A_values(self, p, t, t0, tp):
        t = np.asarray(t, dtype=float)
        if self.piecewise:
            return np.broadcast_to(self.A_pieces(p, t0, tp)(t), t.shape)
        return np.broadcast_to(dsl.evaluate(self.A, self._env(p, t0, tp, t)), t.shape)

    def A_norm(self, p, t0, tp):
        """``||A_p||_{L1(0,t0)}``; exact for pieces, adaptive quadrature otherwise.

        Raises:
            ConfigError: ``A_p`` takes negative values on ``[0, t0]``.
        """
        if self.piecewise:
            pw = self.A_pieces(p, t0, tp)
            signed, absolute = pw.integral(0.0, t0), pw.abs_integral(0.0, t0)
            if signed < absolute * (1 - 1e-12) - 1e-300:
                raise ConfigError(f"A_{p} is negative somewhere on [0, t0]", "envelopes.A")
            return absolute
        probe = self.A_values(p, np.linspace(0.0, t0, 2001), t0, tp)
        if np.any(probe < 0):
            raise ConfigError(f"A_{p} is negative somewhere on [0, t0]", "envelopes.A")
        env = self._env(p, t0, tp)

        def integrand(s):
            env.variables["t"] = s
            return abs(dsl.evaluate(self.A, env))

        value, _ = integrate.quad(integrand, 0.0, t0, epsabs=0.0, epsrel=1e-13, limit=500)
        return float(value)

    def B_value(self, p, t0, tp):
        return self._nonneg(self.B, "B", p, t0, tp)

    def C_value(self, p, t0, tp):
        return self._nonneg(self.C, "C", p, t0, tp)

    def _nonneg(self, e, label, p, t0, tp):
        value = float(dsl.evaluate(e, self._env(p, t0, tp)))
        if value < 0:
            raise ConfigError(f"{label}_{p} = {value} is negative", f"envelopes.{label}")
        return value


def _indices(spec, p):
    cfg = spec.seminorm_config
    if not 1 <= p <= cfg.P:
        raise ConfigError(f"p={p} outside 1..{cfg.P}", "seminorms")
    return cfg.n_seq[p - 1], cfg.t_seq[p - 1]


def _alpha_stats(spec, n_max):
    """``(max |1-<alpha,1>|^{-1}, max ||alpha||)`` over ``n <= n_max``."""
    inv = nrm = 0.0
    for n in range(1, n_max + 1):
        a = spec.alpha(n)
        gap = 1.0 - one_value(a)
        if gap == 0.0:
            raise HypothesisViolation(f"<alpha_{n}, 1> = 1", component=n)
        inv = max(inv, 1.0 / abs(gap))
        nrm = max(nrm, dual_norm(a))
    return inv, nrm


def compute_G(spec, p):
    """``G_p = [(1 - <alpha,1>)^{-1}]_{n_p} [||alpha||_*]_{n_p} + 1``."""
    n_p, _ = _indices(spec, p)
    inv, nrm = _alpha_stats(spec, n_p)
    return inv * nrm + 1.0


def _envelope(spec):
    if spec.envelopes is None:
        raise ConfigError("the problem declares no growth envelope", "envelopes")
    return spec.envelopes


def check_inequality(spec, p):
    """``(lhs, lhs < 1)`` with ``lhs = G_p ||A_p||_{L1}``."""
    n_p, t_p = _indices(spec, p)
    lhs = compute_G(spec, p) * _envelope(spec).A_norm(p, spec.t0, t_p)
    return lhs, bool(lhs < 1.0)


def select_theta(spec, p):
    """Midpoint choice ``theta_p = 2 C_p / (1 - lhs_p)``, or 1 when ``C_p = 0``."""
    lhs, ok = check_inequality(spec, p)
    if not ok:
        raise HypothesisViolation(f"inequality fails at p={p} (lhs={lhs:.6g}); no theta_p exists")
    _, t_p = _indices(spec, p)
    C = _envelope(spec).C_value(p, spec.t0, t_p)
    if C == 0.0:
        return 1.0
    return 2.0 * C / (1.0 - lhs)


def compute_constants(spec, p):
    """``(M_p, K_p, rho_p)`` with the minimal radius ``rho_p = K_p / (1 - M_p)``."""
    _, t_p = _indices(spec, p)
    env = _envelope(spec)
    G = compute_G(spec, p)
    lhs, _ = check_inequality(spec, p)
    theta = select_theta(spec, p)
    B = env.B_value(p, spec.t0, t_p)
    C = env.C_value(p, spec.t0, t_p)
    M = lhs + C / theta
    if not M < 1.0:
        raise AssertionError(f"M_{p} = {M} >= 1 despite the theta selection rule")
    K = G * spec.t0 * B + C * (t_p - spec.t0)
    return M, K, K / (1.0 - M)


def auto_theta(spec):
    """``theta_p`` from :func:`select_theta` where possible, 1.0 elsewhere."""
    out = []
    for p in range(1, spec.seminorm_config.P + 1):
        try:
            out.append(select_theta(spec, p))
        except (HypothesisViolation, ConfigError, EvaluationError):
            out.append(1.0)
    return tuple(out)


@dataclass
class HypothesisRecord:
    p: int
    n_p: int
    t_p: float
    G_p: float = float("nan")
    normA_p: float = float("nan")
    B_p: float = float("nan")
    C_p: float = float("nan")
    theta_p: float | None = None
    M_p: float | None = None
    K_p: float | None = None
    rho_p: float | None = None
    lhs: float = float("nan")
    passed: bool = False
    marginal: bool = False
    error: str | None = None


@dataclass
class HypothesisReport:
    records: list
    hyp_2_5_pass: bool
    overall: bool
    violation: str | None = None

    def to_dict(self):
        def clean(v):
            if isinstance(v, float) and not np.isfinite(v):
                return None
            return v

        return {
            "hyp_2_5_pass": self.hyp_2_5_pass,
            "overall": self.overall,
            "violation": self.violation,
            "records": [{("pass" if k == "passed" else k): clean(v) for k, v in asdict(r).items()}
                        for r in self.records],
        }


def check_hypotheses(spec):
    """Evaluate every constant for each configured ``p``."""
    cfg = spec.seminorm_config
    env = _envelope(spec)
    violation = None
    n_check = max(max(cfg.n_seq), spec.N)
    try:
        _alpha_stats(spec, n_check)
    except HypothesisViolation as exc:
        violation = f"condition <alpha_n,1> != 1 violated: {exc}"
    records = []
    for p in range(1, cfg.P + 1):
        n_p, t_p = cfg.n_seq[p - 1], cfg.t_seq[p - 1]
        rec = HypothesisRecord(p, n_p, t_p)
        try:
            rec.G_p = compute_G(spec, p)
            rec.normA_p = env.A_norm(p, spec.t0, t_p)
            rec.B_p = env.B_value(p, spec.t0, t_p)
            rec.C_p = env.C_value(p, spec.t0, t_p)
            rec.lhs = rec.G_p * rec.normA_p
            rec.passed = bool(rec.lhs < 1.0)
            rec.marginal = abs(rec.lhs - 1.0) <= MARGINAL
            if rec.passed:
                rec.theta_p = select_theta(spec, p)
                rec.M_p, rec.K_p, rec.rho_p = compute_constants(spec, p)
        except HypothesisViolation as exc:
            rec.error = str(exc)
        records.append(rec)
    hyp_ok = violation is None
    return HypothesisReport(records, hyp_ok, hyp_ok and all(r.passed for r in records), violation)


@dataclass
class SamplingReport:
    samples: int
    radius: float
    seed: int
    checked: int = 0
    violations: list = field(default_factory=list)

    @property
    def n_violations(self):
        return len(self.violations)

    def to_dict(self):
        return {"samples": self.samples, "radius": self.radius, "seed": self.seed,
                "checked": self.checked, "n_violations": self.n_violations,
                "violations": self.violations[:20]}


def validate_envelope_by_sampling(spec, samples=1000, radius=1.0, seed=42, rel_margin=1e-12):
    """Probe the declared envelope at random ``(t, x)``.

    For each ``p``: ``t ~ U[0, t_p]``, ``x_1..x_{n_p} ~ U[-radius, radius]``;
    components in the coupling band beyond ``n_p`` are set to 0, then to
    ``+radius``, then to ``-radius``. A sample violates the envelope when
    ``[f]_{n_p}`` exceeds the bound by a relative margin above ``rel_margin``.
    Report-only: never raises for a violation.
    """
    env = _envelope(spec)
    rhs = spec.rhs
    rng = np.random.default_rng(seed)
    report = SamplingReport(samples, radius, seed)
    t0 = spec.t0
    cfg = spec.seminorm_config
    for p in range(1, cfg.P + 1):
        n_p, t_p = cfg.n_seq[p - 1], cfg.t_seq[p - 1]
        width = max(n_p + rhs.band.upper, rhs.absolute_reach)
        if rhs.finite_length is not None:
            width = min(width, rhs.finite_length)
            n_p = min(n_p, width)
        t = rng.uniform(0.0, t_p, samples)
        head = rng.uniform(-radius, radius, (samples, n_p))
        A = env.A_values(p, t, t0, t_p)
        B = env.B_value(p, t0, t_p)
        C = env.C_value(p, t0, t_p)
        xb = np.max(np.abs(head), axis=1)
        bound = np.where(t <= t0, A * xb + B, C * (xb + 1.0))
        for tail_name, tail in (("zero", 0.0), ("+radius", radius), ("-radius", -radius)):
            if width == n_p and tail_name != "zero":
                continue
            X = np.concatenate([head, np.full((samples, width - n_p), tail)], axis=1)
            try:
                fx = rhs.evaluate(t, X, "zero")
            except EvaluationError as exc:
                report.violations.append({"p": p, "tail": tail_name, "error": str(exc)})
                continue
            lhs = np.max(np.abs(fx[:, :n_p]), axis=1)
            report.checked += samples
            bad = np.flatnonzero(lhs > bound * (1.0 + rel_margin))
            for i in bad:
                report.violations.append({"p": p, "tail": tail_name, "t": float(t[i]),
                                          "lhs": float(lhs[i]), "bound": float(bound[i])})
    return report

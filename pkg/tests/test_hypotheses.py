import numpy as np
import numpy.testing as npt
import pytest

from nonlocal_ivp.core import SeminormConfig
from nonlocal_ivp.errors import ConfigError, HypothesisViolation
from nonlocal_ivp.functionals import StieltjesFunctional
from nonlocal_ivp.hypotheses import (GrowthEnvelope, check_hypotheses, check_inequality, compute_constants,
                                     compute_G, select_theta, validate_envelope_by_sampling)
from nonlocal_ivp.problems import example35, example35_threshold, uncoupled_exp

from conftest import scalar_problem


def _ex35_t1(k=0.5):
    return example35(k=k, N=4, P=1, h=1e-2)


def test_G_example():
    spec = example35(N=8, P=5, h=1e-2)
    for p in range(1, 6):
        npt.assert_allclose(compute_G(spec, p), 2.0, rtol=1e-15)


def test_G_zero_functionals():
    spec = scalar_problem("0", alpha=StieltjesFunctional(1.0))
    assert compute_G(spec, 1) == 1.0


def test_G_single_mass():
    assert compute_G(scalar_problem("0"), 1) == 2.0


def test_G_nondecreasing():
    spec = uncoupled_exp(N=6, P=6, h=1e-2)
    from nonlocal_ivp.functionals import FunctionalFamily, FunctionalGenerator
    from nonlocal_ivp.problem import System
    from nonlocal_ivp import dsl
    gen = FunctionalGenerator(point_masses=((dsl.parse("t0"), dsl.parse("1 - 1/(n+1)")),))
    spec = spec.replace(system=System(spec.rhs, FunctionalFamily(1.0, (), gen)))
    G = [compute_G(spec, p) for p in range(1, 7)]
    assert all(b >= a for a, b in zip(G, G[1:]))


def test_inequality_example():
    lhs, ok = check_inequality(_ex35_t1(0.5), 1)
    npt.assert_allclose(lhs, np.pi / 4, rtol=1e-12)
    assert ok
    lhs, ok = check_inequality(_ex35_t1(0.7), 1)
    npt.assert_allclose(lhs, 0.7 * 2 * np.arctan(1.0), rtol=1e-12)
    assert not ok


def test_inequality_zero_A(zero_envelope):
    spec = scalar_problem("0", envelopes=zero_envelope)
    assert check_inequality(spec, 1) == (0.0, True)


@pytest.mark.parametrize("t0", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("k", [0.2, "0.3 + 0.1*(-1)^n"])
def test_example_closed_form(t0, k):
    spec = example35(k=k, t0=t0, t_max=t0 + 1.0, N=8, P=8, h=1e-2)
    for p in range(1, 9):
        kp = max(abs(0.2 if k == 0.2 else 0.3 + 0.1 * (-1) ** n) for n in range(1, p + 1))
        lhs, _ = check_inequality(spec, p)
        npt.assert_allclose(lhs, kp * (1 + t0) * np.arctan(t0), rtol=1e-12)


def test_threshold():
    npt.assert_allclose(example35_threshold(1.0), 2 / np.pi, rtol=1e-15)


def test_theta_and_constants_example():
    spec = _ex35_t1()
    lhs = np.pi / 4
    theta = select_theta(spec, 1)
    npt.assert_allclose(theta, 5 / (1 - lhs), rtol=1e-12)
    M, K, rho = compute_constants(spec, 1)
    npt.assert_allclose(M, lhs + (1 - lhs) / 2, rtol=1e-12)
    npt.assert_allclose(K, 4.5, rtol=1e-14)
    npt.assert_allclose(rho, 4.5 / (1 - M), rtol=1e-12)
    assert round(M, 4) == 0.8927 and round(rho, 2) == 41.94


def test_theta_rules():
    spec = scalar_problem("0", envelopes=GrowthEnvelope(A="0", B="0", C="0"))
    assert select_theta(spec, 1) == 1.0
    assert compute_constants(spec, 1) == (0.0, 0.0, 0.0)
    spec = scalar_problem("0", envelopes=GrowthEnvelope(A="0", B="0", C="1"))
    assert select_theta(spec, 1) == 2.0
    assert compute_constants(spec, 1)[0] == 0.5


def test_constants_formula_arithmetic():
    # G = 1 (zero functional), ||A|| = 0.5, C = 0, B = 1, t0 = 1, t_p = 2
    spec = scalar_problem("0", alpha=StieltjesFunctional(1.0),
                          envelopes=GrowthEnvelope(A="0.5", B="1", C="0"))
    M, K, rho = compute_constants(spec, 1)
    npt.assert_allclose((M, K, rho), (0.5, 1.0, 2.0), rtol=1e-13)


def test_select_theta_fails():
    with pytest.raises(HypothesisViolation):
        select_theta(_ex35_t1(0.7), 1)


def test_scale_consistency():
    base = scalar_problem("0", envelopes=GrowthEnvelope(A="0.1*(1+t)", B="1", C="1"))
    scaled = scalar_problem("0", envelopes=GrowthEnvelope(A="3*(0.1*(1+t))", B="1", C="1"))
    npt.assert_allclose(check_inequality(scaled, 1)[0], 3 * check_inequality(base, 1)[0], rtol=1e-13)


def test_rho_monotone_in_A():
    rhos = []
    for a in (0.4, 0.3, 0.2, 0.1):
        spec = scalar_problem("0", envelopes=GrowthEnvelope(A=str(a), B="1", C="2"))
        rhos.append(compute_constants(spec, 1)[2])
    assert all(r >= 0 for r in rhos)
    assert all(b <= a for a, b in zip(rhos, rhos[1:]))


def test_piecewise_A_exact():
    env = GrowthEnvelope(A=((0, 0.5, ("2",)), (0.5, "t0", (0, "p"))), B="0", C="0")
    spec = scalar_problem("0", alpha=StieltjesFunctional(1.0), envelopes=env)
    # int_0^0.5 2 + int_0.5^1 s ds = 1 + 0.375
    npt.assert_allclose(check_inequality(spec, 1)[0], 1.375, rtol=1e-15)


def test_negative_envelope_rejected():
    spec = scalar_problem("0", envelopes=GrowthEnvelope(A="t - 0.5", B="0", C="0"))
    with pytest.raises(ConfigError):
        check_inequality(spec, 1)
    spec = scalar_problem("0", envelopes=GrowthEnvelope(A="0", B="-1", C="0"))
    with pytest.raises(ConfigError):
        compute_constants(spec, 1)


def test_report():
    spec = example35(k=0.5, N=8, P=3, h=1e-2)
    report = check_hypotheses(spec)
    assert report.overall and report.hyp_2_5_pass
    d = report.to_dict()
    assert [r["pass"] for r in d["records"]] == [True, True, True]
    for r in report.records:
        assert r.M_p < 1 and np.isfinite(r.rho_p) and r.rho_p >= 0
        assert not r.marginal
    bad = check_hypotheses(example35(k=0.7, N=8, P=3, h=1e-2))
    assert not bad.overall and bad.hyp_2_5_pass
    assert all(r.theta_p is None for r in bad.records)


def test_report_marginal():
    env = GrowthEnvelope(A=str(0.5 - 1e-11), B="0", C="0")
    report = check_hypotheses(scalar_problem("0", envelopes=env))
    assert report.records[0].passed and report.records[0].marginal


def test_missing_envelope():
    with pytest.raises(ConfigError):
        check_hypotheses(scalar_problem("0"))


def test_sampling_example_clean():
    spec = example35(k=0.5, N=8, P=3, h=1e-2)
    rep = validate_envelope_by_sampling(spec, samples=2000, seed=42)
    assert rep.n_violations == 0 and rep.checked > 0


def test_sampling_detects_false_envelope():
    spec = scalar_problem("1", envelopes=GrowthEnvelope(A="0", B="0", C="0"))
    assert validate_envelope_by_sampling(spec, samples=200).n_violations > 0


def test_sampling_zero_rhs(zero_envelope):
    spec = scalar_problem("0", envelopes=zero_envelope)
    assert validate_envelope_by_sampling(spec, samples=200).n_violations == 0


def test_sampling_probes_tail():
    # f_n = x[n+1]: with the tail at zero the bound [f]_1 <= 0 holds,
    # the +/- radius tails expose the coupling
    from nonlocal_ivp.functionals import FunctionalFamily
    from nonlocal_ivp.problem import System, make_problem
    from nonlocal_ivp.rhs import RhsFamily
    system = System(RhsFamily(generator="x[n+1]"),
                    FunctionalFamily(1.0, (), StieltjesFunctional(1.0)))
    env = GrowthEnvelope(A="1", B="0", C="1")
    spec = make_problem(system, 2.0, 1e-2, 4, envelopes=env,
                        seminorms=SeminormConfig((1,), (2.0,), (1.0,)))
    rep = validate_envelope_by_sampling(spec, samples=500, seed=1)
    assert rep.n_violations > 0
    assert {v["tail"] for v in rep.violations} <= {"+radius", "-radius"}

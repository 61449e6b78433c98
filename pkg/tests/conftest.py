import pytest

from nonlocal_ivp.functionals import StieltjesFunctional
from nonlocal_ivp.hypotheses import GrowthEnvelope
from nonlocal_ivp.operator import solve_picard
from nonlocal_ivp.problem import make_problem
from nonlocal_ivp.problems import example35
from nonlocal_ivp.shooting import solve_shooting
from nonlocal_ivp.truncation import pad_finite


def scalar_problem(rhs, alpha=None, t0=1.0, t_max=2.0, h=1e-3, envelopes=None, P=1):
    """Padded scalar problem ``x' = rhs``, ``x(0) = <alpha, x>``."""
    alpha = StieltjesFunctional.mass(0.5, 0.5, t0) if alpha is None else alpha
    system = pad_finite([rhs], [alpha])
    return make_problem(system, t_max, h, 1, envelopes=envelopes, P=P)


@pytest.fixture(scope="session")
def ex35():
    return example35(k=0.5, N=16, P=3)


@pytest.fixture(scope="session")
def ex35_picard(ex35):
    return solve_picard(ex35)


@pytest.fixture(scope="session")
def ex35_shoot(ex35):
    return solve_shooting(ex35)


@pytest.fixture
def zero_envelope():
    return GrowthEnvelope(A="0", B="0", C="0")


_CRITERIA = []


def record_criterion(number, ok, seconds, detail):
    """Store a one-line verdict for the acceptance summary."""
    _CRITERIA.append((number, ok, seconds, detail))
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'} ({seconds:.2f} s) {detail}")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, seconds, detail in sorted(_CRITERIA):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} ({seconds:.2f} s) {detail}")

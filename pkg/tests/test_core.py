import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nonlocal_ivp.core import Grid, SeminormConfig, Trajectory, evaluate_seminorms, seminorm_bracket
from nonlocal_ivp.errors import ConfigError


def test_bracket_examples():
    x = [3.0, -5.0, 2.0]
    assert seminorm_bracket(x, 1) == 3.0
    assert seminorm_bracket(x, 2) == 5.0
    assert seminorm_bracket([0.0, 0.0, 0.0], 3) == 0.0


@pytest.mark.parametrize("n", [0, 4])
def test_bracket_out_of_range(n):
    with pytest.raises(IndexError):
        seminorm_bracket([1.0, 2.0, 3.0], n)


_vec = arrays(np.float64, 8, elements=st.floats(-1e6, 1e6, allow_nan=False))


@settings(max_examples=200, deadline=None)
@given(_vec, _vec, st.floats(-1e3, 1e3, allow_nan=False), st.integers(1, 7))
def test_bracket_axioms(x, y, lam, n):
    assert seminorm_bracket(x, n) <= seminorm_bracket(x, n + 1)
    npt.assert_allclose(seminorm_bracket(lam * x, n), abs(lam) * seminorm_bracket(x, n), rtol=1e-15)
    assert seminorm_bracket(x + y, n) <= (seminorm_bracket(x, n) + seminorm_bracket(y, n)) * (1 + 1e-15)


def test_grid_basic():
    g = Grid.build(2.0, 0.1)
    assert g.nodes[0] == 0.0 and g.nodes[-1] == 2.0
    assert g.size == 21
    assert np.all(np.diff(g.nodes) > 0)


def test_grid_snaps_and_inserts():
    g = Grid.build(1.0, 0.1, extra=[0.3, 0.55])
    assert g.has_node(0.3) and g.nodes[g.index_of(0.3)] == 0.3
    assert g.has_node(0.55)
    assert g.size == 12
    assert not g.has_node(0.57)
    with pytest.raises(ConfigError):
        g.index_of(0.57)


@pytest.mark.parametrize("t_max, h", [(0.0, 0.1), (1.0, 0.0), (1.0, -1.0), (np.inf, 0.1)])
def test_grid_rejects(t_max, h):
    with pytest.raises(ConfigError):
        Grid.build(t_max, h)


def test_grid_extra_outside():
    with pytest.raises(ConfigError):
        Grid.build(1.0, 0.1, extra=[1.5])


def test_trajectory_immutable_and_finite():
    g = Grid.build(1.0, 0.5)
    x = Trajectory(g, np.ones((3, 2)))
    with pytest.raises(ValueError):
        x.values[0, 0] = 2.0
    with pytest.raises(ConfigError):
        Trajectory(g, np.array([[0.0], [np.nan], [1.0]]))
    with pytest.raises(ConfigError):
        Trajectory(g, np.ones((4, 1)))
    assert x.first(1).n_components == 1


def test_seminorm_config_validation():
    with pytest.raises(ConfigError):
        SeminormConfig((2, 1), (1.5, 2.0), (1.0, 1.0))
    with pytest.raises(ConfigError):
        SeminormConfig((1, 2), (2.0, 1.5), (1.0, 1.0))
    with pytest.raises(ConfigError):
        SeminormConfig((1,), (1.5,), (0.0,))
    with pytest.raises(ConfigError):
        SeminormConfig((1,), (1.5,), (1.0,)).validate(t0=1.5, t_max=2.0)


def test_default_seminorms():
    cfg = SeminormConfig.default(1.0, 2.0, 4, n_offset=2)
    assert cfg.n_seq == (3, 4, 5, 6)
    npt.assert_allclose(cfg.t_seq, [1.25, 1.5, 1.75, 2.0])
    assert cfg.t_seq[-1] == 2.0


def test_seminorms_zero_and_constant():
    g = Grid.build(2.0, 0.01)
    cfg = SeminormConfig((1, 3), (1.5, 2.0), (3.0, 7.0))
    for v in evaluate_seminorms(Trajectory.zeros(g, 3), cfg, 1.0):
        assert tuple(v) == (0.0, 0.0, 0.0)
    for v in evaluate_seminorms(Trajectory(g, np.full((g.size, 3), 2.5)), cfg, 1.0):
        assert tuple(v) == (2.5, 2.5, 2.5)


def test_seminorms_linear_brute_force():
    g = Grid.build(2.0, 1e-3)
    x = Trajectory(g, g.nodes)
    (v,) = evaluate_seminorms(x, SeminormConfig((1,), (2.0,), (1.0,)), 1.0)
    t = g.nodes
    mask = (t >= 1.0) & (t <= 2.0)
    assert v.P == 1.0
    assert v.Q == np.max(t[mask] * np.exp(-(t[mask] - 1.0)))
    assert v.R == max(v.P, v.Q)
    # the continuous maximum is at t = 1 where the weight is 1
    npt.assert_allclose(v.Q, 1.0, rtol=1e-12)


def test_seminorms_restriction_invariant():
    rng = np.random.default_rng(0)
    g = Grid.build(2.0, 0.01)
    X = rng.normal(size=(g.size, 6))
    cfg = SeminormConfig((2, 4), (1.5, 2.0), (0.5, 2.0))
    full = evaluate_seminorms(Trajectory(g, X), cfg, 1.0)
    cut = evaluate_seminorms(Trajectory(g, X[:, :4]), cfg, 1.0)
    assert full == cut
    with pytest.raises(ConfigError):
        evaluate_seminorms(Trajectory(g, X[:, :3]), cfg, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(-50, 50, allow_nan=False), st.integers(0, 2**32 - 1))
def test_seminorm_homogeneity_triangle(lam, seed):
    rng = np.random.default_rng(seed)
    g = Grid.build(2.0, 0.05)
    cfg = SeminormConfig((1, 3), (1.5, 2.0), (2.0, 5.0))
    a, b = rng.normal(size=(2, g.size, 3))
    ra = evaluate_seminorms(Trajectory(g, a), cfg, 1.0)
    rb = evaluate_seminorms(Trajectory(g, b), cfg, 1.0)
    rs = evaluate_seminorms(Trajectory(g, a + b), cfg, 1.0)
    rl = evaluate_seminorms(Trajectory(g, lam * a), cfg, 1.0)
    for p in range(2):
        for k in range(3):
            npt.assert_allclose(rl[p][k], abs(lam) * ra[p][k], rtol=1e-14, atol=1e-300)
            assert rs[p][k] <= (ra[p][k] + rb[p][k]) * (1 + 1e-14)

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mipdg import problems
from mipdg.problems import REGISTRY, evaluate_test3_operator, evaluate_test6_operator

PI = np.pi


def test_registry_lookup():
    assert sorted(REGISTRY) == [f"test{k}" for k in range(1, 7)]
    with pytest.raises(KeyError):
        problems.get("test9")


def test_test1_solutions():
    c = problems.get("test1")
    assert c.alternatives["u+"](0.5) == pytest.approx(0.125)
    assert c.alternatives["u-"](0.5) == pytest.approx(0.375)
    for name, g in c.alternatives.items():
        assert g(0.0) == pytest.approx(c.ua) and g(1.0) == pytest.approx(c.ub)


def test_test2_values():
    c = problems.get("test2")
    assert c.exact(np.sqrt(PI / 2)) == pytest.approx(1.0)
    assert abs(c.pde_residual(np.array([1.0]))[0]) < 1e-10
    assert c.ua == pytest.approx(c.exact(-2.0)) and c.ub == pytest.approx(c.exact(2.0))


def test_test3_values():
    c = problems.get("test3")
    assert c.exact(2.0) == pytest.approx(4 * np.log(2))
    x = np.linspace(1.2, 4.0, 9)
    _, ux, uxx, _ = c.derivatives(x)
    _, theta = problems._t3_minimize(uxx, ux, c.exact(x), x)
    np.testing.assert_allclose(theta, problems.test3_optimal_control(x), rtol=1e-12)


def test_test3_interior_minimum():
    x, q, lam = 2.0, 0.7, 0.3
    p = x * x * q
    S = problems._t3_S(np.array(x))
    assert evaluate_test3_operator(p, q, lam, x) == pytest.approx(-p / 4 + lam / x + S)


@given(p=st.floats(-5, 5), q=st.floats(-5, -1e-3), lam=st.floats(-5, 5), x=st.floats(1.2, 4.0))
def test_test3_concave_endpoint(p, q, lam, x):
    g = lambda th: x * x * q * th * th - p * th + lam / x + problems._t3_S(np.array(x))  # noqa: E731
    assert evaluate_test3_operator(p, q, lam, x) == pytest.approx(min(g(1.0), g(0.0)), abs=1e-12)


def test_test6_coefficient():
    assert problems.test6_c(PI / 2, PI / 4) == 1.0
    assert problems.test6_c(3 * PI / 2, PI / 4) == 0.5
    assert problems.test6_c(3 * PI / 2, 3 * PI / 4) == 1.0
    assert problems.test6_c(PI, PI / 2) == 1.0      # both inequalities non-strict on this corner
    assert problems.test6_c(2 * PI, 3 * PI / 4) == 0.5


@given(p=st.floats(-5, 5), t=st.floats(0.01, 3.1), x=st.floats(0.01, 6.27))
def test_test6_finite_min(p, t, x):
    c = float(problems.test6_c(x, t))
    rest = c * np.cos(t) * np.sin(x) - np.sin(t) * np.sin(x)
    assert evaluate_test6_operator(p, 0.0, 0.0, t, x) == pytest.approx(-min(p + rest, 0.5 * p + rest), abs=1e-12)


def test_test6_control_recovery():
    rng = np.random.default_rng(5)
    x = rng.uniform(0.01, 2 * PI - 0.01, 200)
    t = rng.uniform(0.01, 3.1, 200)
    _, _, uxx, _ = problems.get("test6").derivatives(x, t)
    theta = problems.test6_control(uxx, t, x)
    np.testing.assert_array_equal(theta, np.where(problems.test6_c(x, t) == 1.0, 1, 2))


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_exact_solutions_solve_the_equation(name):
    c = problems.get(name)
    rng = np.random.default_rng(11)
    x = rng.uniform(c.a, c.b, 100)
    t = rng.uniform(0.0, c.T, 100) if c.is_parabolic else None
    assert np.max(np.abs(c.pde_residual(x, t))) < 1e-8
    for which in c.alternative_derivatives:
        assert np.max(np.abs(c.pde_residual(x, t, which))) < 1e-8


@pytest.mark.parametrize("name", ["test4", "test5", "test6"])
def test_parabolic_data_compatible(name):
    c = problems.get(name)
    for t in (0.0, 0.7, c.T):
        assert c.ua(t) == pytest.approx(c.exact(c.a, t))
        assert c.ub(t) == pytest.approx(c.exact(c.b, t))
    x = np.linspace(c.a, c.b, 5)
    np.testing.assert_allclose(c.u0(x), c.exact(x, 0.0))


def test_stationary_problem_of_parabolic_case():
    c = problems.get("test4")
    pb = c.elliptic_problem(t=0.5)
    assert pb.ua == pytest.approx(c.exact(0.0, 0.5))
    x = np.linspace(0.1, 0.9, 5)
    u, ux, uxx, _ = c.derivatives(x, 0.5)
    np.testing.assert_allclose(pb.operator(uxx, uxx, uxx, ux, u, 0.5, x), 0.0, atol=1e-12)
    with pytest.raises(ValueError):
        problems.get("test1").parabolic_problem()

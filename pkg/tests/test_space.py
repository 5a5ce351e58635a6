import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from mipdg import DGFunction, DGSpace, QuadratureRule, build_uniform_mesh, error_norms, l2_project, modified_l2_project


def space(J=4, r=2, a=0.0, b=1.0):
    return DGSpace(build_uniform_mesh(a, b, J), r)


def test_evaluate_projected_polynomial():
    f = l2_project(space(5, 2), lambda x: x**2)
    assert f(0.3) == pytest.approx(0.09, abs=1e-12)
    assert f.evaluate_derivative(0.3) == pytest.approx(0.6, abs=1e-12)


def test_two_sided_node_values():
    sp = space(2, 1)
    f = DGFunction(sp, [1.0, 0.0, 2.0, 0.0])
    assert f.evaluate(0.5, "left") == pytest.approx(1.0)
    assert f.evaluate(0.5, "right") == pytest.approx(2.0)
    with pytest.raises(ValueError):
        f.evaluate(0.5)
    assert sp.zero()(0.77) == 0.0


def test_hat_slopes():
    sp = space(2, 1)
    hat = l2_project(sp, lambda x: 1.0 - np.abs(x - 0.5) * 2.0)
    assert hat.evaluate_derivative(0.5, "left") == pytest.approx(2.0)
    assert hat.evaluate_derivative(0.5, "right") == pytest.approx(-2.0)
    const = l2_project(sp, lambda x: 3.0 + 0 * x)
    np.testing.assert_allclose(const.sample_derivative(np.linspace(0, 1, 7)), 0.0, atol=1e-13)


def test_sample_matches_pointwise_and_keeps_shape():
    sp = space(5, 3)
    f = DGFunction(sp, np.random.default_rng(0).normal(size=sp.ndofs))
    x = np.array([[0.05, 0.33], [0.71, 0.99]])
    vals = f.sample(x)
    assert vals.shape == x.shape
    for xi, v in zip(x.ravel(), vals.ravel()):
        assert v == pytest.approx(f(xi), abs=1e-13)


def test_projection_reproduces_polynomials():
    sp = space(6, 1)
    f = l2_project(sp, lambda x: x)
    assert error_norms(f, lambda x: x)[1] < 1e-13
    f2 = l2_project(space(6, 3), lambda x: 0.5 * x**2)
    assert error_norms(f2, lambda x: 0.5 * x**2)[1] < 1e-12


def test_projection_order_two_for_sin():
    e = [error_norms(l2_project(space(J, 1), np.sin), np.sin)[0] for J in (8, 16, 32)]
    for a, b in zip(e, e[1:]):
        assert math.log2(a / b) == pytest.approx(2.0, abs=0.1)


def test_modified_projection():
    sp = space(8, 1)
    f = modified_l2_project(sp, np.exp)
    g = l2_project(sp, np.exp)
    assert abs(f(0.0) - 1.0) < abs(g(0.0) - 1.0)
    assert abs(f(1.0) - math.e) < abs(g(1.0) - math.e)
    c = modified_l2_project(sp, lambda x: 2.5 + 0 * x)
    np.testing.assert_allclose(c.coeffs, l2_project(sp, lambda x: 2.5 + 0 * x).coeffs, atol=1e-13)
    p = modified_l2_project(space(4, 2), lambda x: x**2 - x)
    assert error_norms(p, lambda x: x**2 - x)[1] < 1e-12


def test_error_norms_trivial():
    sp = space(4, 1)
    assert error_norms(sp.zero(), lambda x: 1.0 + 0 * x) == pytest.approx((1.0, 1.0))


def test_error_norms_independent_quadrature():
    sp = space(3, 2)
    f = DGFunction(sp, np.random.default_rng(1).normal(size=sp.ndofs))
    ref = sum(integrate.quad(lambda x: (f(x) - np.cos(x)) ** 2, sp.mesh.nodes[e], sp.mesh.nodes[e + 1],
                             epsabs=1e-14)[0] for e in range(3))
    assert error_norms(f, np.cos)[0] == pytest.approx(math.sqrt(ref), rel=1e-10)


def test_rejects_degree_zero_and_few_points():
    m = build_uniform_mesh(0, 1, 2)
    with pytest.raises(ValueError):
        DGSpace(m, 0)
    with pytest.raises(ValueError):
        DGSpace(m, 5, n_quad=4)


def test_csv_round_trip(tmp_path):
    sp = space(3, 2)
    f = DGFunction(sp, np.random.default_rng(2).normal(size=sp.ndofs))
    f.to_csv(tmp_path / "f.csv")
    np.testing.assert_array_equal(DGFunction.from_csv(sp, tmp_path / "f.csv").coeffs, f.coeffs)


@given(st.integers(1, 6), st.integers(1, 5), st.integers(0, 3))
def test_projection_idempotent(J, r, seed):
    sp = space(J, r)
    f = DGFunction(sp, np.random.default_rng(seed).normal(size=sp.ndofs))
    np.testing.assert_allclose(l2_project(sp, f.sample).coeffs, f.coeffs, atol=1e-12)
    assert error_norms(f, f.sample)[0] < 1e-13


@given(st.integers(1, 8), st.integers(0, 15))
def test_quadrature_exactness(n, k):
    rule = QuadratureRule.gauss(n)
    if k > rule.exactness:
        return
    a, b = 0.3, 1.1
    x = 0.5 * (a + b) + 0.5 * (b - a) * rule.points
    val = 0.5 * (b - a) * np.sum(rule.weights * x**k)
    exact = (b ** (k + 1) - a ** (k + 1)) / (k + 1)
    assert val == pytest.approx(exact, rel=1e-13)

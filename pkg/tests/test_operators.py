import numpy as np
import pytest
from hypothesis import given, strategies as st

from mipdg import (DifferentialOperator, MomentOperator, NonFiniteOperatorError, check_g_monotonicity,
                   evaluate_fhat, implicit_euler_operator)

T1 = DifferentialOperator(lambda p, q, lam, t, x: 1.0 - p * p,
                          lambda p, q, lam, t, x: (-2.0 * p, 0.0 * p, 0.0 * p))
SMOOTH = DifferentialOperator(lambda p, q, lam, t, x: -p**3 + np.sin(q) * lam + x,
                              lambda p, q, lam, t, x: (-3 * p**2, np.cos(q) * lam, np.sin(q)))
finite = st.floats(-5, 5)
wide = st.floats(-1e6, 1e6)


def test_lf1_examples():
    op = MomentOperator(T1, 2.0)
    assert evaluate_fhat(op, 1, 1, 1, 0, 0, None, 0.5) == 0.0
    assert evaluate_fhat(op, 2, 1, 0, 0, 0, None, 0.5) == 0.0
    assert evaluate_fhat(op.with_alpha(0.0), 0, 3, 7, 0, 0, None, 0.5) == -8.0


def test_lf2_uses_mean():
    op = MomentOperator(T1, 1.0, "LF2")
    # mean 2, moment 1 - 4 + 3 = 0
    assert evaluate_fhat(op, 1, 2, 3, 0, 0, None, 0) == pytest.approx(-3.0)
    with pytest.raises(ValueError):
        MomentOperator(T1, 1.0, "LF3")


def test_non_finite_carries_location():
    op = MomentOperator(DifferentialOperator(lambda p, q, lam, t, x: np.log(p)), 0.0)
    with pytest.raises(NonFiniteOperatorError) as info:
        op(np.array([1.0, -1.0]), np.array([1.0, -1.0]), np.array([1.0, -1.0]), 0.0, 0.0, 0.3,
           np.array([0.1, 0.2]))
    assert info.value.x == pytest.approx(0.2)
    assert info.value.t == 0.3
    assert info.value.args_at_failure["p2"] == -1.0


@pytest.mark.parametrize("variant", ["LF1", "LF2"])
@given(p=wide, q=finite, lam=finite, x=finite, alpha=wide)
def test_consistency_collapse(variant, p, q, lam, x, alpha):
    op = MomentOperator(SMOOTH, alpha, variant)
    assert op(p, p, p, q, lam, None, x) == SMOOTH(p, q, lam, None, x)


@pytest.mark.parametrize("variant", ["LF1", "LF2"])
@given(p1=finite, p2=finite, p3=finite, alpha=finite)
def test_p1_p3_symmetry(variant, p1, p2, p3, alpha):
    op = MomentOperator(SMOOTH, alpha, variant)
    assert op(p1, p2, p3, 0.3, 0.2, None, 0.1) == pytest.approx(op(p3, p2, p1, 0.3, 0.2, None, 0.1), abs=1e-12)


def test_monotonicity_examples():
    samples = [(p, p, p, 0.0, 0.0, None, 0.5) for p in np.linspace(-0.9, 0.9, 7)]
    assert check_g_monotonicity(MomentOperator(T1, 2.0), samples).ok
    rep = check_g_monotonicity(MomentOperator(T1, 0.0), [(1, 1, 1, 0, 0, None, 0.5)])
    assert rep.ok
    assert {c[2] for c in rep.boundary_cases} == {"p1", "p3"}
    assert rep.derivatives[0] == pytest.approx([0.0, -2.0, 0.0], abs=1e-8)
    lin = DifferentialOperator(lambda p, q, lam, t, x: -p)
    rep = check_g_monotonicity(MomentOperator(lin, 3.0), [(0.2, -0.1, 0.4, 0, 0, None, 0)])
    assert rep.ok and not rep.boundary_cases
    assert rep.derivatives[0] == pytest.approx([3.0, -7.0, 3.0], rel=1e-8)
    bad = check_g_monotonicity(MomentOperator(T1, 0.5), [(0, -2, 0, 0, 0, None, 0)])
    assert not bad.ok and bad.violations[0][2] == "p2"


@given(p1=finite, p2=finite, p3=finite, alpha=st.floats(0.1, 10))
def test_fd_monotonicity_matches_analytic(p1, p2, p3, alpha):
    op = MomentOperator(SMOOTH, alpha)
    q, lam, x = 0.7, -0.4, 0.2
    est = check_g_monotonicity(op, [(p1, p2, p3, q, lam, None, x)], delta=1e-5).derivatives[0]
    d1, d2, d3, _, _ = op.partials(p1, p2, p3, q, lam, None, x)
    exact = np.array([d1, d2, d3], float)
    assert est == pytest.approx(exact, rel=1e-6, abs=1e-6)
    assert exact == pytest.approx([alpha, -3 * p2**2 - 2 * alpha, alpha])


def test_fd_partials_match_derivative():
    p = np.linspace(-2, 2, 9)
    fd = SMOOTH.fd_partials(p, 0.5 + 0 * p, 1.5 + 0 * p, None, 0.0)
    an = SMOOTH.derivative(p, 0.5, 1.5, None, 0.0)
    for a, b in zip(fd, an):
        np.testing.assert_allclose(a, b, rtol=1e-7, atol=1e-8)


def test_implicit_euler_operator():
    op = MomentOperator(SMOOTH, 2.0)
    G = implicit_euler_operator(op, 0.1)
    assert G.alpha == pytest.approx(0.2)
    args = (0.3, 0.5, 0.1, 0.2, 1.1, 0.0, 0.4)
    assert G(*args) == pytest.approx(1.1 + 0.1 * op(*args))
    d = G.partials(*args)
    assert d[4] == pytest.approx(1.0 + 0.1 * np.sin(0.2))
    assert implicit_euler_operator(op, 0.0)(*args) == pytest.approx(1.1)

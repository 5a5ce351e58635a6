import numpy as np
import pytest

from mipdg import (DGSpace, NoConvergence, PenaltyConfig, assemble, build_uniform_mesh, error_norms, residual,
                   split_solve)
from mipdg import problems
from mipdg.study import initial_guess

T1 = problems.get("test1")
PEN = PenaltyConfig.equal(2.0)


def run(alpha, J, p_value=-0.99, **kw):
    sp = DGSpace(build_uniform_mesh(0, 1, J), 1)
    pb = T1.elliptic_problem(alpha)
    guess = initial_guess(T1, pb, sp, "u-", p_value)
    state, report = split_solve(pb, sp, PEN, guess, **kw)
    return pb, sp, state, report


def nearest(u):
    d = {k: error_norms(u, g)[0] for k, g in T1.alternatives.items()}
    k = min(d, key=d.get)
    return k, d[k]


def test_alpha_four_converges_to_convex_root():
    errs = []
    for J in (10, 20):
        _, _, state, report = run(4.0, J)
        assert report.converged
        name, err = nearest(state.u)
        assert name == "u+"
        errs.append(err)
    assert 4.3e-4 / 3 < errs[1] < 4.3e-4 * 3
    assert np.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.25)


def test_alpha_zero_keeps_concave_root():
    _, _, state, _ = run(0.0, 40)
    name, err = nearest(state.u)
    assert name == "u-"
    assert 1.1e-4 / 3 < err < 1.1e-4 * 3


def test_far_p_guess_fails():
    with pytest.raises(NoConvergence) as info:
        run(4.0, 10, p_value=-1.5)
    assert info.value.state is not None


@pytest.mark.parametrize("alpha, expected", [(4.0, "u+"), (2.0, "u+"), (1.1, "u+"), (0.99, "u-"), (0.0, "u-")])
def test_threshold(alpha, expected):
    _, _, state, _ = run(alpha, 20)
    assert nearest(state.u)[0] == expected


@pytest.mark.parametrize("alpha", [4.0, 0.0])
def test_fixed_point_is_a_root(alpha):
    tol = 1e-8
    pb, sp, state, report = run(alpha, 10, tol=tol)
    r = residual(pb, assemble(sp, PEN), state)
    assert np.max(np.abs(r)) <= 10 * tol
    assert report.root_residual == pytest.approx(np.max(np.abs(r)), rel=1e-6, abs=1e-14)
    np.testing.assert_allclose(state.p2.coeffs, 0.5 * (state.p1.coeffs + state.p3.coeffs), atol=1e-9)
    m = state.moment().coeffs
    assert np.sqrt(np.sum(sp.mass_diag * m * m)) < 1e-8


def test_stall_detected_only_with_verification():
    with pytest.raises(NoConvergence, match="non-root"):
        run(0.99, 10)
    _, _, _, report = run(0.99, 10, verify=False)
    assert report.converged and report.root_residual > 1e-7


def test_sweep_report_csv(tmp_path):
    _, _, _, report = run(4.0, 10)
    report.to_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "sweep,dp2,moment"
    assert len(lines) == report.sweeps + 1
    assert report.history[-1][1] <= 1e-8


def test_sweep_limit():
    with pytest.raises(NoConvergence, match="no convergence"):
        run(4.0, 10, max_sweeps=2)

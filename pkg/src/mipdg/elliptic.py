"""Damped Newton solution of the mixed nonlinear system.

Unknowns are ``(u, p1, p2, p3)``, stacked coefficient vectors of length
``4 * ndofs``.  Block 0 is the Galerkin projection of the numerical operator,
blocks 1-3 are the linear flux equations ``M p_i + B_i u - f_i``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .forms import AssembledForms, PenaltyConfig, assemble
from .operators import MomentOperator, NonFiniteOperatorError
from .space import DGFunction, DGSpace, l2_project

log = logging.getLogger(__name__)


class NonConvergence(RuntimeError):
    """Nonlinear iteration failed; keeps the best iterate and the history."""

    def __init__(self, message, best_state=None, history=None):
        super().__init__(message)
        self.best_state = best_state
        self.history = history or []


@dataclass(frozen=True)
class EllipticProblem:
    """``Fh(p1, p2, p3, u', u, x) = load`` on ``(a, b)`` with Dirichlet data.

    ``t`` is forwarded to time-dependent operators; ``load`` (a DG function)
    is the right-hand side of the nonlinear equation, zero when absent.
    """

    operator: MomentOperator
    a: float
    b: float
    ua: float
    ub: float
    t: float | None = None
    load: DGFunction | None = None


@dataclass
class SolverState:
    u: DGFunction
    p1: DGFunction
    p2: DGFunction
    p3: DGFunction

    def __post_init__(self):
        sp = self.u.space
        if any(f.space is not sp for f in (self.p1, self.p2, self.p3)):
            raise ValueError("all state components must share one space")

    @property
    def space(self) -> DGSpace:
        return self.u.space

    @property
    def p(self) -> tuple[DGFunction, DGFunction, DGFunction]:
        return self.p1, self.p2, self.p3

    def flat(self) -> np.ndarray:
        return np.concatenate([self.u.coeffs, self.p1.coeffs, self.p2.coeffs, self.p3.coeffs])

    @classmethod
    def from_flat(cls, space: DGSpace, x) -> "SolverState":
        parts = np.split(np.asarray(x, dtype=float), 4)
        return cls(*(DGFunction(space, c) for c in parts))

    def moment(self) -> DGFunction:
        return self.p1 - 2.0 * self.p2 + self.p3

    def copy(self) -> "SolverState":
        return SolverState(self.u.copy(), self.p1.copy(), self.p2.copy(), self.p3.copy())


@dataclass(frozen=True)
class NewtonConfig:
    tol: float = 1e-10
    max_iter: int = 50
    backtrack: float = 0.5
    max_halvings: int = 40
    jacobian: str = "finite-difference"     # or "analytic"

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.jacobian not in ("finite-difference", "analytic"):
            raise ValueError(f"unknown jacobian mode {self.jacobian!r}")


@dataclass
class NewtonReport:
    iterations: int = 0
    residual: float = np.inf
    history: list = field(default_factory=list)   # (iteration, residual, step, halvings)
    converged: bool = False

    def to_csv(self, path) -> None:
        import csv
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "residual", "step", "halvings"])
            w.writerows(self.history)


class MixedSystem:
    """Residual and Jacobian of the full mixed system for one problem."""

    def __init__(self, problem: EllipticProblem, forms: AssembledForms, finite_difference: bool = True):
        self.problem = problem
        self.forms = forms
        self.space = forms.space
        self.finite_difference = finite_difference
        space = self.space
        self.n = space.ndofs
        self.f = tuple(forms.rhs(i, problem.ua, problem.ub) for i in (1, 2, 3))
        if problem.load is not None:
            if problem.load.space is not space:
                raise ValueError("load lives on a different space")
            self.load = space.mass_diag * problem.load.coeffs
        else:
            self.load = np.zeros(self.n)

    def _point_args(self, u, p1, p2, p3):
        sp = self.space
        return (sp.quad_values(p1), sp.quad_values(p2), sp.quad_values(p3),
                sp.quad_derivatives(u), sp.quad_values(u), self.problem.t, sp.x_quad)

    def nonlinear_block(self, u, p1, p2, p3) -> np.ndarray:
        vals = self.problem.operator(*self._point_args(u, p1, p2, p3))
        return self.space.load(vals) - self.load

    def nonlinear_jacobian(self, u, p1, p2, p3):
        """Sparse blocks ``(d/du, d/dp1, d/dp2, d/dp3)`` of the nonlinear block."""
        sp = self.space
        d1, d2, d3, dq, dl = self.problem.operator.partials(
            *self._point_args(u, p1, p2, p3), finite_difference=self.finite_difference)
        Ju = sp.weighted_products(dl) + sp.weighted_derivative_products(dq)
        return Ju, sp.weighted_products(d1), sp.weighted_products(d2), sp.weighted_products(d3)

    def residual(self, x) -> np.ndarray:
        u, p1, p2, p3 = np.split(x, 4)
        m = self.forms.mass
        B = self.forms.B
        return np.concatenate([
            self.nonlinear_block(u, p1, p2, p3),
            m * p1 + B[0] @ u - self.f[0],
            m * p2 + B[1] @ u - self.f[1],
            m * p3 + B[2] @ u - self.f[2],
        ])

    def jacobian(self, x) -> np.ndarray:
        n = self.n
        u, p1, p2, p3 = np.split(x, 4)
        Ju, J1, J2, J3 = self.nonlinear_jacobian(u, p1, p2, p3)
        Jac = np.zeros((4 * n, 4 * n))
        Jac[:n, :n] = Ju.toarray()
        Jac[:n, n:2 * n] = J1.toarray()
        Jac[:n, 2 * n:3 * n] = J2.toarray()
        Jac[:n, 3 * n:] = J3.toarray()
        M = np.diag(self.forms.mass)
        for i in range(3):
            rows = slice((i + 1) * n, (i + 2) * n)
            Jac[rows, :n] = self.forms.B[i]
            Jac[rows, (i + 1) * n:(i + 2) * n] = M
        return Jac

    # reduced formulation: p_i eliminated through the flux equations

    def reconstitute(self, u) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        m = self.forms.mass
        return tuple((self.f[i] - self.forms.B[i] @ u) / m for i in range(3))

    def reduced_residual(self, u) -> np.ndarray:
        return self.nonlinear_block(u, *self.reconstitute(u))

    def reduced_jacobian(self, u) -> np.ndarray:
        p = self.reconstitute(u)
        Ju, *Jp = self.nonlinear_jacobian(u, *p)
        m = self.forms.mass
        out = Ju.toarray()
        for i in range(3):
            out -= Jp[i] @ (self.forms.B[i] / m[:, None])
        return out


_ARMIJO = 1e-4


def _max_norm(r) -> float:
    return float(np.max(np.abs(r))) if r.size else 0.0


def _newton_direction(Jac, r, rcond_min=1e-13):
    """Newton step; minimum-norm least squares when the Jacobian is singular."""
    lu, piv, info = sla.lapack.dgetrf(Jac)
    if info == 0:
        anorm = np.linalg.norm(Jac, 1)
        rc, _ = sla.lapack.dgecon(lu, anorm, norm="1")
        if rc > rcond_min:
            dx, _ = sla.lapack.dgetrs(lu, piv, -r)
            return dx
    return sla.lstsq(Jac, -r, cond=1e-12)[0]


def newton(fun, jac, x0, cfg: NewtonConfig, wrap=lambda x: x):
    """Damped Newton with Armijo backtracking on ``0.5 * ||r||_2**2``.

    Convergence is declared on the max-norm of the residual. Steps whose
    trial residual is non-finite count as rejected and are halved.
    ``wrap`` converts an iterate into the object stored on failure.
    """
    report = NewtonReport()
    x = np.array(x0, dtype=float)
    try:
        r = fun(x)
    except NonFiniteOperatorError as exc:
        raise NonConvergence(f"initial guess is not admissible: {exc}", wrap(x), report.history) from exc
    norm = _max_norm(r)
    merit = 0.5 * (r @ r)
    report.history.append((0, norm, 0.0, 0))
    for it in range(1, cfg.max_iter + 1):
        if norm <= cfg.tol:
            break
        try:
            dx = _newton_direction(jac(x), r)
        except (sla.LinAlgError, ValueError, NonFiniteOperatorError) as exc:
            raise NonConvergence(f"singular Newton system at iteration {it}", wrap(x), report.history) from exc
        if not np.all(np.isfinite(dx)):
            raise NonConvergence(f"non-finite Newton step at iteration {it}", wrap(x), report.history)
        step = 1.0
        for halvings in range(cfg.max_halvings + 1):
            x_try = x + step * dx
            try:
                r_try = fun(x_try)
                m_try = 0.5 * (r_try @ r_try)
            except NonFiniteOperatorError:
                m_try = np.inf
            if m_try <= (1.0 - _ARMIJO * step) * merit:
                break
            step *= cfg.backtrack
        else:
            report.iterations = it
            report.residual = norm
            raise NonConvergence(
                f"line search failed at iteration {it} (residual {norm:.3e})", wrap(x), report.history)
        x, r, merit = x_try, r_try, m_try
        norm = _max_norm(r)
        report.history.append((it, norm, step * _max_norm(dx), halvings))
        log.debug("newton it=%d residual=%.3e halvings=%d", it, norm, halvings)
        report.iterations = it
    report.residual = norm
    if norm > cfg.tol:
        raise NonConvergence(
            f"no convergence in {cfg.max_iter} iterations (residual {norm:.3e})", wrap(x), report.history)
    report.converged = True
    return x, report


def residual(problem: EllipticProblem, forms: AssembledForms, state: SolverState) -> np.ndarray:
    """Stacked residual of the four equations at ``state``."""
    return MixedSystem(problem, forms).residual(state.flat())


def secant_initial_guess(problem: EllipticProblem, space: DGSpace) -> SolverState:
    """Projection of the line through the boundary data, with ``p_i = 0``."""
    a, b, ua, ub = problem.a, problem.b, problem.ua, problem.ub
    u = l2_project(space, lambda x: ua + (ub - ua) * (x - a) / (b - a))
    return SolverState(u, space.zero(), space.zero(), space.zero())


def _check(problem, space, guess):
    mesh = space.mesh
    if not (np.isclose(mesh.a, problem.a) and np.isclose(mesh.b, problem.b)):
        raise ValueError("mesh does not cover the problem domain")
    if guess is not None and guess.space is not space:
        raise ValueError("initial guess lives on a different space")


def solve(problem: EllipticProblem, space: DGSpace, cfg: PenaltyConfig,
          newton_cfg: NewtonConfig | None = None, guess: SolverState | None = None):
    """Solve the full mixed system; returns ``(state, report)``."""
    newton_cfg = newton_cfg or NewtonConfig()
    _check(problem, space, guess)
    if guess is None:
        guess = secant_initial_guess(problem, space)
    system = MixedSystem(problem, assemble(space, cfg), newton_cfg.jacobian == "finite-difference")
    x, report = newton(system.residual, system.jacobian, guess.flat(), newton_cfg,
                       wrap=lambda x: SolverState.from_flat(space, x))
    return SolverState.from_flat(space, x), report


def solve_reduced(problem: EllipticProblem, space: DGSpace, cfg: PenaltyConfig,
                  newton_cfg: NewtonConfig | None = None, guess: SolverState | None = None):
    """Newton on the ``u`` block only, with ``p_i`` eliminated exactly."""
    newton_cfg = newton_cfg or NewtonConfig()
    _check(problem, space, guess)
    if guess is None:
        guess = secant_initial_guess(problem, space)
    system = MixedSystem(problem, assemble(space, cfg), newton_cfg.jacobian == "finite-difference")

    def state_of(u):
        return SolverState(DGFunction(space, u), *(DGFunction(space, p) for p in system.reconstitute(u)))

    u, report = newton(system.reduced_residual, system.reduced_jacobian, guess.u.coeffs,
                       newton_cfg, wrap=state_of)
    return state_of(u), report

"""Forward and backward Euler in time for ``u_t + F(u_xx, u_x, u, t, x) = 0``."""
from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .elliptic import EllipticProblem, NewtonConfig, NonConvergence, SolverState, solve
from .forms import AssembledForms, PenaltyConfig, assemble
from .operators import MomentOperator, NonFiniteOperatorError, implicit_euler_operator
from .space import DGFunction, DGSpace, error_norms, l2_project

log = logging.getLogger(__name__)


class Unstable(RuntimeError):
    """The explicit scheme blew up."""

    def __init__(self, message, step=None, time=None):
        super().__init__(message)
        self.step = step
        self.time = time


@dataclass(frozen=True)
class ParabolicProblem:
    operator: MomentOperator
    a: float
    b: float
    T: float
    ua: Callable[[float], float]
    ub: Callable[[float], float]
    u0: Callable

    def __post_init__(self):
        ga, gb = float(np.asarray(self.u0(np.array([self.a])))[0]), float(np.asarray(self.u0(np.array([self.b])))[0])
        if not (math.isclose(ga, self.ua(0.0), abs_tol=1e-10) and math.isclose(gb, self.ub(0.0), abs_tol=1e-10)):
            warnings.warn("initial datum is not compatible with the boundary data at t = 0", stacklevel=3)


@dataclass(frozen=True)
class TimeGrid:
    T: float
    steps: int

    def __post_init__(self):
        if self.T <= 0 or self.steps < 1:
            raise ValueError("need T > 0 and at least one step")

    @property
    def dt(self) -> float:
        return self.T / self.steps

    def time(self, n: int) -> float:
        return self.T if n == self.steps else n * self.dt

    @classmethod
    def from_dt(cls, T: float, dt: float) -> "TimeGrid":
        """Grid with step as close to ``dt`` as possible without exceeding it."""
        if dt <= 0:
            raise ValueError("dt must be positive")
        m = T / dt
        steps = int(round(m)) if abs(m - round(m)) < 1e-9 * max(1.0, m) else int(math.ceil(m))
        return cls(T, max(steps, 1))

    @classmethod
    def from_cfl(cls, T: float, kappa: float, h: float) -> "TimeGrid":
        """``dt ~ kappa h^2``, rounded down so the steps end exactly at ``T``."""
        return cls.from_dt(T, kappa * h * h)


def discrete_second_derivatives(v: DGFunction, t: float, problem: ParabolicProblem, forms: AssembledForms):
    """The left, average and right discrete second derivatives of ``v`` at time ``t``."""
    space = forms.space
    if v.space is not space:
        raise ValueError("function lives on a different space")
    coeffs = forms.second_derivatives(v.coeffs, problem.ua(t), problem.ub(t))
    return tuple(DGFunction(space, c) for c in coeffs)


class ForwardEuler:
    """Explicit stepper with all linear maps precomputed.

    One step is: discrete second derivatives of ``u^n`` at ``t^n``, pointwise
    ``u - dt Fh`` at the quadrature points, then the modified L2 projection
    with boundary data at ``t^{n+1}``.
    """

    def __init__(self, problem: ParabolicProblem, forms: AssembledForms):
        self.problem = problem
        self.forms = forms
        space = self.space = forms.space
        E = space.value_matrix.toarray()
        D = space.derivative_matrix.toarray()
        minv = 1.0 / forms.mass
        self.nq = E.shape[0]
        self.E = E
        self.L = np.vstack([E, D] + [-E @ (forms.B[i] * minv[:, None]) for i in range(3)])
        self.qa = [E @ (forms.fa[i] * minv) for i in range(3)]
        self.qb = [E @ (forms.fb[i] * minv) for i in range(3)]
        self.x = space.x_quad.ravel()
        w = space.w_quad.ravel()
        fac, va, vb, s = space._nitsche_factor
        self.G = sla.cho_solve(fac, E.T * w[None, :])
        self.na = sla.cho_solve(fac, s * va)
        self.nb = sla.cho_solve(fac, s * vb)

    def split(self, coeffs, t):
        nq = self.nq
        y = self.L @ coeffs
        ua, ub = self.problem.ua(t), self.problem.ub(t)
        q = [y[(2 + i) * nq:(3 + i) * nq] + self.qa[i] * ua + self.qb[i] * ub for i in range(3)]
        return y[:nq], y[nq:2 * nq], q

    def step(self, coeffs, t, dt):
        u, du, q = self.split(coeffs, t)
        fh = self.problem.operator(q[0], q[1], q[2], du, u, t, self.x)
        t1 = t + dt
        return self.G @ (u - dt * fh) + self.problem.ua(t1) * self.na + self.problem.ub(t1) * self.nb


def forward_euler_step(u: DGFunction, t: float, problem: ParabolicProblem, forms: AssembledForms, dt: float) -> DGFunction:
    return DGFunction(forms.space, ForwardEuler(problem, forms).step(u.coeffs, t, dt))


def backward_euler_step(prev: SolverState | DGFunction, t: float, problem: ParabolicProblem,
                        forms: AssembledForms, dt: float, newton_cfg: NewtonConfig | None = None):
    """One implicit step ending at time ``t``; returns ``(state, report)``.

    ``prev`` may be a full state (its ``p_i`` become the initial guesses) or
    just ``u^{n-1}``.
    """
    space = forms.space
    if isinstance(prev, DGFunction):
        prev = SolverState(prev, *discrete_second_derivatives(prev, t - dt, problem, forms))
    step_problem = EllipticProblem(
        implicit_euler_operator(problem.operator, dt), problem.a, problem.b,
        problem.ua(t), problem.ub(t), t=t, load=prev.u)
    return solve(step_problem, space, forms.cfg, newton_cfg, guess=prev)


@dataclass
class TransientResult:
    final: DGFunction
    state: SolverState | None
    grid: TimeGrid
    diagnostics: list = field(default_factory=list)   # (step, time, linf, l2, margin)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "time", "linf", "l2", "margin"])
            for row in self.diagnostics:
                w.writerow(["" if v is None else v for v in row])


def run_transient(problem: ParabolicProblem, space: DGSpace, cfg: PenaltyConfig, grid: TimeGrid,
                  scheme: str = "forward", exact=None, newton_cfg: NewtonConfig | None = None,
                  blowup: float | None = None, record_every: int | None = None) -> TransientResult:
    """March from ``P_h u_0`` to ``grid.T``.

    ``exact(x, t)``, when given, is used for the per-record errors.  Forward
    runs raise :class:`Unstable` once ``max |u|`` exceeds ``blowup``
    (default ``1e6 (1 + max |u^0|)``); backward runs raise
    :class:`NonConvergence` from the inner solve.
    """
    if scheme not in ("forward", "backward"):
        raise ValueError(f"scheme must be 'forward' or 'backward', got {scheme!r}")
    forms = assemble(space, cfg)
    u = l2_project(space, problem.u0)
    if record_every is None:
        record_every = max(1, grid.steps // 200)
    diagnostics = []

    def record(n, t, coeffs, margin):
        f = DGFunction(space, coeffs)
        if exact is not None:
            l2, linf = error_norms(f, lambda x: exact(x, t))
        else:
            l2, linf = None, float(np.max(np.abs(f.quad_values())))
        diagnostics.append((n, t, linf, l2, margin))

    dt = grid.dt
    if scheme == "forward":
        stepper = ForwardEuler(problem, forms)
        c = u.coeffs.copy()
        bound = blowup if blowup is not None else 1e6 * (1.0 + np.max(np.abs(u.quad_values())))
        record(0, 0.0, c, bound)
        for n in range(grid.steps):
            t = grid.time(n)
            try:
                with np.errstate(over="ignore", invalid="ignore"):
                    c = stepper.step(c, t, dt)
            except NonFiniteOperatorError as exc:
                raise Unstable(f"non-finite operator value at step {n + 1}", n + 1, grid.time(n + 1)) from exc
            size = float(np.max(np.abs(stepper.E @ c))) if np.all(np.isfinite(c)) else np.inf
            if not size <= bound:
                raise Unstable(f"solution exceeded {bound:.3e} at step {n + 1}", n + 1, grid.time(n + 1))
            if (n + 1) % record_every == 0 or n + 1 == grid.steps:
                record(n + 1, grid.time(n + 1), c, bound - size)
        return TransientResult(DGFunction(space, c), None, grid, diagnostics)

    state = SolverState(u, *discrete_second_derivatives(u, 0.0, problem, forms))
    record(0, 0.0, u.coeffs, 0.0)
    for n in range(1, grid.steps + 1):
        t = grid.time(n)
        try:
            state, report = backward_euler_step(state, t, problem, forms, dt, newton_cfg)
        except NonConvergence as exc:
            raise NonConvergence(f"step {n} (t = {t:g}): {exc}", exc.best_state, exc.history) from exc
        if n % record_every == 0 or n == grid.steps:
            record(n, t, state.u.coeffs, report.residual)
    return TransientResult(state.u, state, grid, diagnostics)

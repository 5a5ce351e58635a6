"""Fixed-point splitting for the mixed system.

Each sweep solves the nonlinear equation for ``p2`` with ``u, p1, p3``
frozen, then the three linear flux equations in turn (Gauss-Seidel order):
``i = 2`` for ``u``, ``i = 1`` for ``p1`` and ``i = 3`` for ``p3``.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .elliptic import EllipticProblem, MixedSystem, SolverState, _newton_direction
from .forms import PenaltyConfig, assemble
from .operators import NonFiniteOperatorError
from .space import DGFunction, DGSpace

log = logging.getLogger(__name__)


class NoConvergence(RuntimeError):
    """Splitting sweeps did not settle; ``history`` holds the sweep rows."""

    def __init__(self, message, state=None, history=None):
        super().__init__(message)
        self.state = state
        self.history = history or []


@dataclass
class SweepReport:
    history: list = field(default_factory=list)    # (sweep, ||dp2||, ||p1 - 2 p2 + p3||)
    converged: bool = False
    p2_failures: int = 0    # sweeps whose p2 solve stopped short of its tolerance
    root_residual: float = np.nan   # max-norm of the full mixed residual at exit

    @property
    def sweeps(self) -> int:
        return len(self.history)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sweep", "dp2", "moment"])
            w.writerows(self.history)


def _l2(space: DGSpace, c) -> float:
    return float(np.sqrt(np.sum(space.mass_diag * c * c)))


def _solve_p2(system: MixedSystem, u, p1, p2, p3, tol=1e-12, max_iter=50, max_halvings=30):
    """Damped Newton on the ``p2`` coefficients (block diagonal Jacobian).

    Like a library root finder it returns its best iterate together with a
    success flag instead of raising, so a sweep can proceed past a singular
    start.
    """
    r = system.nonlinear_block(u, p1, p2, p3)
    merit = 0.5 * (r @ r)
    for _ in range(max_iter):
        if np.max(np.abs(r)) <= tol:
            return p2, True
        J2 = system.nonlinear_jacobian(u, p1, p2, p3)[2].toarray()
        dp = _newton_direction(J2, r)
        step = 1.0
        for _ in range(max_halvings + 1):
            trial = p2 + step * dp
            try:
                r_try = system.nonlinear_block(u, p1, trial, p3)
                m_try = 0.5 * (r_try @ r_try)
            except NonFiniteOperatorError:
                m_try = np.inf
            if m_try <= (1.0 - 1e-4 * step) * merit:
                break
            step *= 0.5
        else:
            return p2, False
        p2, r, merit = trial, r_try, m_try
    return p2, bool(np.max(np.abs(r)) <= tol)


def split_solve(problem: EllipticProblem, space: DGSpace, cfg: PenaltyConfig, guess: SolverState,
                tol: float = 1e-8, max_sweeps: int = 500, p2_tol: float = 1e-12, p2_max_iter: int = 50,
                verify: bool = True):
    """Gauss-Seidel splitting sweeps; returns ``(state, report)``.

    Stops once the L2 change of ``p2`` between sweeps is at most ``tol``.
    A stalled ``p2`` solve also leaves ``p2`` unchanged, so the stopping rule
    alone does not certify a root.  With ``verify`` the exit state must
    satisfy the full mixed residual to ``10 * tol`` (max-norm), otherwise
    ``NoConvergence`` is raised; without it the state is returned as is and
    ``report.root_residual`` tells the two outcomes apart.
    Raises ``NoConvergence`` on stagnation, blow-up or a failed ``p2`` solve.
    """
    if guess.space is not space:
        raise ValueError("guess lives on a different space")
    forms = assemble(space, cfg)
    system = MixedSystem(problem, forms, finite_difference=False)
    m = forms.mass
    f1, f2, f3 = system.f
    lu2 = sla.lu_factor(forms.B[1])
    u, p1, p2, p3 = (g.coeffs.copy() for g in (guess.u, guess.p1, guess.p2, guess.p3))
    report = SweepReport()

    def state():
        return SolverState(*(DGFunction(space, c) for c in (u, p1, p2, p3)))

    for sweep in range(1, max_sweeps + 1):
        try:
            p2_new, solved = _solve_p2(system, u, p1, p2, p3, p2_tol, p2_max_iter)
        except NonFiniteOperatorError as exc:
            raise NoConvergence(f"operator not finite in sweep {sweep}: {exc}", state(), report.history) from exc
        if not solved:
            report.p2_failures += 1
        dp2 = _l2(space, p2_new - p2)
        p2 = p2_new
        u = sla.lu_solve(lu2, f2 - m * p2)
        p1 = (f1 - forms.B[0] @ u) / m
        p3 = (f3 - forms.B[2] @ u) / m
        moment = _l2(space, p1 - 2.0 * p2 + p3)
        report.history.append((sweep, dp2, moment))
        log.debug("sweep %d dp2=%.3e moment=%.3e", sweep, dp2, moment)
        if not np.isfinite(dp2) or not np.all(np.isfinite(u)):
            raise NoConvergence(f"sweep {sweep} produced non-finite values", state(), report.history)
        if dp2 <= tol:
            report.converged = True
            report.root_residual = float(np.max(np.abs(system.residual(np.concatenate([u, p1, p2, p3])))))
            if verify and report.root_residual > 10.0 * tol:
                raise NoConvergence(
                    f"sweeps stalled at sweep {sweep} on a non-root (residual {report.root_residual:.3e})",
                    state(), report.history)
            return state(), report
    raise NoConvergence(f"no convergence in {max_sweeps} sweeps", state(), report.history)

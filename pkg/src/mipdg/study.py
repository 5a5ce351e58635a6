"""Refinement studies and convergence tables."""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import problems
from .elliptic import NewtonConfig, NonConvergence, SolverState, secant_initial_guess, solve
from .forms import PenaltyConfig
from .mesh import build_uniform_mesh
from .operators import NonFiniteOperatorError
from .parabolic import ParabolicProblem, TimeGrid, Unstable, run_transient
from .space import DGFunction, DGSpace, error_norms, l2_project
from .splitting import NoConvergence, split_solve

log = logging.getLogger(__name__)

MODES = ("elliptic", "forward", "backward", "splitting")
NORMS = ("L2", "Linf")


def expected_spatial_order(r: int) -> int:
    """Observed L2 order of the method: ``r + 1`` for odd ``r``, ``r`` for even."""
    if r < 1:
        raise ValueError("degree must be at least 1")
    return r + 1 if r % 2 else r


def observed_order(e_coarse: float, e_fine: float, h_coarse: float, h_fine: float) -> float:
    if not (e_coarse > 0 and e_fine > 0):
        return math.nan
    ratio = h_coarse / h_fine
    if ratio == 2.0:
        return math.log2(e_coarse / e_fine)
    return math.log(e_coarse / e_fine) / math.log(ratio)


@dataclass
class StudyConfig:
    test: str
    mode: str = "elliptic"
    meshes: tuple = ()                 # element counts J; default from the registry
    degrees: tuple = ()
    gamma: tuple | None = None
    epsilon: int | None = None
    alpha: float | None = None
    kappa_t: tuple = ()                # CFL constants, dt = kappa_t * h^2
    dt: tuple = ()                     # explicit time steps
    final_time: float | None = None
    variant: str = "LF1"
    guess: str = "secant"              # secant | u+ | u- | mix:u+ | mix:u- (1/3 secant + 2/3 named)
    p_guess: float = 0.0               # constant initial p_i (splitting and guesses)
    tol: float = 1e-10
    split_tol: float = 1e-8
    format: str = "csv"
    out: str | None = None
    plot_dir: str | None = None

    def __post_init__(self):
        case = problems.get(self.test)
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if case.is_parabolic is False and self.mode in ("forward", "backward"):
            raise ValueError(f"{self.test} is elliptic; mode {self.mode!r} needs a parabolic test")
        if self.mode == "splitting" and case.is_parabolic:
            raise ValueError("splitting mode needs an elliptic test")
        self.meshes = tuple(int(j) for j in (self.meshes or case.params["meshes"]))
        self.degrees = tuple(int(r) for r in (self.degrees or case.params["degrees"]))
        if any(r < 1 for r in self.degrees):
            raise ValueError("degree must be at least 1")
        if any(j < 1 for j in self.meshes):
            raise ValueError("element counts must be positive")
        if any(b <= a for a, b in zip(self.meshes, self.meshes[1:])):
            raise ValueError("mesh sequence must be strictly refining")
        if self.format not in ("csv", "markdown"):
            raise ValueError("format must be 'csv' or 'markdown'")
        self.kappa_t = tuple(float(k) for k in self.kappa_t)
        self.dt = tuple(float(d) for d in self.dt)
        if self.kappa_t and self.dt:
            raise ValueError("give either kappa_t or dt, not both")
        if any(v <= 0 for v in self.kappa_t + self.dt):
            raise ValueError("time parameters must be positive")
        if self.mode == "forward" and not (self.kappa_t or self.dt):
            self.kappa_t = (case.params["kappa_t"],)
        if self.mode == "backward" and not (self.kappa_t or self.dt):
            self.dt = (case.params["dt"],)

    @property
    def case(self) -> problems.TestCase:
        return problems.get(self.test)

    def penalty(self) -> PenaltyConfig:
        over = {}
        if self.gamma is not None:
            over["gamma"] = tuple(self.gamma)
        if self.epsilon is not None:
            over["epsilon"] = self.epsilon
        return self.case.penalty(**over)

    @property
    def time_study(self) -> bool:
        """Several time steps on a single mesh: the table runs over dt."""
        return len(self.meshes) == 1 and len(self.kappa_t or self.dt) > 1


@dataclass
class ConvergenceTable:
    rows: list = field(default_factory=list)   # (r, norm, h, error, order); error nan if failed
    failures: list = field(default_factory=list)   # (r, h, message)
    step_label: str = "h"

    def add_sequence(self, r: int, hs, errors) -> None:
        """Append one degree's rows; ``errors`` maps norm -> list (nan for failed runs)."""
        for norm in NORMS:
            es = errors[norm]
            for k, (h, e) in enumerate(zip(hs, es)):
                order = observed_order(es[k - 1], e, hs[k - 1], h) if k else None
                self.rows.append((r, norm, h, e, order))

    def errors(self, r: int, norm: str = "L2") -> list:
        return [row[3] for row in self.rows if row[0] == r and row[1] == norm]

    def orders(self, r: int, norm: str = "L2") -> list:
        return [row[4] for row in self.rows if row[0] == r and row[1] == norm][1:]

    def steps(self, r: int) -> list:
        return [row[2] for row in self.rows if row[0] == r and row[1] == "L2"]

    @staticmethod
    def _fmt_err(e) -> str:
        return "failed" if not np.isfinite(e) else f"{e:.1e}"

    @staticmethod
    def _fmt_order(o) -> str:
        return "" if o is None or not np.isfinite(o) else f"{o:.2f}"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "norm", self.step_label, "error", "order"])
        for r, norm, h, e, o in self.rows:
            w.writerow([r, norm, f"{h:.6g}", self._fmt_err(e), self._fmt_order(o)])
        return buf.getvalue()

    def to_markdown(self) -> str:
        degrees = sorted({row[0] for row in self.rows})
        steps = self.steps(degrees[0]) if degrees else []
        head = ["r", "Norm"] + [f"{self.step_label} = {h:.4g}" for h in steps]
        lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
        for r in degrees:
            for norm in NORMS:
                cells = []
                for _, _, _, e, o in (row for row in self.rows if row[0] == r and row[1] == norm):
                    c = self._fmt_err(e)
                    if o is not None:
                        c += f" ({self._fmt_order(o) or '-'})"
                    cells.append(c)
                lines.append("| " + " | ".join([str(r), norm] + cells) + " |")
        for r, h, msg in self.failures:
            lines.append(f"\nfailed: r={r}, {self.step_label}={h:.4g}: {msg}")
        return "\n".join(lines) + "\n"

    def render(self, fmt: str = "csv") -> str:
        return self.to_csv() if fmt == "csv" else self.to_markdown()


def initial_guess(case: problems.TestCase, problem, space: DGSpace, recipe: str = "secant",
                  p_value: float = 0.0) -> SolverState:
    """Guess recipes: ``secant``, an exact solution name, or ``mix:<name>``."""
    sec = secant_initial_guess(problem, space)
    p = l2_project(space, lambda x: np.full_like(x, p_value))
    if recipe == "secant":
        u = sec.u
    else:
        mix = recipe.startswith("mix:")
        name = recipe[4:] if mix else recipe
        target = case.alternatives.get(name)
        if target is None:
            raise ValueError(f"unknown guess {recipe!r}; solutions: {sorted(case.alternatives)}")
        u = l2_project(space, target)
        if mix:
            u = sec.u * (1.0 / 3.0) + u * (2.0 / 3.0)
    return SolverState(u, p, p.copy(), p.copy())


def dump_samples(path, f: DGFunction, exact, n_elements: int) -> None:
    """Write ``x, u_h, exact`` at ``10 J`` uniform points."""
    mesh = f.space.mesh
    x = np.linspace(mesh.a, mesh.b, 10 * n_elements)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "u_h", "exact"])
        for xi, ui, ei in zip(x, f.sample(x), np.asarray(exact(x), float) * np.ones_like(x)):
            w.writerow([f"{xi:.12g}", f"{ui:.12g}", f"{ei:.12g}"])


_FAILURES = (NonConvergence, NoConvergence, Unstable, NonFiniteOperatorError, np.linalg.LinAlgError)


def _single_run(cfg: StudyConfig, r: int, J: int, step: float | None):
    """One cell: returns ``(u_h, exact callable)``."""
    case = cfg.case
    mesh = build_uniform_mesh(case.a, case.b, J)
    space = DGSpace(mesh, r)
    pen = cfg.penalty()
    if cfg.mode in ("elliptic", "splitting"):
        problem = case.elliptic_problem(cfg.alpha, cfg.variant)
        guess = initial_guess(case, problem, space, cfg.guess, cfg.p_guess)
        if cfg.mode == "elliptic":
            state, _ = solve(problem, space, pen, NewtonConfig(tol=cfg.tol), guess)
        else:
            state, _ = split_solve(problem, space, pen, guess, tol=cfg.split_tol)
        return state.u, case.exact_at(0.0 if case.is_parabolic else None)
    T = cfg.final_time if cfg.final_time is not None else case.T
    base = case.parabolic_problem(cfg.alpha, cfg.variant)
    problem = ParabolicProblem(base.operator, base.a, base.b, T, base.ua, base.ub, base.u0)
    if cfg.kappa_t:
        grid = TimeGrid.from_cfl(T, step, mesh.h_max)
    else:
        grid = TimeGrid.from_dt(T, step)
    res = run_transient(problem, space, pen, grid, cfg.mode, newton_cfg=NewtonConfig(tol=cfg.tol),
                        record_every=grid.steps)
    return res.final, case.exact_at(T)


def run_study(cfg: StudyConfig) -> ConvergenceTable:
    """Run every ``(r, J)`` (or ``(r, dt)``) cell; failed cells become ``failed`` rows."""
    times = cfg.kappa_t or cfg.dt or (None,)
    table = ConvergenceTable()
    if cfg.time_study:
        table.step_label = "kappa_t" if cfg.kappa_t else "dt"
        cells = [(cfg.meshes[0], s) for s in times]
    else:
        if len(times) > 1:
            raise ValueError("several time parameters need a single mesh (time study)")
        cells = [(J, times[0]) for J in cfg.meshes]
    case = cfg.case
    for r in cfg.degrees:
        hs, errs = [], {n: [] for n in NORMS}
        for J, step in cells:
            h = (case.b - case.a) / J
            hs.append(step if cfg.time_study else h)
            try:
                uh, exact = _single_run(cfg, r, J, step)
                l2, linf = error_norms(uh, exact)
                if cfg.plot_dir:
                    import os
                    os.makedirs(cfg.plot_dir, exist_ok=True)
                    tag = f"{cfg.test}_{cfg.mode}_r{r}_J{J}" + (f"_s{step:g}" if step is not None else "")
                    dump_samples(os.path.join(cfg.plot_dir, tag + ".csv"), uh, exact, J)
            except _FAILURES as exc:
                log.warning("run r=%d J=%d step=%s failed: %s", r, J, step, exc)
                table.failures.append((r, hs[-1], f"{type(exc).__name__}: {exc}"))
                l2 = linf = math.nan
            errs["L2"].append(l2)
            errs["Linf"].append(linf)
        table.add_sequence(r, hs, errs)
    return table


@dataclass(frozen=True)
class SelectivityResult:
    alpha: float
    guess: str
    outcome: str          # "u+", "u-" or "no-root"
    distance: float       # L2 distance to the selected solution (nan for no-root)


def run_selectivity(alphas=(4.0, 0.0, -4.0), guesses=("mix:u-", "mix:u+", "secant"), degree: int = 2,
                    n_elements: int = 10, gamma=(1.1, 1.5, 1.1), epsilon: int = 0,
                    newton_cfg: NewtonConfig | None = None) -> list:
    """Which classical solution of the Test 1 problem each ``(alpha, guess)`` pair finds."""
    case = problems.get("test1")
    space = DGSpace(build_uniform_mesh(case.a, case.b, n_elements), degree)
    pen = PenaltyConfig(tuple(gamma), epsilon)
    out = []
    for alpha in alphas:
        problem = case.elliptic_problem(alpha)
        for recipe in guesses:
            guess = initial_guess(case, problem, space, recipe)
            try:
                state, _ = solve(problem, space, pen, newton_cfg, guess)
            except NonConvergence:
                out.append(SelectivityResult(alpha, recipe, "no-root", math.nan))
                continue
            dist = {name: error_norms(state.u, g)[0] for name, g in case.alternatives.items()}
            best = min(dist, key=dist.get)
            out.append(SelectivityResult(alpha, recipe, best, dist[best]))
    return out


def selectivity_csv(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "guess", "outcome", "distance"])
    for res in results:
        w.writerow([f"{res.alpha:g}", res.guess, res.outcome,
                    "" if not np.isfinite(res.distance) else f"{res.distance:.1e}"])
    return buf.getvalue()

"""Jumps, averages and the three interior-penalty forms.

For a trial function ``u`` and test function ``phi`` the assembled matrices
satisfy ``a_i(u, p; phi) = phi^T (M p + B_i u)`` and the boundary functional
is ``f_i(phi) = phi^T (fa_i u_a + fb_i u_b)``.  The three ``B_i`` share the
broken stiffness, boundary and penalty parts and differ in which trace of
``u'`` (left, average, right) enters the interior flux correction.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .space import DGFunction, DGSpace

FLUXES = ("left", "average", "right")


@dataclass(frozen=True)
class PenaltyConfig:
    gamma: tuple[float, float, float] = (2.0, 2.5, 2.0)
    epsilon: int = 0

    def __post_init__(self):
        g = tuple(float(v) for v in self.gamma)
        if len(g) != 3:
            raise ValueError("gamma needs three values (gamma_01, gamma_02, gamma_03)")
        object.__setattr__(self, "gamma", g)
        if min(g) <= 0.0:
            raise ValueError(f"penalty parameters must be positive, got {g}")
        if self.epsilon not in (-1, 0, 1):
            raise ValueError(f"epsilon must be -1, 0 or 1, got {self.epsilon}")
        if not self.independent:
            warnings.warn(
                f"gamma_02 = {g[1]} does not exceed max(gamma_01, gamma_03); "
                "the three flux equations are not independent",
                stacklevel=3,
            )

    @property
    def independent(self) -> bool:
        g1, g2, g3 = self.gamma
        return g2 > max(g1, g3)

    @classmethod
    def equal(cls, gamma: float, epsilon: int = 0) -> "PenaltyConfig":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return cls((gamma, gamma, gamma), epsilon)


# -- nodal operations on DG functions ---------------------------------------

def _one_sided(v: DGFunction, j: int) -> tuple[float | None, float | None]:
    J = v.space.mesh.n_elements
    if not 0 <= j <= J:
        raise IndexError(f"node index {j} outside 0..{J}")
    minus = v.trace(j, "left") if j > 0 else None
    plus = v.trace(j, "right") if j < J else None
    return minus, plus


def jump(v: DGFunction, j: int) -> float:
    """``v(x_j^-) - v(x_j^+)``; ``-v(x_0)`` and ``v(x_J)`` on the boundary."""
    minus, plus = _one_sided(v, j)
    if minus is None:
        return -plus
    if plus is None:
        return minus
    return minus - plus


def average(v: DGFunction, j: int) -> float:
    minus, plus = _one_sided(v, j)
    if minus is None:
        return plus
    if plus is None:
        return minus
    return 0.5 * (minus + plus)


def penalty_sum(i: int, v: DGFunction, w: DGFunction, cfg: PenaltyConfig) -> float:
    """``sum_j gamma_0i / h_{j,j+1} [v(x_j)] [w(x_j)]`` over all nodes."""
    if i not in (1, 2, 3):
        raise ValueError(f"flux index must be 1, 2 or 3, got {i}")
    mesh = v.space.mesh
    g = cfg.gamma[i - 1]
    return sum(
        g / mesh.node_pair_length(j) * jump(v, j) * jump(w, j)
        for j in range(mesh.n_elements + 1)
    )


def magic_formula_check(v: DGFunction, w: DGFunction, j: int) -> tuple[float, float, float]:
    """Residuals of the three product-jump identities at interior node ``j``."""
    J = v.space.mesh.n_elements
    if not 0 < j < J:
        raise ValueError(f"node {j} is not an interior node")
    vm, vp = v.trace(j, "left"), v.trace(j, "right")
    wm, wp = w.trace(j, "left"), w.trace(j, "right")
    prod = vm * wm - vp * wp
    jv, jw = vm - vp, wm - wp
    av, aw = 0.5 * (vm + vp), 0.5 * (wm + wp)
    return (
        prod - (vm * jw + jv * wp),
        prod - (av * jw + jv * aw),
        prod - (vp * jw + jv * wm),
    )


# -- assembly ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AssembledForms:
    space: DGSpace
    cfg: PenaltyConfig
    mass: np.ndarray            # diagonal of M
    B: tuple[np.ndarray, np.ndarray, np.ndarray]
    fa: tuple[np.ndarray, np.ndarray, np.ndarray]
    fb: tuple[np.ndarray, np.ndarray, np.ndarray]
    # pieces kept for diagnostics
    stiffness_part: np.ndarray
    penalty_part: tuple[np.ndarray, np.ndarray, np.ndarray]
    flux_part: tuple[np.ndarray, np.ndarray, np.ndarray]

    @property
    def M(self) -> np.ndarray:
        return np.diag(self.mass)

    def rhs(self, i: int, ua: float, ub: float) -> np.ndarray:
        """Boundary functional ``f_i`` for data ``(u_a, u_b)``; ``i`` in 1..3."""
        return self.fa[i - 1] * ua + self.fb[i - 1] * ub

    def second_derivatives(self, u: np.ndarray, ua: float, ub: float) -> tuple[np.ndarray, ...]:
        """Coefficients of ``p_i`` solving ``M p_i = f_i - B_i u``."""
        return tuple((self.rhs(i, ua, ub) - self.B[i - 1] @ u) / self.mass for i in (1, 2, 3))

    def dump_csv(self, prefix) -> list[str]:
        """Write ``M`` and ``B_i`` as dense CSV files for small spaces."""
        n = self.space.ndofs
        if n > 64:
            raise ValueError(f"debug dump limited to 64 unknowns, space has {n}")
        paths = []
        for name, mat in [("M", self.M), ("B1", self.B[0]), ("B2", self.B[1]), ("B3", self.B[2])]:
            path = f"{prefix}{name}.csv"
            with open(path, "w", newline="") as fh:
                csv.writer(fh).writerows([[repr(float(x)) for x in row] for row in mat])
            paths.append(path)
        return paths


def _stiffness(space: DGSpace) -> np.ndarray:
    n = space.ndofs
    K = np.zeros((n, n))
    nl = space.n_local
    dref = space._dphi_ref
    w = space.quadrature.weights
    ref = (dref * w[:, None]).T @ dref          # int_{-1}^{1} P_k' P_l'
    for e, h in enumerate(space.mesh.lengths):
        K[e * nl:(e + 1) * nl, e * nl:(e + 1) * nl] = ref * (2.0 / h)
    return K


def assemble(space: DGSpace, cfg: PenaltyConfig) -> AssembledForms:
    """Matrices of the three mixed forms on ``space``.

    Results are cached per ``(space, cfg)``.
    """
    return _assemble_cached(space, cfg)


@lru_cache(maxsize=64)
def _assemble_cached(space: DGSpace, cfg: PenaltyConfig) -> AssembledForms:
    if space.degree < 1:
        raise ValueError("the mixed forms need polynomial degree r >= 1")
    mesh = space.mesh
    J = mesh.n_elements
    eps = cfg.epsilon

    va, da = space.node_trace(0, "right")
    vb, db = space.node_trace(J, "left")

    # broken stiffness plus the boundary terms of b_i (rows: test, columns: trial)
    base = _stiffness(space)
    base += np.outer(va, da) - eps * np.outer(da, va)
    base -= np.outer(vb, db) - eps * np.outer(db, vb)

    jumps = []
    for j in range(J + 1):
        vm, dm = space.node_trace(j, "left")
        vp, dp = space.node_trace(j, "right")
        jumps.append((vm - vp, dm, dp, 1.0 / mesh.node_pair_length(j)))

    unit_penalty = np.zeros_like(base)
    for jv, _, _, w in jumps:
        unit_penalty += w * np.outer(jv, jv)

    flux = []
    for kind in FLUXES:
        F = np.zeros_like(base)
        for jv, dm, dp, _ in jumps[1:J]:
            if kind == "left":
                dtr = dm
            elif kind == "right":
                dtr = dp
            else:
                dtr = 0.5 * (dm + dp)
            # -( u'(x_j^*) [phi] - eps [u] phi'(x_j^*) )
            F -= np.outer(jv, dtr) - eps * np.outer(dtr, jv)
        flux.append(F)

    penalty = tuple(g * unit_penalty for g in cfg.gamma)
    B = tuple(base + penalty[i] + flux[i] for i in range(3))
    fa = tuple(g / mesh.node_pair_length(0) * va - eps * da for g in cfg.gamma)
    fb = tuple(g / mesh.node_pair_length(J) * vb + eps * db for g in cfg.gamma)
    for arr in (*B, *fa, *fb, base):
        arr.setflags(write=False)
    return AssembledForms(
        space=space, cfg=cfg, mass=space.mass_diag.copy(), B=B, fa=fa, fb=fb,
        stiffness_part=base, penalty_part=penalty, flux_part=tuple(flux),
    )

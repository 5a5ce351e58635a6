"""The six benchmark problems: operators, data and exact solutions.

Registry ids are ``test1`` .. ``test6``.  Tests 1-3 are elliptic, 4-6
parabolic (``u_t + F = 0``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .elliptic import EllipticProblem
from .forms import PenaltyConfig
from .operators import DifferentialOperator, MomentOperator
from .parabolic import ParabolicProblem

PI = np.pi


def sign(x):
    """Sign with ``sign(0) = 0``."""
    return np.sign(x)


@dataclass(frozen=True)
class TestCase:
    """A registered benchmark.

    ``exact(x)`` (elliptic) or ``exact(x, t)`` (parabolic) is the viscosity
    solution; ``derivatives`` returns ``(u, u_x, u_xx, u_t)`` of it for the
    residual self-check.  ``alternatives`` holds other classical solutions.
    """

    __test__ = False  # not a pytest class

    id: str
    kind: str
    operator: DifferentialOperator
    a: float
    b: float
    exact: Callable
    derivatives: Callable
    params: dict
    ua: object = None
    ub: object = None
    u0: Optional[Callable] = None
    T: Optional[float] = None
    alternatives: dict = field(default_factory=dict)
    alternative_derivatives: dict = field(default_factory=dict)

    @property
    def is_parabolic(self) -> bool:
        return self.kind == "parabolic"

    def penalty(self, **overrides) -> PenaltyConfig:
        return PenaltyConfig(overrides.get("gamma", self.params["gamma"]),
                             overrides.get("epsilon", self.params.get("epsilon", 0)))

    def moment_operator(self, alpha: float | None = None, variant: str = "LF1") -> MomentOperator:
        return MomentOperator(self.operator, self.params["alpha"] if alpha is None else alpha, variant)

    def elliptic_problem(self, alpha: float | None = None, variant: str = "LF1", t: float | None = None) -> EllipticProblem:
        """The elliptic problem; for parabolic tests the stationary problem at time ``t``."""
        op = self.moment_operator(alpha, variant)
        if self.is_parabolic:
            t = 0.0 if t is None else t
            ex = self.exact
            base = self.operator

            # u_t is moved into the source so that the exact solution at time t solves it
            def func(p, q, lam, tt, x):
                return base(p, q, lam, tt, x) + self.derivatives(x, tt)[3]

            stat = DifferentialOperator(func, None, None, name=f"{self.id}-stationary")
            op = MomentOperator(stat, op.alpha, op.variant)
            return EllipticProblem(op, self.a, self.b, float(ex(self.a, t)), float(ex(self.b, t)), t=t)
        return EllipticProblem(op, self.a, self.b, self.ua, self.ub)

    def parabolic_problem(self, alpha: float | None = None, variant: str = "LF1") -> ParabolicProblem:
        if not self.is_parabolic:
            raise ValueError(f"{self.id} is elliptic")
        return ParabolicProblem(self.moment_operator(alpha, variant), self.a, self.b, self.T,
                                self.ua, self.ub, self.u0)

    def exact_at(self, t: float | None = None) -> Callable:
        if self.is_parabolic:
            tt = self.T if t is None else t
            return lambda x: self.exact(x, tt)
        return self.exact

    def pde_residual(self, x, t=None, which: str | None = None):
        """``F`` (plus ``u_t``) evaluated on an exact solution at points ``x``."""
        x = np.asarray(x, dtype=float)
        derivs = self.derivatives if which is None else self.alternative_derivatives[which]
        u, ux, uxx, ut = derivs(x, t)
        return ut + self.operator(uxx, ux, u, t, x)


# -- Test 1: -u_xx^2 + 1 = 0 on (0, 1) --------------------------------------

def _t1_F(p, q, lam, t, x):
    return 1.0 - p * p


def _t1_dF(p, q, lam, t, x):
    return -2.0 * p, 0.0 * p, 0.0 * p


def _t1_plus(x, t=None):
    return 0.5 * np.asarray(x) ** 2


def _t1_minus(x, t=None):
    x = np.asarray(x)
    return -0.5 * x**2 + x


def _t1_plus_d(x, t=None):
    x = np.asarray(x, float)
    return 0.5 * x**2, x, np.ones_like(x), np.zeros_like(x)


def _t1_minus_d(x, t=None):
    x = np.asarray(x, float)
    return -0.5 * x**2 + x, 1.0 - x, -np.ones_like(x), np.zeros_like(x)


# -- Test 2: -u_xx^3 + |u_x| + S(x) = 0 on (-2, 2) ---------------------------

def _t2_S(x):
    return (2.0 * sign(x) * np.cos(x * x) - 4.0 * x * x * np.sin(x * np.abs(x))) ** 3 \
        - 2.0 * np.abs(x * np.cos(x * x))


def _t2_F(p, q, lam, t, x):
    return -p**3 + np.abs(q) + _t2_S(x)


def _t2_dF(p, q, lam, t, x):
    return -3.0 * p * p, sign(q), 0.0 * p


def _t2_exact(x, t=None):
    x = np.asarray(x, float)
    return np.sin(x * np.abs(x))


def _t2_d(x, t=None):
    x = np.asarray(x, float)
    ax = np.abs(x)
    return (np.sin(x * ax), 2.0 * ax * np.cos(x * x),
            2.0 * sign(x) * np.cos(x * x) - 4.0 * x * x * np.sin(x * ax), np.zeros_like(x))


# -- Test 3: HJB with control theta in (0, 1] on (1.2, 4) --------------------

def _t3_S(x):
    L = np.log(x)
    return (4 * L**2 + 12 * L + 9 - 8 * x**4 * L**2 - 4 * x**4 * L) / (4 * x**3 * (2 * L + 1))


def _t3_minimize(p, q, lam, x):
    """Infimum over ``theta in (0, 1]`` of ``x^2 q theta^2 - p theta + lam/x + S``.

    Returns ``(value, theta)``; ``theta = 0`` marks an infimum reached only in
    the limit.
    """
    p, q, lam, x = np.broadcast_arrays(*(np.asarray(v, float) for v in (p, q, lam, x)))
    c2 = x * x * q
    c0 = lam / x + _t3_S(x)
    g = lambda th: c2 * th * th - p * th + c0  # noqa: E731
    cands = [np.zeros_like(p), np.ones_like(p)]
    with np.errstate(divide="ignore", invalid="ignore"):
        vert = np.where(c2 > 0, p / (2.0 * c2), 1.0)
    vert = np.where((vert > 0) & (vert <= 1.0), vert, 1.0)
    cands.append(vert)
    vals = np.stack([g(th) for th in cands])
    k = np.argmin(vals, axis=0)
    theta = np.choose(k, cands)
    return np.take_along_axis(vals, k[None], 0)[0], theta


def evaluate_test3_operator(p, q, lam, x):
    return _t3_minimize(p, q, lam, x)[0]


def _t3_F(p, q, lam, t, x):
    return _t3_minimize(p, q, lam, x)[0]


def _t3_dF(p, q, lam, t, x):
    _, th = _t3_minimize(p, q, lam, x)
    x = np.asarray(x, float)
    return -th, th * th * x * x, 1.0 / x + 0.0 * th


def _t3_exact(x, t=None):
    x = np.asarray(x, float)
    return x * x * np.log(x)


def _t3_d(x, t=None):
    x = np.asarray(x, float)
    L = np.log(x)
    return x * x * L, 2 * x * L + x, 2 * L + 3, np.zeros_like(x)


def test3_optimal_control(x):
    x = np.asarray(x, float)
    L = np.log(x)
    return (2 * L + 3) / (2 * x**3 * (2 * L + 1))


# -- Test 4: -u_xx u + x^2/2 + t^4 - 4 t^3 + 1 on (0, 1) ---------------------

def _t4_F(p, q, lam, t, x):
    return -p * lam + 0.5 * x * x + t**4 - 4.0 * t**3 + 1.0


def _t4_dF(p, q, lam, t, x):
    return -lam, 0.0 * p, -p


def _t4_exact(x, t):
    return 0.5 * np.asarray(x, float) ** 2 + t**4 + 1.0


def _t4_d(x, t):
    x = np.asarray(x, float)
    return 0.5 * x * x + t**4 + 1.0, x, np.ones_like(x), 4.0 * t**3 + 0.0 * x


# -- Test 5: -u_x ln(u_xx + 1) + S(x, t) on (0, 2) ----------------------------

def _t5_S(x, t):
    e = np.exp((t + 1) * x)
    return e * ((t + 1) * np.log((t + 1) ** 2 * e + 1.0) - x)


def _t5_F(p, q, lam, t, x):
    with np.errstate(invalid="ignore", divide="ignore"):
        return -q * np.log(p + 1.0) + _t5_S(x, t)


def _t5_dF(p, q, lam, t, x):
    with np.errstate(invalid="ignore", divide="ignore"):
        return -q / (p + 1.0), -np.log(p + 1.0), 0.0 * p


def _t5_exact(x, t):
    return np.exp((t + 1) * np.asarray(x, float))


def _t5_d(x, t):
    x = np.asarray(x, float)
    u = np.exp((t + 1) * x)
    return u, (t + 1) * u, (t + 1) ** 2 * u, x * u


# -- Test 6: HJB with two controls on (0, 2 pi) -------------------------------

A_THETA = {1: 1.0, 2: 0.5}


def test6_c(x, t):
    x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
    first = (t > 0) & (t <= PI / 2) & (x > 0) & (x <= PI)
    second = (t > PI / 2) & (t <= PI) & (x > PI) & (x < 2 * PI)
    return np.where(first | second, 1.0, 0.5)


def _t6_branches(p, t, x):
    c = test6_c(x, t)
    rest = c * np.cos(t) * np.sin(x) - np.sin(t) * np.sin(x)
    return A_THETA[1] * p + rest, A_THETA[2] * p + rest


def evaluate_test6_operator(p, q, lam, t, x):
    b1, b2 = _t6_branches(np.asarray(p, float), t, np.asarray(x, float))
    return -np.minimum(b1, b2)


def test6_control(p, t, x):
    """Minimizing control (1 or 2); ties go to 1."""
    b1, b2 = _t6_branches(np.asarray(p, float), t, np.asarray(x, float))
    return np.where(b1 <= b2, 1, 2)


def _t6_dF(p, q, lam, t, x):
    th = test6_control(p, t, x)
    return -np.where(th == 1, A_THETA[1], A_THETA[2]), 0.0 * p, 0.0 * p


def _t6_exact(x, t):
    return np.cos(t) * np.sin(np.asarray(x, float))


def _t6_d(x, t):
    x = np.asarray(x, float)
    return np.cos(t) * np.sin(x), np.cos(t) * np.cos(x), -np.cos(t) * np.sin(x), -np.sin(t) * np.sin(x)


# -- registry -----------------------------------------------------------------

def _build():
    reg = {}
    reg["test1"] = TestCase(
        "test1", "elliptic", DifferentialOperator(_t1_F, _t1_dF, None, "-u_xx^2 + 1"),
        0.0, 1.0, _t1_plus, _t1_plus_d,
        params=dict(alpha=2.0, gamma=(1.0, 1.1, 1.0), epsilon=0, meshes=(10, 20, 40, 80), degrees=(1,)),
        ua=0.0, ub=0.5,
        alternatives={"u+": _t1_plus, "u-": _t1_minus},
        alternative_derivatives={"u+": _t1_plus_d, "u-": _t1_minus_d},
    )
    reg["test2"] = TestCase(
        "test2", "elliptic", DifferentialOperator(_t2_F, _t2_dF, None, "-u_xx^3 + |u_x| + S"),
        -2.0, 2.0, _t2_exact, _t2_d,
        params=dict(alpha=4.0, gamma=(2.0, 2.5, 2.0), epsilon=0, meshes=(4, 8, 16, 32), degrees=(1, 2, 3, 4, 5)),
        ua=float(np.sin(-4.0)), ub=float(np.sin(4.0)),
    )
    reg["test3"] = TestCase(
        "test3", "elliptic", DifferentialOperator(_t3_F, _t3_dF, None, "inf_theta HJB"),
        1.2, 4.0, _t3_exact, _t3_d,
        params=dict(alpha=4.0, gamma=(2.0, 2.5, 2.0), epsilon=0, meshes=(4, 8, 16, 32), degrees=(1, 2, 3, 4)),
        ua=float(1.44 * np.log(1.2)), ub=float(16.0 * np.log(4.0)),
    )
    reg["test4"] = TestCase(
        "test4", "parabolic", DifferentialOperator(_t4_F, _t4_dF, None, "-u_xx u + ..."),
        0.0, 1.0, _t4_exact, _t4_d,
        params=dict(alpha=2.0, gamma=(2.0, 2.5, 2.0), epsilon=0, meshes=(4, 8, 16, 32), degrees=(1, 2, 3),
                    kappa_t=0.002, dt=0.001),
        # boundary data taken from the exact solution (the "+1" shift included)
        ua=lambda t: 1.0 + t**4, ub=lambda t: 1.5 + t**4, u0=lambda x: _t4_exact(x, 0.0),
        T=1.0,
    )
    reg["test5"] = TestCase(
        "test5", "parabolic", DifferentialOperator(_t5_F, _t5_dF, None, "-u_x ln(u_xx + 1) + S"),
        0.0, 2.0, _t5_exact, _t5_d,
        params=dict(alpha=4.0, gamma=(2.0, 2.5, 2.0), epsilon=0, meshes=(4, 8, 16, 32), degrees=(1, 2, 3, 4, 5),
                    kappa_t=0.0025, dt=0.0005, T_backward=0.5),
        ua=lambda t: 1.0, ub=lambda t: float(np.exp(2.0 * (t + 1.0))), u0=lambda x: np.exp(np.asarray(x, float)),
        T=3.10,
    )
    reg["test6"] = TestCase(
        "test6", "parabolic", DifferentialOperator(evaluate_test6_operator, _t6_dF, None, "-min_theta HJB"),
        0.0, 2.0 * PI, _t6_exact, _t6_d,
        params=dict(alpha=2.0, gamma=(2.0, 2.5, 2.0), epsilon=0, meshes=(4, 8, 16, 32), degrees=(1, 2, 3, 4, 5),
                    kappa_t=0.002, dt=0.0062),
        ua=lambda t: 0.0, ub=lambda t: 0.0, u0=lambda x: np.sin(np.asarray(x, float)),
        T=3.10,
    )
    return reg


REGISTRY = _build()


def get(test_id: str) -> TestCase:
    try:
        return REGISTRY[test_id]
    except KeyError:
        raise KeyError(f"unknown test id {test_id!r}; known: {', '.join(sorted(REGISTRY))}") from None

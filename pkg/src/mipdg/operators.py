"""Differential operators and their Lax-Friedrichs-type numerical operators."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

VARIANTS = ("LF1", "LF2")


class NonFiniteOperatorError(ArithmeticError):
    """Raised when an operator evaluates to ``nan``/``inf``.

    Carries the offending location and arguments for diagnostics.
    """

    def __init__(self, x, t, args):
        self.x = x
        self.t = t
        self.args_at_failure = args
        super().__init__(f"non-finite operator value at x={x!r}, t={t!r}, args={args!r}")


@dataclass(frozen=True)
class DifferentialOperator:
    """``F(p, q, lam, t, x)`` with ``p ~ u_xx``, ``q ~ u_x``, ``lam ~ u``.

    ``func`` must accept numpy arrays.  ``derivative``, when given, returns the
    triple ``(dF/dp, dF/dq, dF/dlam)`` with the same signature.  Elliptic
    operators receive ``t=None``.
    """

    func: Callable
    derivative: Optional[Callable] = None
    dp_bound: Optional[float] = None
    name: str = ""

    def __call__(self, p, q, lam, t, x):
        return self.func(p, q, lam, t, x)

    def fd_partials(self, p, q, lam, t, x, rel_step: float = 1e-6):
        """Central-difference estimates of ``(dF/dp, dF/dq, dF/dlam)``."""
        out = []
        args = [np.asarray(p, float), np.asarray(q, float), np.asarray(lam, float)]
        for k in range(3):
            h = rel_step * (1.0 + np.abs(args[k]))
            up = list(args)
            dn = list(args)
            up[k] = args[k] + h
            dn[k] = args[k] - h
            fp = self.func(*up, t, x)
            fm = self.func(*dn, t, x)
            out.append((fp - fm) / (2.0 * h))
        return tuple(out)

    def partials(self, p, q, lam, t, x):
        if self.derivative is not None:
            return tuple(np.broadcast_to(np.asarray(d, float), np.shape(p))
                         for d in self.derivative(p, q, lam, t, x))
        return self.fd_partials(p, q, lam, t, x)


@dataclass(frozen=True)
class MomentOperator:
    """Numerical operator ``F`` plus the numerical moment ``alpha (p1 - 2 p2 + p3)``.

    ``LF1`` evaluates ``F`` at ``p2``; ``LF2`` at the mean of the three.
    """

    base: DifferentialOperator
    alpha: float = 0.0
    variant: str = "LF1"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")

    def _center(self, p1, p2, p3):
        if self.variant == "LF1":
            return p2
        # mean written around p2 so that p1 = p2 = p3 gives p2 bit for bit
        return p2 + ((p1 - p2) + (p3 - p2)) / 3.0

    def __call__(self, p1, p2, p3, q, lam, t, x):
        with np.errstate(all="ignore"):
            val = self.base(self._center(p1, p2, p3), q, lam, t, x) + self.alpha * (p1 - 2.0 * p2 + p3)
        val = np.asarray(val, dtype=float)
        if not np.all(np.isfinite(val)):
            arrs = np.broadcast_arrays(*(np.asarray(a, float) for a in (val, x, p1, p2, p3, q, lam)))
            bad = int(np.flatnonzero(~np.isfinite(arrs[0].ravel()))[0])
            v = [float(a.ravel()[bad]) for a in arrs[1:]]
            raise NonFiniteOperatorError(
                v[0], t, dict(zip(("p1", "p2", "p3", "q", "lam"), v[1:]))
            )
        return val

    def partials(self, p1, p2, p3, q, lam, t, x, finite_difference: bool = False):
        """``(dFh/dp1, dFh/dp2, dFh/dp3, dFh/dq, dFh/dlam)``, pointwise.

        Uses the base operator's analytic derivative when it has one, unless
        ``finite_difference`` is set.
        """
        c = self._center(p1, p2, p3)
        with np.errstate(all="ignore"):
            if finite_difference:
                Fp, Fq, Fl = self.base.fd_partials(c, q, lam, t, x)
            else:
                Fp, Fq, Fl = self.base.partials(c, q, lam, t, x)
        a = self.alpha
        if self.variant == "LF1":
            return a + 0 * Fp, Fp - 2.0 * a, a + 0 * Fp, Fq, Fl
        return Fp / 3.0 + a, Fp / 3.0 - 2.0 * a, Fp / 3.0 + a, Fq, Fl

    def with_alpha(self, alpha: float) -> "MomentOperator":
        return MomentOperator(self.base, alpha, self.variant)


def evaluate_fhat(op: MomentOperator, p1, p2, p3, q, lam, t, x):
    return op(p1, p2, p3, q, lam, t, x)


def implicit_euler_operator(op: MomentOperator, dt: float) -> MomentOperator:
    """The operator ``lam + dt * Fh(...)`` solved at every backward-Euler step.

    It is again of moment form, with base ``lam + dt F`` and moment ``dt alpha``.
    """
    F = op.base

    def func(p, q, lam, t, x):
        return lam + dt * F(p, q, lam, t, x)

    deriv = None
    if F.derivative is not None:
        def deriv(p, q, lam, t, x):
            Fp, Fq, Fl = F.derivative(p, q, lam, t, x)
            return dt * np.asarray(Fp), dt * np.asarray(Fq), 1.0 + dt * np.asarray(Fl)

    base = DifferentialOperator(func, deriv, None if F.dp_bound is None else dt * F.dp_bound,
                                name=f"implicit({F.name}, dt={dt:g})")
    return MomentOperator(base, dt * op.alpha, op.variant)


@dataclass
class MonotonicityReport:
    derivatives: np.ndarray                 # (n_samples, 3) estimates of dFh/dp1..dp3
    violations: list = field(default_factory=list)
    boundary_cases: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_g_monotonicity(op: MomentOperator, samples, delta: float = 1e-5, zero_tol: float = 1e-8) -> MonotonicityReport:
    """Central-difference audit of ``Fh`` increasing in p1, p3 and decreasing in p2.

    ``samples`` is an iterable of ``(p1, p2, p3, q, lam, t, x)``.  A derivative
    of the wrong sign is a violation; one within ``zero_tol`` of zero is listed
    as a boundary case (monotone, but not strictly).
    """
    samples = [tuple(s) for s in samples]
    ders = np.zeros((len(samples), 3))
    report = MonotonicityReport(ders)
    wants = (1.0, -1.0, 1.0)
    for n, s in enumerate(samples):
        p = list(s[:3])
        rest = s[3:]
        for k in range(3):
            step = delta * (1.0 + abs(p[k]))
            up = list(p)
            dn = list(p)
            up[k] += step
            dn[k] -= step
            d = (float(op(*up, *rest)) - float(op(*dn, *rest))) / (2.0 * step)
            ders[n, k] = d
            label = f"p{k + 1}"
            if abs(d) <= zero_tol:
                report.boundary_cases.append((n, s, label, d))
            elif d * wants[k] < 0.0:
                report.violations.append((n, s, label, d))
    return report

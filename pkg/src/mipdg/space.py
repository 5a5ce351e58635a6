"""Broken polynomial spaces on a 1D mesh.

Each element carries the Legendre polynomials ``P_0..P_r`` mapped from the
reference interval ``[-1, 1]``, so the element mass matrices are diagonal.
Global degrees of freedom are ordered element by element.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from numpy.polynomial import legendre

from .mesh import Mesh


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on the reference interval [-1, 1]."""

    points: np.ndarray
    weights: np.ndarray

    @classmethod
    def gauss(cls, n: int) -> "QuadratureRule":
        if n < 1:
            raise ValueError("need at least one quadrature point")
        x, w = legendre.leggauss(n)
        return cls(x, w)

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def exactness(self) -> int:
        return 2 * self.size - 1


def legendre_table(r: int, xi) -> tuple[np.ndarray, np.ndarray]:
    """Values and reference derivatives of ``P_0..P_r`` at ``xi``.

    Returns two arrays of shape ``(len(xi), r + 1)``.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    vals = legendre.legvander(xi, r)
    ders = np.empty_like(vals)
    for k in range(r + 1):
        c = np.zeros(r + 1)
        c[k] = 1.0
        ders[:, k] = legendre.legval(xi, legendre.legder(c))
    return vals, ders


class DGSpace:
    """The space of piecewise polynomials of degree ``r`` on ``mesh``."""

    def __init__(self, mesh: Mesh, degree: int, n_quad: int | None = None):
        if int(degree) != degree or degree < 1:
            raise ValueError(f"polynomial degree must be an integer >= 1, got {degree}")
        degree = int(degree)
        if n_quad is None:
            n_quad = max(degree + 2, 6)
        if n_quad < degree + 2:
            raise ValueError(f"need at least r + 2 = {degree + 2} quadrature points, got {n_quad}")
        self.mesh = mesh
        self.degree = degree
        self.quadrature = QuadratureRule.gauss(n_quad)

        r = degree
        J = mesh.n_elements
        h = mesh.lengths
        self.n_local = r + 1
        self.ndofs = J * (r + 1)
        self._phi, self._dphi_ref = legendre_table(r, self.quadrature.points)

        mid = 0.5 * (mesh.nodes[:-1] + mesh.nodes[1:])
        self.x_quad = mid[:, None] + 0.5 * h[:, None] * self.quadrature.points[None, :]
        self.w_quad = 0.5 * h[:, None] * self.quadrature.weights[None, :]
        self._jac = 2.0 / h

        k = np.arange(r + 1)
        self.mass_diag = (h[:, None] / (2 * k[None, :] + 1)).ravel()
        # endpoint traces of the reference basis
        self._val_right = np.ones(r + 1)
        self._val_left = (-1.0) ** k
        self._der_right = 0.5 * k * (k + 1)
        self._der_left = (-1.0) ** (k + 1) * 0.5 * k * (k + 1)

    # -- evaluation on quadrature points ---------------------------------

    def quad_values(self, coeffs) -> np.ndarray:
        """Values at the quadrature points, shape ``(J, n_quad)``."""
        c = np.asarray(coeffs).reshape(self.mesh.n_elements, self.n_local)
        return c @ self._phi.T

    def quad_derivatives(self, coeffs) -> np.ndarray:
        c = np.asarray(coeffs).reshape(self.mesh.n_elements, self.n_local)
        return (c @ self._dphi_ref.T) * self._jac[:, None]

    def load(self, values) -> np.ndarray:
        """Vector of ``(f, phi_k)_{T_h}`` for ``f`` sampled at the quadrature points."""
        fw = np.asarray(values) * self.w_quad
        return (fw @ self._phi).ravel()

    def weighted_products(self, weights) -> sp.csr_matrix:
        """Matrix of ``(w phi_l, phi_k)_{T_h}`` for ``w`` sampled at quadrature points."""
        ww = np.asarray(weights) * self.w_quad
        blocks = np.einsum("eq,qk,ql->ekl", ww, self._phi, self._phi)
        return sp.block_diag(list(blocks), format="csr")

    def weighted_derivative_products(self, weights) -> sp.csr_matrix:
        """Matrix of ``(w phi_l', phi_k)_{T_h}``."""
        ww = np.asarray(weights) * self.w_quad * self._jac[:, None]
        blocks = np.einsum("eq,qk,ql->ekl", ww, self._phi, self._dphi_ref)
        return sp.block_diag(list(blocks), format="csr")

    @cached_property
    def value_matrix(self) -> sp.csr_matrix:
        """Sparse map from coefficients to quadrature-point values (flattened)."""
        J = self.mesh.n_elements
        return sp.block_diag([self._phi] * J, format="csr")

    @cached_property
    def derivative_matrix(self) -> sp.csr_matrix:
        J = self.mesh.n_elements
        return sp.block_diag([self._dphi_ref * s for s in self._jac], format="csr")

    # -- traces at nodes ---------------------------------------------------

    def node_trace(self, j: int, side: str) -> tuple[np.ndarray, np.ndarray]:
        """Global vectors giving ``v(x_j^-)`` (``side='left'``) or ``v(x_j^+)``.

        Returns ``(values, derivatives)``; both are zero when the requested
        side lies outside the domain.
        """
        J = self.mesh.n_elements
        if not 0 <= j <= J:
            raise IndexError(f"node index {j} outside 0..{J}")
        val = np.zeros(self.ndofs)
        der = np.zeros(self.ndofs)
        n = self.n_local
        if side == "left":
            if j >= 1:
                e = j - 1
                val[e * n:(e + 1) * n] = self._val_right
                der[e * n:(e + 1) * n] = self._der_right * self._jac[e]
        elif side == "right":
            if j < J:
                e = j
                val[e * n:(e + 1) * n] = self._val_left
                der[e * n:(e + 1) * n] = self._der_left * self._jac[e]
        else:
            raise ValueError(f"side must be 'left' or 'right', got {side!r}")
        return val, der

    # -- pointwise evaluation ---------------------------------------------

    def basis_at(self, x: float, side: str = "interior") -> tuple[np.ndarray, np.ndarray]:
        """Global vectors of basis values and derivatives at a point ``x``."""
        mesh = self.mesh
        if not mesh.a <= x <= mesh.b:
            raise ValueError(f"x = {x} outside [{mesh.a}, {mesh.b}]")
        nodes = mesh.nodes
        hit = np.flatnonzero(nodes == x)
        if hit.size:
            j = int(hit[0])
            if 0 < j < mesh.n_elements:
                if side not in ("left", "right"):
                    raise ValueError(f"x = {x} is an interior node; side must be 'left' or 'right'")
                return self.node_trace(j, side)
            return self.node_trace(j, "right" if j == 0 else "left")
        e = mesh.locate(x)
        xi = 2.0 * (x - nodes[e]) / mesh.lengths[e] - 1.0
        v, d = legendre_table(self.degree, [xi])
        n = self.n_local
        val = np.zeros(self.ndofs)
        der = np.zeros(self.ndofs)
        val[e * n:(e + 1) * n] = v[0]
        der[e * n:(e + 1) * n] = d[0] * self._jac[e]
        return val, der

    def sample_points(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Element index and reference basis tables for an array of points.

        Interior nodes are attributed to the element on their right.
        """
        x = np.asarray(x, dtype=float)
        mesh = self.mesh
        e = np.clip(np.searchsorted(mesh.nodes, x, side="right") - 1, 0, mesh.n_elements - 1)
        xi = 2.0 * (x - mesh.nodes[e]) / mesh.lengths[e] - 1.0
        v, d = legendre_table(self.degree, xi)
        return e, v, d * self._jac[e][:, None]

    # -- projections ---------------------------------------------------------

    @cached_property
    def _nitsche_factor(self):
        """Cholesky factor of ``M + h^{-1/2}(phi(a)phi(a)^T + phi(b)phi(b)^T)``."""
        va, _ = self.node_trace(0, "right")
        vb, _ = self.node_trace(self.mesh.n_elements, "left")
        s = 1.0 / np.sqrt(self.mesh.h_max)
        A = np.diag(self.mass_diag) + s * (np.outer(va, va) + np.outer(vb, vb))
        return sla.cho_factor(A), va, vb, s

    def nitsche_solve(self, load: np.ndarray, ga: float, gb: float) -> np.ndarray:
        """Coefficients of the modified projection given its broken load vector."""
        fac, va, vb, s = self._nitsche_factor
        return sla.cho_solve(fac, load + s * (ga * va + gb * vb))

    def zero(self) -> "DGFunction":
        return DGFunction(self, np.zeros(self.ndofs))

    def __repr__(self):
        return f"DGSpace({self.mesh!r}, r={self.degree}, q={self.quadrature.size})"


class DGFunction:
    """A member of a :class:`DGSpace` stored by its flat coefficient vector."""

    __array_priority__ = 1000

    def __init__(self, space: DGSpace, coeffs=None):
        self.space = space
        if coeffs is None:
            coeffs = np.zeros(space.ndofs)
        coeffs = np.array(coeffs, dtype=float).ravel()
        if coeffs.size != space.ndofs:
            raise ValueError(f"expected {space.ndofs} coefficients, got {coeffs.size}")
        self.coeffs = coeffs

    @property
    def local(self) -> np.ndarray:
        """Coefficients reshaped to ``(J, r + 1)``."""
        return self.coeffs.reshape(self.space.mesh.n_elements, self.space.n_local)

    def evaluate(self, x: float, side: str = "interior") -> float:
        val, _ = self.space.basis_at(x, side)
        return float(val @ self.coeffs)

    def evaluate_derivative(self, x: float, side: str = "interior") -> float:
        _, der = self.space.basis_at(x, side)
        return float(der @ self.coeffs)

    __call__ = evaluate

    def trace(self, j: int, side: str) -> float:
        val, _ = self.space.node_trace(j, side)
        return float(val @ self.coeffs)

    def derivative_trace(self, j: int, side: str) -> float:
        _, der = self.space.node_trace(j, side)
        return float(der @ self.coeffs)

    def sample(self, x) -> np.ndarray:
        """Vectorized evaluation at points of any shape; interior nodes take their right limit."""
        x = np.asarray(x, dtype=float)
        e, v, _ = self.space.sample_points(x.ravel())
        return np.einsum("pk,pk->p", v, self.local[e]).reshape(x.shape)

    def sample_derivative(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        e, _, d = self.space.sample_points(x.ravel())
        return np.einsum("pk,pk->p", d, self.local[e]).reshape(x.shape)

    def quad_values(self) -> np.ndarray:
        return self.space.quad_values(self.coeffs)

    def quad_derivatives(self) -> np.ndarray:
        return self.space.quad_derivatives(self.coeffs)

    def as_function(self):
        """Plain callable ``x -> value`` (right limits at interior nodes)."""
        return lambda x: self.sample(np.asarray(x, dtype=float))

    def copy(self) -> "DGFunction":
        return DGFunction(self.space, self.coeffs.copy())

    def _check(self, other):
        if other.space is not self.space:
            raise ValueError("DG functions live on different spaces")

    def __add__(self, other):
        if isinstance(other, DGFunction):
            self._check(other)
            return DGFunction(self.space, self.coeffs + other.coeffs)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, DGFunction):
            self._check(other)
            return DGFunction(self.space, self.coeffs - other.coeffs)
        return NotImplemented

    def __mul__(self, s):
        if np.isscalar(s):
            return DGFunction(self.space, s * self.coeffs)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return DGFunction(self.space, -self.coeffs)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["element", "local", "value"])
            for e, row in enumerate(self.local):
                for k, c in enumerate(row):
                    w.writerow([e, k, repr(float(c))])

    @classmethod
    def from_csv(cls, space: DGSpace, path) -> "DGFunction":
        out = np.zeros((space.mesh.n_elements, space.n_local))
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                out[int(row["element"]), int(row["local"])] = float(row["value"])
        return cls(space, out)

    def __repr__(self):
        return f"DGFunction({self.space!r})"


def _sample(g, x: np.ndarray) -> np.ndarray:
    """Evaluate ``g`` on an array, falling back to pointwise calls."""
    try:
        y = np.asarray(g(x), dtype=float)
        if y.shape == x.shape:
            return y
        if y.ndim == 0:
            return np.full(x.shape, float(y))
    except (TypeError, ValueError):
        pass
    return np.vectorize(lambda s: float(g(s)), otypes=[float])(x)


def l2_project(space: DGSpace, g) -> DGFunction:
    """Standard broken L2 projection of a function ``g``."""
    vals = _sample(g, space.x_quad)
    return DGFunction(space, space.load(vals) / space.mass_diag)


def modified_l2_project(space: DGSpace, g, ga: float | None = None, gb: float | None = None) -> DGFunction:
    """L2 projection with boundary values matched weakly (Nitsche penalty ``1/sqrt(h)``).

    ``ga``/``gb`` override ``g(a)``/``g(b)`` when given.
    """
    vals = _sample(g, space.x_quad)
    a, b = space.mesh.a, space.mesh.b
    if ga is None:
        ga = float(_sample(g, np.array([a]))[0])
    if gb is None:
        gb = float(_sample(g, np.array([b]))[0])
    return DGFunction(space, space.nitsche_solve(space.load(vals), ga, gb))


def error_norms(f: DGFunction, exact) -> tuple[float, float]:
    """Broken L2 and sampled max-norm of ``f - exact``.

    The max is taken over quadrature points and both one-sided node values.
    """
    space = f.space
    diff = f.quad_values() - _sample(exact, space.x_quad)
    l2 = float(np.sqrt(np.sum(diff**2 * space.w_quad)))
    nodes = space.mesh.nodes
    ex_nodes = _sample(exact, nodes)
    loc = f.local
    left = loc[:, :] @ space._val_left      # value at x_{e}^+
    right = loc[:, :] @ space._val_right    # value at x_{e+1}^-
    linf = max(
        float(np.max(np.abs(diff))),
        float(np.max(np.abs(left - ex_nodes[:-1]))),
        float(np.max(np.abs(right - ex_nodes[1:]))),
    )
    return l2, linf

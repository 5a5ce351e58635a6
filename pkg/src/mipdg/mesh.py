"""One-dimensional partitions of an interval."""
from __future__ import annotations

import numpy as np


class Mesh:
    """Partition ``a = x_0 < x_1 < ... < x_J = b`` of a closed interval.

    Elements are numbered ``1..J`` in the mathematical convention
    (``I_j = (x_{j-1}, x_j)``); arrays indexed by element are zero based.
    Instances are immutable.
    """

    def __init__(self, nodes):
        nodes = np.array(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a mesh needs at least two nodes")
        if not np.all(np.isfinite(nodes)):
            raise ValueError("mesh nodes must be finite")
        if np.any(np.diff(nodes) <= 0.0):
            raise ValueError("mesh nodes must be strictly increasing")
        nodes.setflags(write=False)
        self._nodes = nodes
        lengths = np.diff(nodes)
        lengths.setflags(write=False)
        self._lengths = lengths

    @property
    def nodes(self) -> np.ndarray:
        return self._nodes

    @property
    def a(self) -> float:
        return float(self._nodes[0])

    @property
    def b(self) -> float:
        return float(self._nodes[-1])

    @property
    def n_elements(self) -> int:
        return self._nodes.size - 1

    @property
    def lengths(self) -> np.ndarray:
        """Element lengths ``h_1..h_J`` as a zero-based array."""
        return self._lengths

    @property
    def h_max(self) -> float:
        return float(self._lengths.max())

    def element_length(self, j: int) -> float:
        """Length ``h_j`` of element ``j`` (``1 <= j <= J``)."""
        if not 1 <= j <= self.n_elements:
            raise IndexError(f"element index {j} outside 1..{self.n_elements}")
        return float(self._lengths[j - 1])

    def node_pair_length(self, j: int) -> float:
        """``max(h_j, h_{j+1})`` with ``h_0 = h_{J+1} = 0``."""
        J = self.n_elements
        if not 0 <= j <= J:
            raise IndexError(f"node index {j} outside 0..{J}")
        left = self._lengths[j - 1] if j >= 1 else 0.0
        right = self._lengths[j] if j < J else 0.0
        return float(max(left, right))

    def locate(self, x: float) -> int:
        """Zero-based index of the element whose closure contains ``x``.

        Interior nodes resolve to the element on their right.
        """
        if x < self.a or x > self.b:
            raise ValueError(f"x = {x} outside [{self.a}, {self.b}]")
        e = int(np.searchsorted(self._nodes, x, side="right")) - 1
        return min(max(e, 0), self.n_elements - 1)

    def __eq__(self, other):
        return isinstance(other, Mesh) and np.array_equal(self._nodes, other._nodes)

    def __hash__(self):
        return hash(self._nodes.tobytes())

    def __repr__(self):
        return f"Mesh(J={self.n_elements}, a={self.a:g}, b={self.b:g})"


def build_uniform_mesh(a: float, b: float, J: int) -> Mesh:
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    if int(J) != J or J < 1:
        raise ValueError(f"number of elements must be a positive integer, got {J}")
    return Mesh(np.linspace(a, b, int(J) + 1))

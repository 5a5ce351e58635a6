import numpy as np
import pytest
from hypothesis import given, strategies as st

from mipdg.mesh import Mesh, build_uniform_mesh


def test_uniform_nodes():
    np.testing.assert_allclose(build_uniform_mesh(0, 1, 2).nodes, [0, 0.5, 1])
    np.testing.assert_allclose(build_uniform_mesh(1.2, 4, 4).nodes, [1.2, 1.9, 2.6, 3.3, 4.0])


def test_uniform_lengths():
    m = build_uniform_mesh(0, 1, 10)
    for j in range(1, 11):
        assert m.element_length(j) == pytest.approx(0.1, abs=1e-15)
    assert m.h_max == pytest.approx(0.1)


@pytest.mark.parametrize("a, b, J", [(1, 1, 3), (2, 1, 3), (0, 1, 0), (0, 1, -2), (0, 1, 2.5)])
def test_rejects_bad_input(a, b, J):
    with pytest.raises(ValueError):
        build_uniform_mesh(a, b, J)


def test_rejects_unsorted_nodes():
    with pytest.raises(ValueError):
        Mesh([0.0, 0.6, 0.5, 1.0])


def test_node_pair_length():
    m = build_uniform_mesh(0, 1, 10)
    assert m.node_pair_length(5) == pytest.approx(0.1)
    assert m.node_pair_length(0) == pytest.approx(0.1)
    nu = Mesh([0.0, 0.1, 0.2, 0.3, 0.6, 1.0])
    assert nu.element_length(3) == pytest.approx(0.1)
    assert nu.element_length(4) == pytest.approx(0.3)
    assert nu.node_pair_length(3) == pytest.approx(0.3)
    with pytest.raises(IndexError):
        nu.node_pair_length(6)
    with pytest.raises(IndexError):
        nu.element_length(0)


def test_locate_and_immutability():
    m = build_uniform_mesh(0, 1, 4)
    assert m.locate(0.0) == 0
    assert m.locate(0.25) == 1
    assert m.locate(1.0) == 3
    with pytest.raises(ValueError):
        m.locate(1.5)
    with pytest.raises(ValueError):
        m.nodes[0] = 3.0
    assert m == build_uniform_mesh(0, 1, 4)
    assert hash(m) == hash(build_uniform_mesh(0, 1, 4))


@st.composite
def meshes(draw):
    a = draw(st.floats(-10, 10))
    widths = draw(st.lists(st.floats(1e-3, 5.0), min_size=1, max_size=30))
    return Mesh(a + np.concatenate([[0.0], np.cumsum(widths)]))


@given(meshes())
def test_mesh_invariants(m):
    assert np.all(m.lengths > 0)
    assert abs(m.lengths.sum() - (m.b - m.a)) <= 1e-13 * (m.b - m.a) * m.n_elements
    assert m.h_max == max(m.element_length(j) for j in range(1, m.n_elements + 1))
    assert m.node_pair_length(0) == m.element_length(1)
    assert m.node_pair_length(m.n_elements) == m.element_length(m.n_elements)
    for j in range(1, m.n_elements):
        assert m.node_pair_length(j) == max(m.element_length(j), m.element_length(j + 1))

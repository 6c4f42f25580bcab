import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from lrlab.lattice import (
    Region, SpinGraph, boundary_term_count, build_chain, build_toric_code_layout, build_torus_2d,
    complement, graph_distance, torus_bonds,
)


def test_graph_rejects_bad_edges():
    with pytest.raises(ValueError):
        SpinGraph.from_edges(3, [(0, 0), (1, 2)])
    with pytest.raises(ValueError):
        SpinGraph.from_edges(3, [(0, 1), (1, 0), (1, 2)])
    with pytest.raises(ValueError):
        SpinGraph.from_edges(4, [(0, 1), (2, 3)])


def test_chain_examples():
    assert len(build_chain(2).edges) == 1
    assert len(build_chain(3, periodic=True).edges) == 3
    assert set(build_chain(10, periodic=True).degrees) == {2}
    with pytest.raises(ValueError):
        build_chain(1)


def test_torus_examples():
    g = build_torus_2d(3, 3)
    assert g.n_vertices == 9 and len(g.edges) == 18 and set(g.degrees) == {4}
    assert len(torus_bonds(2, 2)) == 8
    # 2x2 wraps onto the same neighbours, so the simple graph keeps 4 distinct edges
    assert len(build_torus_2d(2, 2).edges) == 4
    g4 = build_torus_2d(4, 4)
    assert graph_distance(g4, [g4.index_of((0, 0))], [g4.index_of((1, 1))]) == 2
    with pytest.raises(ValueError):
        build_torus_2d(1, 3)


def test_graph_distance_examples():
    g = build_chain(5)
    assert graph_distance(g, [0], [4]) == 4
    assert graph_distance(g, [0, 1], [4]) == 3
    assert graph_distance(g, [4], [0, 1]) == 3
    g4 = build_torus_2d(4, 4)
    assert graph_distance(g4, [g4.index_of((0, 0))], [g4.index_of((2, 2))]) == 4
    with pytest.raises(ValueError):
        graph_distance(g, [0, 1], [1, 2])


def test_boundary_examples():
    assert boundary_term_count(build_chain(10, periodic=True), [3, 4, 5, 6]) == 2
    assert boundary_term_count(build_chain(10), [0, 1, 2]) == 1
    g = build_torus_2d(4, 4)
    block = [g.index_of(c) for c in [(0, 0), (1, 0), (0, 1), (1, 1)]]
    assert boundary_term_count(g, block) == 8


def test_region_diameter_uses_host_distance():
    g = build_chain(6, periodic=True)
    assert Region.on(g, [0, 5]).diameter == 1
    assert Region.on(g, [0, 3]).diameter == 3
    with pytest.raises(ValueError):
        Region.on(g, [])


def test_toric_layout_counts():
    lay = build_toric_code_layout(2, 2)
    assert lay.n_qubits == 8 and len(lay.stars) == 4 and len(lay.plaquettes) == 4
    counts = np.zeros(8, int)
    for s in lay.stars:
        counts[list(s)] += 1
    assert set(counts) == {2}
    assert build_toric_code_layout(2, 3).n_qubits == 12
    # stars and plaquettes overlap on an even number of qubits
    for s in lay.stars:
        for p in lay.plaquettes:
            assert len(set(s) & set(p)) % 2 == 0


def _nx(g):
    G = nx.Graph()
    G.add_nodes_from(range(g.n_vertices))
    G.add_edges_from(g.edges)
    return G


@given(st.integers(3, 12), st.booleans(), st.data())
def test_distances_match_networkx(n, periodic, data):
    g = build_chain(n, periodic)
    a = data.draw(st.integers(0, n - 1))
    lengths = nx.single_source_shortest_path_length(_nx(g), a)
    assert [lengths[b] for b in range(n)] == list(g.distances[a])


@given(st.integers(2, 5), st.integers(2, 5), st.data())
def test_triangle_inequality(nx_, ny, data):
    g = build_torus_2d(nx_, ny)
    u, v, w = (data.draw(st.integers(0, g.n_vertices - 1)) for _ in range(3))
    d = g.distances
    assert d[u, w] <= d[u, v] + d[v, w]
    assert g.diameter == nx.diameter(_nx(g))


@given(st.integers(2, 5), st.integers(2, 5), st.data())
def test_boundary_symmetric_under_complement(nx_, ny, data):
    g = build_torus_2d(nx_, ny)
    verts = data.draw(st.sets(st.integers(0, g.n_vertices - 1), min_size=1, max_size=g.n_vertices - 1))
    assert boundary_term_count(g, verts) == boundary_term_count(g, complement(g, verts).vertices)


@pytest.mark.parametrize("n", range(2, 21))
def test_chain_end_to_end_distance(n):
    assert graph_distance(build_chain(n), [0], [n - 1]) == n - 1

"""Spin graphs, regions and the graph metric used by every bound."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class SpinGraph:
    """Undirected, connected graph with spins on the vertices.

    ``coords`` are optional integer positions, one tuple per vertex.
    """

    n_vertices: int
    edges: frozenset[tuple[int, int]]
    coords: tuple[tuple[int, ...], ...] | None = None
    name: str = "graph"

    def __post_init__(self):
        if self.n_vertices < 1:
            raise ValueError("graph needs at least one vertex")
        canon = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ValueError(f"edge ({u}, {v}) out of range")
            canon.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(canon))
        if self.coords is not None and len(self.coords) != self.n_vertices:
            raise ValueError("need one coordinate per vertex")
        if self.n_vertices > 1 and np.any(self.distances < 0):
            raise ValueError("graph is not connected")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], **kw) -> "SpinGraph":
        edges = list(edges)
        seen = set()
        for u, v in edges:
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
        return cls(n, frozenset(edges), **kw)

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for u, v in sorted(self.edges):
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.neighbors)

    @property
    def max_degree(self) -> int:
        return max(self.degrees)

    @cached_property
    def distances(self) -> np.ndarray:
        """All-pairs shortest-path edge counts (-1 for unreachable)."""
        n = self.n_vertices
        dist = np.full((n, n), -1, dtype=np.int64)
        for src in range(n):
            row = dist[src]
            row[src] = 0
            queue = deque([src])
            while queue:
                u = queue.popleft()
                for w in self.neighbors[u]:
                    if row[w] < 0:
                        row[w] = row[u] + 1
                        queue.append(w)
        dist.setflags(write=False)
        return dist

    @property
    def diameter(self) -> int:
        return int(self.distances.max())

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def index_of(self, coord: Sequence[int]) -> int:
        if self.coords is None:
            raise ValueError(f"{self.name} has no coordinates")
        try:
            return self.coords.index(tuple(coord))
        except ValueError:
            raise KeyError(f"no vertex at {tuple(coord)}") from None

    def region(self, vertices: Iterable[int | Sequence[int]]) -> "Region":
        """Build a region from vertex indices or coordinate tuples."""
        verts = []
        for v in vertices:
            verts.append(self.index_of(v) if isinstance(v, (tuple, list)) else int(v))
        return Region.on(self, verts)


@dataclass(frozen=True)
class Region:
    vertices: frozenset[int]
    diameter: int = field(compare=False)

    @classmethod
    def on(cls, g: SpinGraph, vertices: Iterable[int]) -> "Region":
        verts = frozenset(int(v) for v in vertices)
        if not verts:
            raise ValueError("region must be nonempty")
        bad = [v for v in verts if not 0 <= v < g.n_vertices]
        if bad:
            raise ValueError(f"vertices {sorted(bad)} not in graph")
        idx = sorted(verts)
        diam = int(g.distances[np.ix_(idx, idx)].max())
        return cls(verts, diam)

    def __len__(self):
        return len(self.vertices)

    def __iter__(self):
        return iter(sorted(self.vertices))

    def sorted(self) -> list[int]:
        return sorted(self.vertices)


def _as_region(g: SpinGraph, r) -> Region:
    return r if isinstance(r, Region) else g.region(r)


def graph_distance(g: SpinGraph, a, b) -> int:
    """Shortest-path edge count between two disjoint regions."""
    a, b = _as_region(g, a), _as_region(g, b)
    if a.vertices & b.vertices:
        raise ValueError("regions overlap; distance is only defined for disjoint regions")
    return int(g.distances[np.ix_(a.sorted(), b.sorted())].min())


def distance_from(g: SpinGraph, a) -> np.ndarray:
    """Distance of every vertex to region ``a`` (0 inside ``a``)."""
    a = _as_region(g, a)
    return g.distances[a.sorted()].min(axis=0)


def boundary_term_count(g: SpinGraph, a) -> int:
    """Number of edges with exactly one endpoint in ``a``."""
    verts = _as_region(g, a).vertices
    return sum((u in verts) != (v in verts) for u, v in g.edges)


def complement(g: SpinGraph, a) -> Region:
    verts = _as_region(g, a).vertices
    return g.region(v for v in range(g.n_vertices) if v not in verts)


def build_chain(n: int, periodic: bool = False) -> SpinGraph:
    if n < 2:
        raise ValueError(f"chain needs n >= 2, got {n}")
    edges = [(i, i + 1) for i in range(n - 1)]
    if periodic and n > 2:
        edges.append((0, n - 1))
    elif periodic:
        # a 2-site ring would duplicate its only bond
        raise ValueError("periodic chain needs n >= 3")
    return SpinGraph.from_edges(
        n, edges, coords=tuple((i,) for i in range(n)),
        name=f"{'ring' if periodic else 'chain'}{n}",
    )


def build_torus_2d(nx: int, ny: int) -> SpinGraph:
    """Square-lattice torus; vertex (x, y) has index ``y * nx + x``.

    For nx or ny equal to 2 the two wrap-around bonds between the same pair of
    sites are kept as a single graph edge, so the edge count is only 2*nx*ny
    when both sides are at least 3. See :func:`torus_bonds` for the multiset.
    """
    if nx < 2 or ny < 2:
        raise ValueError(f"torus needs nx, ny >= 2, got {nx}x{ny}")
    coords = tuple((x, y) for y in range(ny) for x in range(nx))
    edges = {(min(u, v), max(u, v)) for u, v in torus_bonds(nx, ny)}
    return SpinGraph(nx * ny, frozenset(edges), coords=coords, name=f"torus{nx}x{ny}")


def torus_bonds(nx: int, ny: int) -> list[tuple[int, int]]:
    """The 2*nx*ny nearest-neighbour bonds of the torus, with multiplicity."""
    bonds = []
    for y in range(ny):
        for x in range(nx):
            i = y * nx + x
            bonds.append((i, y * nx + (x + 1) % nx))
            bonds.append((i, ((y + 1) % ny) * nx + x))
    return bonds


@dataclass(frozen=True)
class ToricLayout:
    """Qubits on the edges of an ``nx`` x ``ny`` torus.

    Horizontal edge (x, y)->(x+1, y) is qubit ``y*nx + x``; vertical edge
    (x, y)->(x, y+1) is qubit ``nx*ny + y*nx + x``.
    """

    nx: int
    ny: int
    graph: SpinGraph
    stars: tuple[tuple[int, ...], ...]
    plaquettes: tuple[tuple[int, ...], ...]

    @property
    def n_qubits(self) -> int:
        return 2 * self.nx * self.ny

    def h(self, x: int, y: int) -> int:
        return (y % self.ny) * self.nx + (x % self.nx)

    def v(self, x: int, y: int) -> int:
        return self.nx * self.ny + (y % self.ny) * self.nx + (x % self.nx)

    def x_loop_horizontal(self, y: int = 0) -> tuple[int, ...]:
        """Dual loop winding in x: the vertical edges of row ``y``."""
        return tuple(self.v(x, y) for x in range(self.nx))

    def x_loop_vertical(self, x: int = 0) -> tuple[int, ...]:
        """Dual loop winding in y: the horizontal edges of column ``x``."""
        return tuple(self.h(x, y) for y in range(self.ny))

    def z_loop_vertical(self, x: int = 0) -> tuple[int, ...]:
        return tuple(self.v(x, y) for y in range(self.ny))

    def z_loop_horizontal(self, y: int = 0) -> tuple[int, ...]:
        return tuple(self.h(x, y) for x in range(self.nx))


def build_toric_code_layout(nx: int, ny: int) -> ToricLayout:
    if nx < 2 or ny < 2:
        raise ValueError(f"toric layout needs nx, ny >= 2, got {nx}x{ny}")
    n = nx * ny
    h = lambda x, y: (y % ny) * nx + (x % nx)  # noqa: E731
    v = lambda x, y: n + (y % ny) * nx + (x % nx)  # noqa: E731
    stars = tuple(
        (h(x, y), h(x - 1, y), v(x, y), v(x, y - 1)) for y in range(ny) for x in range(nx)
    )
    plaquettes = tuple(
        (h(x, y), h(x, y + 1), v(x, y), v(x + 1, y)) for y in range(ny) for x in range(nx)
    )
    edges = set()
    for group in stars + plaquettes:
        for i, a in enumerate(group):
            for b in group[i + 1:]:
                if a != b:
                    edges.add((min(a, b), max(a, b)))
    coords = tuple((2 * x + 1, 2 * y) for y in range(ny) for x in range(nx)) + tuple(
        (2 * x, 2 * y + 1) for y in range(ny) for x in range(nx)
    )
    graph = SpinGraph(2 * n, frozenset(edges), coords=coords, name=f"toric{nx}x{ny}")
    return ToricLayout(nx, ny, graph, stars, plaquettes)


GRAPH_BUILDERS = {
    "chain": lambda n, periodic=False: build_chain(n, periodic),
    "torus2d": lambda nx, ny: build_torus_2d(nx, ny),
    "toric": lambda nx, ny: build_toric_code_layout(nx, ny).graph,
}

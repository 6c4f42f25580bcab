"""Topological-order accuracy of state pairs and circuit-depth lower-bound demos."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import schur

from ..bounds import LRConstants, tqo_epsilon_propagation
from ..evolution import PropagatorPlan, evolve_state
from ..hamiltonian import HamiltonianSpec, LocalTerm, Schedule
from ..lattice import SpinGraph, ToricLayout
from ..quantum import (
    X,
    DenseOperator,
    PureState,
    partial_trace,
    random_unitary,
    trace_norm,
    transition_matrix,
)

REGION_CAP = 10
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def connected_regions(graph: SpinGraph, max_diameter: int, cap: int = REGION_CAP) -> list[frozenset[int]]:
    """All connected vertex sets with graph diameter <= ``max_diameter`` and at most ``cap`` vertices."""
    if max_diameter < 0:
        return []
    dist = graph.distances
    found: set[frozenset[int]] = set()
    layer = {frozenset([v]) for v in range(graph.n_vertices)}
    while layer:
        found |= layer
        nxt = set()
        for region in layer:
            if len(region) >= cap:
                continue
            for u in region:
                for w in graph.neighbors[u]:
                    if w in region or any(dist[w, x] > max_diameter for x in region):
                        continue
                    nxt.add(region | {w})
        layer = nxt - found
    return sorted(found, key=lambda r: (len(r), sorted(r)))


def maximal_regions(regions: Iterable[frozenset[int]]) -> list[frozenset[int]]:
    regions = sorted(set(regions), key=len, reverse=True)
    keep: list[frozenset[int]] = []
    for r in regions:
        if not any(r < k for k in keep):
            keep.append(r)
    return sorted(keep, key=lambda r: (len(r), sorted(r)))


@dataclass
class TqoReport:
    """Per-l accuracy. ``eps(l)`` is the max over regions of diameter < l of
    max(eps_diag, eps_offdiag); single sites have diameter 0, so ``l = 1``
    probes single-site observables."""

    l_values: list[float]
    eps_diag: list[float]
    eps_offdiag: list[float]
    eps: list[float]
    region_count: list[int]
    cap: int = REGION_CAP
    eps_offdiag_hermitian: list[float] = field(default_factory=list)

    def at(self, l: float) -> float:
        return self.eps[self.l_values.index(l)]


def _region_eps(psi1, psi2, region) -> tuple[float, float]:
    keep = sorted(region)
    rho1 = partial_trace(psi1, keep).matrix
    rho2 = partial_trace(psi2, keep).matrix
    return 0.5 * trace_norm(rho1 - rho2), trace_norm(transition_matrix(psi1, psi2, keep))


def _hermitian_scan(psi1, psi2, region, samples: int, rng: np.random.Generator) -> float:
    x = transition_matrix(psi1, psi2, sorted(region)).matrix
    best = 0.0
    for _ in range(samples):
        g = rng.normal(size=x.shape) + 1j * rng.normal(size=x.shape)
        h = g + g.conj().T
        h /= np.abs(np.linalg.eigvalsh(h)).max()
        best = max(best, abs(np.trace(h @ x)))
    return float(best)


def tqo_accuracy(psi1: PureState, psi2: PureState, l_values: float | Sequence[float], graph: SpinGraph,
                 cap: int = REGION_CAP, hermitian_scan: int = 0, seed: int = 0) -> TqoReport:
    """Exact (l, eps) accuracy via trace norms; no observable sampling.

    eps_diag = 1/2 ||rho1_S - rho2_S||_1 and eps_offdiag = ||Tr_{not S} |psi2><psi1| ||_1,
    maximised over connected regions S. The off-diagonal value allows
    non-Hermitian observables; ``hermitian_scan > 0`` also records a
    random-search lower bound restricted to Hermitian ones.
    """
    overlap = abs(np.vdot(psi1.amplitudes, psi2.amplitudes))
    if overlap > 1e-10:
        raise ValueError(f"states are not orthogonal (overlap {overlap:.3e})")
    if psi1.n_qubits != graph.n_vertices:
        raise ValueError("state size does not match the graph")
    if np.isscalar(l_values):
        l_values = [l_values]
    rng = np.random.default_rng(seed)
    report = TqoReport([], [], [], [], [], cap)
    cache: dict[frozenset[int], tuple[float, float]] = {}
    for l in l_values:
        max_diam = int(np.ceil(l)) - 1
        regions = connected_regions(graph, max_diam, cap)
        d = o = 0.0
        herm = 0.0
        for region in maximal_regions(regions):
            if region not in cache:
                cache[region] = _region_eps(psi1, psi2, region)
            d, o = max(d, cache[region][0]), max(o, cache[region][1])
            if hermitian_scan:
                herm = max(herm, _hermitian_scan(psi1, psi2, region, hermitian_scan, rng))
        report.l_values.append(l)
        report.eps_diag.append(d)
        report.eps_offdiag.append(o)
        report.eps.append(max(d, o))
        report.region_count.append(len(regions))
        if hermitian_scan:
            report.eps_offdiag_hermitian.append(herm)
    return report


def gate_hamiltonian(u: np.ndarray) -> np.ndarray:
    """Hermitian H with exp(-i H) = u and ||H|| <= pi."""
    t, z = schur(np.asarray(u, dtype=complex), output="complex")
    theta = np.angle(np.diag(t))
    return -(z * theta) @ z.conj().T


Layer = list[tuple[tuple[int, ...], np.ndarray]]


def circuit_protocol(n: int, layers: Sequence[Layer], graph: SpinGraph | None = None) -> tuple[HamiltonianSpec, float]:
    """Piecewise-constant Hamiltonian running layer k during [k, k+1)."""
    terms = []
    for k, layer in enumerate(layers):
        used: set[int] = set()
        for support, u in layer:
            if used & set(support):
                raise ValueError(f"layer {k} applies two gates to the same qubit")
            used |= set(support)
            op = DenseOperator(gate_hamiltonian(u), tuple(support))
            terms.append(LocalTerm(op, Schedule.pulse(k, k + 1), "local", f"L{k}{support}"))
    return HamiltonianSpec(n, tuple(terms), graph, "circuit"), float(len(layers))


def random_two_local_layers(graph: SpinGraph, depth: int, rng: np.random.Generator) -> list[Layer]:
    """Each layer is a random maximal matching of graph edges carrying Haar 2-qubit gates."""
    layers = []
    edges = sorted(graph.edges)
    for _ in range(depth):
        order = rng.permutation(len(edges))
        used: set[int] = set()
        layer = []
        for i in order:
            u, v = edges[i]
            if u in used or v in used:
                continue
            used |= {u, v}
            layer.append(((u, v), random_unitary(4, rng)))
        layers.append(layer)
    return layers


def toric_preparation_layers(layout: ToricLayout) -> tuple[list[Layer], tuple[int, ...]]:
    """Linear-depth circuit mapping |0...0> to a toric-code ground state.

    For each independent star a pivot qubit untouched by earlier stars gets a
    Hadamard and then CNOTs onto the rest of the star, one CNOT per layer.
    Also returns a horizontal X loop avoiding the pivots, so that the circuit
    maps (X_loop)|0...0> to the second logical state.
    """
    processed: set[int] = set()
    pivots = []
    for star in layout.stars[:-1]:
        pivot = next(q for q in star if q not in processed)
        pivots.append((pivot, star))
        processed |= set(star)
    layers: list[Layer] = [[((p,), HADAMARD) for p, _ in pivots]]
    for pivot, star in pivots:
        for q in star:
            if q != pivot:
                layers.append([((pivot, q), CNOT)])
    pivot_set = {p for p, _ in pivots}
    loop = next(lp for lp in (layout.x_loop_horizontal(y) for y in range(layout.ny))
                if not pivot_set & set(lp))
    return layers, loop


def product_pair(n: int, flips: Sequence[int] | None = None) -> tuple[PureState, PureState]:
    """(|0...0>, X_flips|0...0>); all qubits flipped by default."""
    flips = range(n) if flips is None else flips
    bits = ["0"] * n
    for q in flips:
        bits[q] = "1"
    return PureState.basis("0" * n), PureState.basis("".join(bits))


@dataclass
class LowerBoundReport:
    duration: float
    l_f: float
    l_i: float
    eps_initial: float
    eps_final: float
    shape: float | None
    initial: TqoReport
    final: TqoReport


def circuit_lower_bound_demo(pair: tuple[PureState, PureState], protocol: HamiltonianSpec, duration: float,
                             l_f: float, graph: SpinGraph, lr: LRConstants | None = None,
                             d: int = 2, plan: PropagatorPlan = PropagatorPlan()) -> LowerBoundReport:
    """Evolve an orthogonal pair and compare TQO accuracy before (l_f/2) and after (l_f)."""
    psi1, psi2 = pair
    if duration > 0:
        run = PropagatorPlan(0.0, duration, plan.dt, "exact-step", plan.tolerance, plan.backend)
        out1, out2 = evolve_state(protocol, psi1, run), evolve_state(protocol, psi2, run)
    else:
        out1, out2 = psi1, psi2
    l_i = l_f / 2
    initial = tqo_accuracy(psi1, psi2, [l_i], graph)
    final = tqo_accuracy(out1, out2, [l_f], graph)
    shape = None
    if lr is not None:
        shape = tqo_epsilon_propagation(final.eps[0], l_f, lr, duration, d)
    return LowerBoundReport(duration, l_f, l_i, initial.eps[0], final.eps[0], shape, initial, final)


__all__ = [
    "X", "TqoReport", "tqo_accuracy", "connected_regions", "maximal_regions", "gate_hamiltonian",
    "circuit_protocol", "random_two_local_layers", "toric_preparation_layers", "product_pair",
    "LowerBoundReport", "circuit_lower_bound_demo",
]

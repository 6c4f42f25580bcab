"""Local time-dependent Hamiltonians H(t) = sum_k r_k(t) h_k."""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .lattice import SpinGraph, ToricLayout, build_chain
from .quantum import (
    MAX_DENSE_QUBITS,
    MAX_QUBITS,
    CapabilityError,
    DenseOperator,
    PureState,
    X,
    Y,
    Z,
    apply_local,
    check_size,
    kron_embed,
    operator_norm,
    pauli,
)

MAX_TORIC_QUBITS = 16


@dataclass(frozen=True)
class Schedule:
    """Coefficient r(t).

    Piecewise-constant: ``values[0]`` for ``t < breakpoints[0]``, ``values[i]``
    on ``[breakpoints[i-1], breakpoints[i])``, and ``values[-1]`` afterwards.
    Closed-form schedules carry ``func`` and a declared ``bound``.
    """

    breakpoints: tuple[float, ...] = ()
    values: tuple[float, ...] = (1.0,)
    func: Callable[[float], float] | None = field(default=None, compare=False)
    declared_bound: float | None = None

    def __post_init__(self):
        if self.func is None:
            if len(self.values) != len(self.breakpoints) + 1:
                raise ValueError("need len(values) == len(breakpoints) + 1")
            if any(b >= a for a, b in zip(self.breakpoints[1:], self.breakpoints)):
                raise ValueError("breakpoints must be strictly increasing")
        elif self.declared_bound is None:
            raise ValueError("closed-form schedules need a bound")

    @classmethod
    def constant(cls, value: float = 1.0) -> "Schedule":
        return cls((), (float(value),))

    @classmethod
    def pulse(cls, start: float, stop: float, value: float = 1.0) -> "Schedule":
        """``value`` on ``[start, stop)``, zero elsewhere."""
        return cls((float(start), float(stop)), (0.0, float(value), 0.0))

    @classmethod
    def closed_form(
        cls, func: Callable[[float], float], bound: float | None = None, window: tuple[float, float] = (0.0, 1.0)
    ) -> "Schedule":
        """Smooth r(t). Without ``bound`` the max of |r| over 1000 samples of ``window`` is recorded."""
        ts = np.linspace(*window, 1000)
        worst = max(abs(func(t)) for t in ts)
        if bound is None:
            bound = worst
        if worst > bound + 1e-12:
            raise ValueError(f"|r(t)| reaches {worst} > declared bound {bound}")
        return cls((), (), func=func, declared_bound=float(bound))

    @property
    def is_piecewise_constant(self) -> bool:
        return self.func is None

    @property
    def is_constant(self) -> bool:
        return self.func is None and len(set(self.values)) == 1

    @property
    def bound(self) -> float:
        if self.func is not None:
            return self.declared_bound
        return max(abs(v) for v in self.values)

    def __call__(self, t: float) -> float:
        if self.func is not None:
            return float(self.func(t))
        return self.values[bisect.bisect_right(self.breakpoints, t)]

    def scaled(self, alpha: float) -> "Schedule":
        if self.func is not None:
            f = self.func
            return Schedule((), (), func=lambda t: alpha * f(t),
                            declared_bound=abs(alpha) * self.declared_bound)
        return Schedule(self.breakpoints, tuple(alpha * v for v in self.values))

    def time_reversed(self, total: float) -> "Schedule":
        """s -> -r(total - s)."""
        if self.func is not None:
            f = self.func
            return Schedule((), (), func=lambda s: -f(total - s), declared_bound=self.declared_bound)
        return Schedule(
            tuple(total - b for b in reversed(self.breakpoints)),
            tuple(-v for v in reversed(self.values)),
        )


@dataclass(frozen=True)
class LocalTerm:
    """``schedule(t) * op``.

    ``kind`` is "local" (1-2 sites on graph edges), "stabilizer", "coupling"
    (product coupling across a cut) or "block" (acts inside one side of a cut).
    Only "local" terms are checked against the graph.
    """

    op: DenseOperator
    schedule: Schedule = Schedule.constant()
    kind: str = "local"
    label: str = ""

    @property
    def support(self) -> tuple[int, ...]:
        return self.op.support

    @property
    def norm(self) -> float:
        return operator_norm(self.op)

    @property
    def strength(self) -> float:
        return self.norm * self.schedule.bound


@dataclass(frozen=True)
class HamiltonianSpec:
    n_qubits: int
    terms: tuple[LocalTerm, ...]
    graph: SpinGraph | None = None
    name: str = "H"

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for term in self.terms:
            if any(q < 0 or q >= self.n_qubits for q in term.support):
                raise ValueError(f"term {term.label} support {term.support} out of range")
            if not np.allclose(term.op.matrix, term.op.matrix.conj().T, atol=1e-12):
                raise ValueError(f"term {term.label} is not Hermitian")
            if term.kind == "local":
                if len(term.support) > 2:
                    raise ValueError(f"local term {term.label} acts on {len(term.support)} sites")
                if self.graph is not None and len(term.support) == 2 and not self.graph.has_edge(*term.support):
                    raise ValueError(f"term {term.label} couples non-neighbours {term.support}")

    @property
    def g(self) -> float:
        return coupling_strength(self)

    @property
    def is_static(self) -> bool:
        return all(t.schedule.is_constant for t in self.terms)

    @property
    def is_piecewise_constant(self) -> bool:
        return all(t.schedule.is_piecewise_constant for t in self.terms)

    def breakpoints(self, t0: float, t1: float) -> list[float]:
        lo, hi = min(t0, t1), max(t0, t1)
        pts = {b for t in self.terms for b in t.schedule.breakpoints if lo < b < hi}
        return sorted(pts)

    def __add__(self, other: "HamiltonianSpec") -> "HamiltonianSpec":
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit counts differ")
        return HamiltonianSpec(self.n_qubits, self.terms + other.terms, self.graph or other.graph,
                               f"{self.name}+{other.name}")

    def scaled(self, alpha: float) -> "HamiltonianSpec":
        terms = tuple(replace(t, schedule=t.schedule.scaled(alpha)) for t in self.terms)
        return replace(self, terms=terms)

    def time_reversed(self, total: float) -> "HamiltonianSpec":
        """H'(s) = -H(total - s); evolving under H' for ``total`` undoes H."""
        terms = tuple(replace(t, schedule=t.schedule.time_reversed(total)) for t in self.terms)
        return replace(self, terms=terms)

    def with_schedule(self, schedule: Schedule) -> "HamiltonianSpec":
        terms = tuple(replace(t, schedule=schedule) for t in self.terms)
        return replace(self, terms=terms)


def coupling_strength(h: HamiltonianSpec) -> float:
    """g = max over terms of ||h_k|| * max_t |r_k(t)| (vertex terms included)."""
    return max((t.strength for t in h.terms), default=0.0)


def build_tfim(graph: SpinGraph, J: float, h: float) -> HamiltonianSpec:
    """-J Z_i Z_j on every edge, -h X_i on every vertex."""
    terms = []
    for i, j in sorted(graph.edges):
        terms.append(LocalTerm(pauli("ZZ", i, j), Schedule.constant(-J), label=f"ZZ{i},{j}"))
    for i in range(graph.n_vertices):
        terms.append(LocalTerm(pauli("X", i), Schedule.constant(-h), label=f"X{i}"))
    return HamiltonianSpec(graph.n_vertices, tuple(terms), graph, f"tfim(J={J},h={h})")


def build_heisenberg(graph: SpinGraph, J: float) -> HamiltonianSpec:
    xyz = np.kron(X, X) + np.kron(Y, Y) + np.kron(Z, Z)
    terms = [
        LocalTerm(DenseOperator(xyz, (i, j)), Schedule.constant(J), label=f"XYZ{i},{j}")
        for i, j in sorted(graph.edges)
    ]
    return HamiltonianSpec(graph.n_vertices, tuple(terms), graph, f"heisenberg(J={J})")


def _x_mask(qubits: Sequence[int], n: int) -> int:
    return sum(1 << (n - 1 - q) for q in qubits)


def project_stars(layout: ToricLayout, vec: np.ndarray) -> np.ndarray:
    """Apply prod_s (1 + A_s)/2 to a state vector (unnormalised)."""
    n = layout.n_qubits
    idx = np.arange(2 ** n)
    out = np.asarray(vec, dtype=complex).copy()
    for star in layout.stars:
        out = 0.5 * (out + out[idx ^ _x_mask(star, n)])
    return out


def apply_x_string(vec: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    n = int(np.log2(len(vec)))
    return np.asarray(vec)[np.arange(len(vec)) ^ _x_mask(qubits, n)]


@dataclass(frozen=True)
class ToricCode:
    layout: ToricLayout
    spec: HamiltonianSpec

    def ground_state(self, x_loops: Sequence[Sequence[int]] = ()) -> PureState:
        """Normalised projection of ``(prod X_loop)|0...0>`` onto the star +1 space."""
        n = self.layout.n_qubits
        vec = np.zeros(2 ** n, dtype=complex)
        vec[0] = 1
        for loop in x_loops:
            vec = apply_x_string(vec, loop)
        return PureState.normalize(project_stars(self.layout, vec))

    def ground_pair(self) -> tuple[PureState, PureState]:
        """Projections of |0...0> and of X on a horizontal dual loop times |0...0>."""
        return self.ground_state(), self.ground_state([self.layout.x_loop_horizontal(0)])

    def ground_basis(self) -> list[PureState]:
        lh, lv = self.layout.x_loop_horizontal(0), self.layout.x_loop_vertical(0)
        return [self.ground_state(loops) for loops in ((), (lh,), (lv,), (lh, lv))]


def build_toric_code(layout: ToricLayout) -> ToricCode:
    """H = -sum_s A_s - sum_p B_p with A_s = X^{star}, B_p = Z^{plaquette}."""
    check_size("toric code", layout.n_qubits, MAX_TORIC_QUBITS)
    terms = []
    for k, star in enumerate(layout.stars):
        terms.append(LocalTerm(pauli("XXXX", *star), Schedule.constant(-1.0), "stabilizer", f"A{k}"))
    for k, plaq in enumerate(layout.plaquettes):
        terms.append(LocalTerm(pauli("ZZZZ", *plaq), Schedule.constant(-1.0), "stabilizer", f"B{k}"))
    spec = HamiltonianSpec(layout.n_qubits, tuple(terms), layout.graph,
                           f"toric{layout.nx}x{layout.ny}")
    return ToricCode(layout, spec)


def build_product_coupling(
    JA: DenseOperator, JB: DenseOperator, schedule: Schedule = Schedule.constant(), n_qubits: int | None = None
) -> HamiltonianSpec:
    """Single term ``r(t) JA (x) JB``; both factors must have norm <= 1."""
    for name, op in (("JA", JA), ("JB", JB)):
        nrm = operator_norm(op)
        if nrm > 1 + 1e-12:
            raise ValueError(f"||{name}|| = {nrm:.6g} exceeds 1")
    if set(JA.support) & set(JB.support):
        raise ValueError("JA and JB must act on disjoint qubits")
    op = DenseOperator(np.kron(JA.matrix, JB.matrix), JA.support + JB.support)
    n = n_qubits if n_qubits is not None else max(op.support) + 1
    term = LocalTerm(op, schedule, "coupling", "JAxJB")
    return HamiltonianSpec(n, (term,), None, "product-coupling")


def block_term(n_qubits: int, op: DenseOperator, schedule: Schedule = Schedule.constant(),
                label: str = "") -> HamiltonianSpec:
    """A term acting inside one side of a cut (H_A or H_B)."""
    return HamiltonianSpec(n_qubits, (LocalTerm(op, schedule, "block", label),), None, label or "block")


# embedded blocks are cached per spec up to this size (16 MB per block at n=10)
DENSE_CACHE_LIMIT = 10


def _schedule_key(s: Schedule):
    return ("f", id(s.func)) if s.func is not None else ("p", s.breakpoints, s.values)


def _dense_blocks(h: HamiltonianSpec) -> list[tuple[Schedule, np.ndarray]]:
    """Terms summed per distinct schedule, as full-system matrices."""
    cached = h.__dict__.get("_dense_blocks")
    if cached is not None:
        return cached
    groups: dict = {}
    for term in h.terms:
        key = _schedule_key(term.schedule)
        if key not in groups:
            groups[key] = [term.schedule, np.zeros((2 ** h.n_qubits,) * 2, dtype=complex)]
        groups[key][1] += kron_embed(term.op, h.n_qubits).matrix
    blocks = [(sched, m) for sched, m in groups.values()]
    if h.n_qubits <= DENSE_CACHE_LIMIT:
        object.__setattr__(h, "_dense_blocks", blocks)
    return blocks


def assemble_dense(h: HamiltonianSpec, t: float = 0.0) -> np.ndarray:
    check_size("dense Hamiltonian", h.n_qubits, MAX_DENSE_QUBITS)
    n = h.n_qubits
    out = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for sched, m in _dense_blocks(h):
        r = sched(t)
        if r != 0:
            out += r * m
    return out


def matvec(h: HamiltonianSpec, t: float, v: np.ndarray) -> np.ndarray:
    check_size("matrix-free Hamiltonian", h.n_qubits, MAX_QUBITS)
    v = np.asarray(v, dtype=complex)
    out = np.zeros_like(v)
    for term in h.terms:
        r = term.schedule(t)
        if r != 0:
            out += r * apply_local(v, term.op)
    return out


def model_from_config(name: str, graph_spec: dict | None = None, **params):
    """Build a named model: tfim, heisenberg, toric. Returns a HamiltonianSpec."""
    from .lattice import GRAPH_BUILDERS, build_toric_code_layout

    if name == "toric":
        return build_toric_code(build_toric_code_layout(params["nx"], params["ny"])).spec
    graph_spec = dict(graph_spec or {"kind": "chain", "n": params.pop("n", 2)})
    kind = graph_spec.pop("kind")
    graph = GRAPH_BUILDERS[kind](**graph_spec)
    if name == "tfim":
        return build_tfim(graph, params.get("J", 1.0), params.get("h", 1.0))
    if name == "heisenberg":
        return build_heisenberg(graph, params.get("J", 1.0))
    raise ValueError(f"unknown model {name!r}; expected tfim, heisenberg or toric")


__all__ = [
    "CapabilityError", "Schedule", "LocalTerm", "HamiltonianSpec", "ToricCode",
    "coupling_strength", "build_tfim", "build_heisenberg", "build_toric_code",
    "build_product_coupling", "assemble_dense", "matvec", "build_chain",
]

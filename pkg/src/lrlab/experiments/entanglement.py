"""Entanglement generated across a cut, checked against the c* sum|r_k| rate budget."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..bounds import cstar
from ..evolution import PropagatorPlan, evolve_vector
from ..hamiltonian import (
    HamiltonianSpec,
    LocalTerm,
    Schedule,
    block_term,
    build_product_coupling,
)
from ..quantum import DenseOperator, PureState, X, operator_norm, partial_trace, random_state, von_neumann_entropy
from .table import ExperimentResult

RATE_SLACK = 1e-3


def cut_weight(op: DenseOperator, side_a: set[int]) -> float:
    """sum_j s_j ||A_j|| ||B_j|| over the operator-Schmidt decomposition across the cut.

    Equals ||JA|| ||JB|| for a product term; zero if the term lies on one side.
    """
    a = [i for i, q in enumerate(op.support) if q in side_a]
    b = [i for i, q in enumerate(op.support) if q not in side_a]
    if not a or not b:
        return 0.0
    k = len(op.support)
    da, db = 2 ** len(a), 2 ** len(b)
    t = op.matrix.reshape([2] * (2 * k)).transpose(a + [k + i for i in a] + b + [k + i for i in b])
    u, s, vh = np.linalg.svd(t.reshape(da * da, db * db))
    total = 0.0
    for j in np.flatnonzero(s > 1e-14 * s[0]):
        total += s[j] * operator_norm(u[:, j].reshape(da, da)) * operator_norm(vh[j].reshape(db, db))
    return float(total)


def crossing_terms(model: HamiltonianSpec, region_a: Sequence[int]) -> list[tuple[LocalTerm, float]]:
    side = set(region_a)
    out = []
    for term in model.terms:
        w = cut_weight(term.op, side)
        if w > 0:
            out.append((term, w))
    return out


def rate_budget(model: HamiltonianSpec, region_a: Sequence[int], t: float, crossing=None) -> float:
    """c* * sum_k |r_k(t)| with each crossing term rescaled to norm-1 product factors."""
    crossing = crossing_terms(model, region_a) if crossing is None else crossing
    return cstar() * sum(abs(term.schedule(t)) * w for term, w in crossing)


def integrated_budget(model: HamiltonianSpec, region_a: Sequence[int], t0: float, t1: float,
                      samples: int = 2001, crossing=None) -> float:
    """c* int_{t0}^{t1} sum_k |r_k| (exact for piecewise-constant schedules)."""
    if t1 <= t0:
        return 0.0
    crossing = crossing_terms(model, region_a) if crossing is None else crossing
    if all(term.schedule.is_piecewise_constant for term, _ in crossing):
        cuts = sorted({b for term, _ in crossing for b in term.schedule.breakpoints if t0 < b < t1})
        pts = [t0, *cuts, t1]
        return sum((b - a) * rate_budget(model, region_a, 0.5 * (a + b), crossing)
                   for a, b in zip(pts[:-1], pts[1:]))
    ts = np.linspace(t0, t1, samples)
    return float(np.trapz([rate_budget(model, region_a, t, crossing) for t in ts], ts))


def _entropy(v: np.ndarray, region_a) -> float:
    return von_neumann_entropy(partial_trace(v / np.linalg.norm(v), region_a))


def entropy_rate(model: HamiltonianSpec, v: np.ndarray, t: float, region_a, h: float,
                 plan: PropagatorPlan = PropagatorPlan()) -> tuple[float, float]:
    """Central-difference dS/dt at ``t`` for the state ``v`` (given at time ``t``).

    Returns the Richardson-extrapolated rate and |D(h) - D(h/2)| as its error.
    """
    def central(step):
        fwd = evolve_vector(model, v, t, t + step, plan)
        bwd = evolve_vector(model, v, t, t - step, plan)
        return (_entropy(fwd, region_a) - _entropy(bwd, region_a)) / (2 * step)

    d1, d2 = central(h), central(h / 2)
    return (4 * d2 - d1) / 3, abs(d1 - d2)


def entropy_growth(model: HamiltonianSpec, psi0: PureState, region_a: Sequence[int], t_values: Sequence[float],
                   plan: PropagatorPlan = PropagatorPlan(), fd_step: float | None = None) -> ExperimentResult:
    """S(rho_A(t)) with pointwise rate and integrated budget checks.

    Quantities per t: ``entropy``, ``rate`` (error = finite-difference estimate),
    ``rate_budget``, ``integrated_budget`` (S(0) + c* int sum|r_k|) and
    ``violation`` (1 if the relevant check fails). The first grid point is
    checked against the integrated budget only, since dS/dt is singular where
    the spectrum of rho_A touches zero.
    """
    t_values = [float(t) for t in t_values]
    if any(b <= a for a, b in zip(t_values, t_values[1:])):
        raise ValueError("t grid must be strictly increasing")
    spacing = min(np.diff(t_values)) if len(t_values) > 1 else 0.1
    h = fd_step if fd_step is not None else spacing / 10
    region_a = sorted(region_a)
    res = ExperimentResult("entropy_growth", ("t", "quantity"), metadata={"model": model.name, "A": region_a})
    crossing = crossing_terms(model, region_a)
    v, t_prev = psi0.amplitudes, t_values[0]
    s0 = None
    for i, t in enumerate(t_values):
        v = evolve_vector(model, v, t_prev, t, plan)
        v = v / np.linalg.norm(v)
        t_prev = t
        s = _entropy(v, region_a)
        s0 = s if s0 is None else s0
        rate, err = entropy_rate(model, v, t, region_a, h, plan)
        budget = rate_budget(model, region_a, t, crossing)
        total = s0 + integrated_budget(model, region_a, t_values[0], t, crossing=crossing)
        if i == 0:
            violated = False
        elif i == 1:
            violated = s > total + RATE_SLACK
        else:
            violated = rate > budget + RATE_SLACK or s > total + RATE_SLACK
        res.add(t, "entropy", value=s, error=plan.tolerance)
        res.add(t, "rate", value=rate, error=err)
        res.add(t, "rate_budget", value=budget, error=0.0)
        res.add(t, "integrated_budget", value=total, error=0.0)
        res.add(t, "violation", value=float(violated), error=0.0)
    return res


def schmidt_input(x: float, phase: float = -np.pi / 2) -> PureState:
    """sqrt(x)|00> + e^{i phase} sqrt(1-x)|11>."""
    v = np.zeros(4, dtype=complex)
    v[0], v[3] = np.sqrt(x), np.exp(1j * phase) * np.sqrt(1 - x)
    return PureState(v)


def xx_coupling(strength: float = 1.0) -> HamiltonianSpec:
    return build_product_coupling(DenseOperator(X, (0,)), DenseOperator(X, (1,)), Schedule.constant(strength))


@dataclass(frozen=True)
class CouplingInstance:
    model: HamiltonianSpec
    psi0: PureState
    region_a: tuple[int, ...]
    rates: tuple[float, ...]


def _random_hermitian(dim: int, rng: np.random.Generator, norm: float) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = g + g.conj().T
    return h * (norm / operator_norm(h))


def random_coupling_instance(rng: np.random.Generator, max_terms: int = 2) -> CouplingInstance:
    """Random bipartite model: 1-2 system qubits plus up to one ancilla per side.

    Couplings r_k JA^k (x) JB^k act on the system qubits with ||JA||, ||JB|| <= 1;
    H_A and H_B are random fields on each side's system qubits. The initial
    state is a product across the cut (random, possibly entangled, within
    each side, ancillas included).
    """
    na, nb = int(rng.integers(1, 3)), int(rng.integers(1, 3))
    anc_a, anc_b = int(rng.integers(0, 2)), int(rng.integers(0, 2))
    side_a = tuple(range(na + anc_a))
    sys_a = tuple(range(na))
    sys_b = tuple(range(len(side_a), len(side_a) + nb))
    n = len(side_a) + nb + anc_b
    terms: list[LocalTerm] = []
    rates = []
    for _ in range(int(rng.integers(1, max_terms + 1))):
        ja = DenseOperator(_random_hermitian(2 ** na, rng, rng.uniform(0.3, 1.0)), sys_a)
        jb = DenseOperator(_random_hermitian(2 ** nb, rng, rng.uniform(0.3, 1.0)), sys_b)
        r = float(rng.uniform(-1, 1))
        terms += build_product_coupling(ja, jb, Schedule.constant(r), n).terms
        rates.append(r)
    terms += block_term(n, DenseOperator(_random_hermitian(2 ** na, rng, rng.uniform(0, 2)), sys_a)).terms
    terms += block_term(n, DenseOperator(_random_hermitian(2 ** nb, rng, rng.uniform(0, 2)), sys_b)).terms
    psi_a = random_state(len(side_a), rng).amplitudes
    psi_b = random_state(n - len(side_a), rng).amplitudes
    model = HamiltonianSpec(n, tuple(terms), None, "random-coupling")
    return CouplingInstance(model, PureState.normalize(np.kron(psi_a, psi_b)), side_a, tuple(rates))

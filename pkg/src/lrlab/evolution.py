"""Schrodinger and Heisenberg propagation for piecewise-constant and smooth H(t)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .hamiltonian import HamiltonianSpec, assemble_dense, matvec
from .quantum import (
    MAX_DENSE_QUBITS,
    MAX_QUBITS,
    DenseOperator,
    PureState,
    apply_local,
    check_size,
    kron_embed,
)

DENSE_AUTO_LIMIT = 10
KRYLOV_DIM = 30
KRYLOV_TOL = 1e-10


class ConvergenceError(RuntimeError):
    """Step halving did not reach the requested tolerance."""

    def __init__(self, msg: str, previous: np.ndarray, last: np.ndarray):
        super().__init__(msg)
        self.previous = previous
        self.last = last


@dataclass(frozen=True)
class PropagatorPlan:
    """Evolution window and integrator settings (hbar = 1)."""

    t_start: float = 0.0
    t_end: float = 1.0
    dt: float = 0.01
    method: str = "exact-step"
    tolerance: float = 1e-8
    backend: str = "auto"
    max_halvings: int = 8

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end < self.t_start:
            raise ValueError("t_end must be >= t_start")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.method not in ("exact-step", "trotter-1", "trotter-2"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.backend not in ("auto", "dense", "krylov"):
            raise ValueError(f"unknown backend {self.backend!r}")

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def until(self, t: float, t_start: float = 0.0) -> "PropagatorPlan":
        return PropagatorPlan(t_start, t, self.dt, self.method, self.tolerance, self.backend,
                              self.max_halvings)


def hermitian_expm(h: np.ndarray, tau: float) -> np.ndarray:
    """exp(-i tau h) for Hermitian ``h``."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * tau * w)) @ v.conj().T


def expm_krylov(
    apply_h: Callable[[np.ndarray], np.ndarray],
    v: np.ndarray,
    tau: float,
    m: int = KRYLOV_DIM,
    tol: float = KRYLOV_TOL,
) -> np.ndarray:
    """exp(-i tau H) v by Lanczos with full re-orthogonalisation.

    The step is split in halves until the residual estimate drops below ``tol``.
    """
    v = np.asarray(v, dtype=complex)
    beta0 = np.linalg.norm(v)
    if beta0 == 0 or tau == 0:
        return v.copy()
    out = v / beta0
    remaining = tau
    step = tau
    while remaining != 0:
        step = math.copysign(min(abs(step), abs(remaining)), tau)
        res, err = _lanczos_step(apply_h, out, step, m, tol)
        if err > tol:
            step /= 2
            if abs(step) < 1e-12 * abs(tau):
                raise ConvergenceError("Krylov step size underflow", out, res)
            continue
        out = res / np.linalg.norm(res)
        remaining -= step
        if abs(remaining) < 1e-15 * abs(tau):
            remaining = 0
        step *= 2
    return beta0 * out


def _lanczos_step(apply_h, v, tau, m, tol):
    dim = v.size
    m = min(m, dim)
    basis = np.empty((m + 1, dim), dtype=complex)
    alpha = np.zeros(m)
    beta = np.zeros(m)
    basis[0] = v
    err = np.inf
    for j in range(m):
        w = apply_h(basis[j])
        alpha[j] = np.vdot(basis[j], w).real
        w = w - alpha[j] * basis[j]
        if j > 0:
            w -= beta[j - 1] * basis[j - 1]
        w -= basis[: j + 1].T @ (basis[: j + 1].conj() @ w)
        beta[j] = np.linalg.norm(w)
        evals, evecs = eigh_tridiagonal(alpha[: j + 1], beta[:j]) if j > 0 else (alpha[:1], np.ones((1, 1)))
        coeff = evecs @ (np.exp(-1j * tau * evals) * evecs[0].conj())
        err = beta[j] * abs(coeff[j])
        if beta[j] < 1e-13 or err <= tol:
            return basis[: j + 1].T @ coeff, (0.0 if beta[j] < 1e-13 else err)
        basis[j + 1] = w / beta[j]
    return basis[:m].T @ coeff, err


def _use_dense(h: HamiltonianSpec, backend: str) -> bool:
    if backend == "dense":
        check_size("dense evolution", h.n_qubits, MAX_DENSE_QUBITS)
        return True
    check_size("evolution", h.n_qubits, MAX_QUBITS)
    if backend == "krylov":
        return False
    return h.n_qubits <= DENSE_AUTO_LIMIT


def time_steps(h: HamiltonianSpec, t0: float, t1: float, dt: float) -> list[tuple[float, float]]:
    """Sub-intervals for the midpoint rule, split at schedule breakpoints.

    Segments on which H is constant become a single exact step. Works for
    ``t1 < t0`` (backwards propagation).
    """
    if t0 == t1:
        return []
    sign = 1 if t1 > t0 else -1
    cuts = h.breakpoints(t0, t1)
    if sign < 0:
        cuts = cuts[::-1]
    pts = [t0, *cuts, t1]
    steps = []
    smooth = not h.is_piecewise_constant
    for a, b in zip(pts[:-1], pts[1:]):
        k = max(1, math.ceil(abs(b - a) / dt - 1e-9)) if smooth else 1
        edges = np.linspace(a, b, k + 1)
        steps.extend(zip(edges[:-1], edges[1:]))
    return steps


def _propagate_vector(h, v, t0, t1, dt, dense):
    out = np.asarray(v, dtype=complex)
    for a, b in time_steps(h, t0, t1, dt):
        mid = 0.5 * (a + b)
        if dense:
            out = hermitian_expm(assemble_dense(h, mid), b - a) @ out
        else:
            out = expm_krylov(lambda x: matvec(h, mid, x), out, b - a)
    return out


def _converged(run, tol, dt, max_halvings, needs_check):
    """Run ``run(dt)``; if the schedule is smooth, halve ``dt`` until stable.

    The midpoint rule is symmetric, so its error expands in even powers of dt
    and the error of the finer run is estimated as |cur - prev| / 3.
    """
    prev = prev_last = run(dt)
    if not needs_check:
        return prev
    for _ in range(max_halvings):
        dt /= 2
        cur = run(dt)
        scale = math.sqrt(cur.shape[0]) if cur.ndim == 2 else 1.0
        if np.linalg.norm(cur - prev) / (3 * scale) < tol:
            return cur
        prev_last, prev = prev, cur
    raise ConvergenceError(
        f"no convergence to {tol} after {max_halvings} dt halvings", prev_last, prev
    )


def evolve_vector(h: HamiltonianSpec, v: np.ndarray, t0: float, t1: float,
                  plan: PropagatorPlan = PropagatorPlan()) -> np.ndarray:
    """U(t1, t0) v for an arbitrary (not necessarily normalised) vector."""
    v = np.asarray(v, dtype=complex)
    if v.size != 2 ** h.n_qubits:
        raise ValueError(f"vector of size {v.size} does not match {h.n_qubits} qubits")
    if plan.method != "exact-step":
        if t1 < t0:
            raise ValueError("Trotter path only runs forwards")
        order = 1 if plan.method == "trotter-1" else 2
        steps = max(1, math.ceil((t1 - t0) / plan.dt - 1e-9))
        return trotter_vector(h, v, t0, t1, steps, order)
    dense = _use_dense(h, plan.backend)
    return _converged(lambda dt: _propagate_vector(h, v, t0, t1, dt, dense),
                      plan.tolerance, plan.dt, plan.max_halvings, not h.is_piecewise_constant)


def evolve_state(h: HamiltonianSpec, psi: PureState, plan: PropagatorPlan = PropagatorPlan()) -> PureState:
    if psi.n_qubits != h.n_qubits:
        raise ValueError(f"state has {psi.n_qubits} qubits, Hamiltonian has {h.n_qubits}")
    out = evolve_vector(h, psi.amplitudes, plan.t_start, plan.t_end, plan)
    return PureState(out / np.linalg.norm(out))


def propagator(h: HamiltonianSpec, t0: float, t1: float, plan: PropagatorPlan = PropagatorPlan()) -> np.ndarray:
    """Dense U(t1, t0)."""
    check_size("dense propagator", h.n_qubits, MAX_DENSE_QUBITS)

    def run(dt):
        u = np.eye(2 ** h.n_qubits, dtype=complex)
        for a, b in time_steps(h, t0, t1, dt):
            u = hermitian_expm(assemble_dense(h, 0.5 * (a + b)), b - a) @ u
        return u

    return _converged(run, plan.tolerance, plan.dt, plan.max_halvings, not h.is_piecewise_constant)


class StaticPropagator:
    """Spectral propagator for a time-independent Hamiltonian; diagonalises once."""

    def __init__(self, h: HamiltonianSpec):
        if not h.is_static:
            raise ValueError("StaticPropagator needs constant schedules")
        self.h = h
        self.energies, self.modes = np.linalg.eigh(assemble_dense(h, 0.0))
        self._cached: tuple | None = None

    def unitary(self, t: float) -> np.ndarray:
        return (self.modes * np.exp(-1j * t * self.energies)) @ self.modes.conj().T

    def evolve(self, v: np.ndarray, t: float) -> np.ndarray:
        return self.modes @ (np.exp(-1j * t * self.energies) * (self.modes.conj().T @ v))

    def heisenberg(self, op: DenseOperator, t: float) -> np.ndarray:
        """U^dagger(t) O U(t) with ``O`` embedded into the full system."""
        # work in the eigenbasis: O_E(t)_{ab} = e^{i(E_a - E_b)t} O_E_{ab}
        key = (op.support, op.matrix.tobytes())
        cached = self._cached
        if cached is None or cached[0] != key:
            full = kron_embed(op, self.h.n_qubits).matrix
            cached = self._cached = (key, self.modes.conj().T @ full @ self.modes)
        oe = cached[1]
        phase = np.exp(1j * t * self.energies)
        return self.modes @ (phase[:, None] * oe * phase.conj()[None, :]) @ self.modes.conj().T


def heisenberg_operator(h: HamiltonianSpec, op: DenseOperator, t: float,
                        plan: PropagatorPlan = PropagatorPlan()) -> DenseOperator:
    """O(t) = U(t)^dagger O U(t) on the full system (dense, n <= 12)."""
    check_size("dense Heisenberg operator", h.n_qubits, MAX_DENSE_QUBITS)
    full = kron_embed(op, h.n_qubits).matrix
    if t == 0:
        return DenseOperator(full, tuple(range(h.n_qubits)))
    u = propagator(h, 0.0, t, plan)
    return DenseOperator(u.conj().T @ full @ u, tuple(range(h.n_qubits)))


def heisenberg_apply(h: HamiltonianSpec, op: DenseOperator, t: float, v: np.ndarray,
                     plan: PropagatorPlan = PropagatorPlan()) -> np.ndarray:
    """U^dagger(t) O U(t) v without forming any 2^n x 2^n matrix."""
    check_size("matrix-free Heisenberg", h.n_qubits, MAX_QUBITS)
    if t == 0:
        return apply_local(v, op)
    w = evolve_vector(h, v, 0.0, t, plan)
    w = apply_local(w, op)
    return evolve_vector(h, w, t, 0.0, plan)


def _group_matrix(h: HamiltonianSpec, group: Sequence[int], t: float):
    support = sorted({q for k in group for q in h.terms[k].support})
    local = np.zeros((2 ** len(support),) * 2, dtype=complex)
    for k in group:
        term = h.terms[k]
        r = term.schedule(t)
        if r == 0:
            continue
        relabeled = DenseOperator(term.op.matrix, tuple(support.index(q) for q in term.support))
        local += r * kron_embed(relabeled, len(support)).matrix
    return local, tuple(support)


def default_groups(h: HamiltonianSpec) -> list[list[int]]:
    return [[k] for k in range(len(h.terms))]


def trotter_vector(h: HamiltonianSpec, v: np.ndarray, t0: float, t1: float, steps: int, order: int,
                   groups: Sequence[Sequence[int]] | None = None) -> np.ndarray:
    if order not in (1, 2):
        raise ValueError("Trotter order must be 1 or 2")
    if steps < 1:
        raise ValueError("need at least one Trotter step")
    groups = [list(g) for g in (groups or default_groups(h))]
    if sorted(k for g in groups for k in g) != list(range(len(h.terms))):
        raise ValueError("groups must partition the term indices")
    dt = (t1 - t0) / steps
    cache: dict = {}

    def factor(gi, mid, tau):
        key = (gi, mid if not h.is_static else 0.0, tau)
        if key not in cache:
            local, support = _group_matrix(h, groups[gi], mid)
            cache[key] = DenseOperator(hermitian_expm(local, tau), support)
        return cache[key]

    out = np.asarray(v, dtype=complex)
    for s in range(steps):
        mid = t0 + (s + 0.5) * dt
        if order == 1:
            seq = [(gi, dt) for gi in range(len(groups))]
        else:
            half = [(gi, dt / 2) for gi in range(len(groups))]
            seq = half + half[::-1]
        for gi, tau in seq:
            out = apply_local(out, factor(gi, mid, tau))
    return out


def trotter_evolve(h: HamiltonianSpec, psi: PureState, t: float, steps: int, order: int = 2,
                   groups: Sequence[Sequence[int]] | None = None) -> PureState:
    """Product of per-group exponentials over ``steps`` slices of [0, t]."""
    out = trotter_vector(h, psi.amplitudes, 0.0, t, steps, order, groups)
    return PureState(out / np.linalg.norm(out))

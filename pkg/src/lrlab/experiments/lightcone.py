"""Commutator light cones, their fitted velocity and decay length, and
the locality of Heisenberg-evolved operators."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..evolution import PropagatorPlan, StaticPropagator, heisenberg_apply, heisenberg_operator
from ..hamiltonian import HamiltonianSpec
from ..lattice import SpinGraph, distance_from
from ..quantum import (
    CapabilityError,
    DenseOperator,
    apply_local,
    check_size,
    haar_truncate,
    kron_embed,
    operator_norm,
    operator_norm_matfree,
)
from .table import ExperimentResult

DENSE_SCAN_LIMIT = 10
MATFREE_SCAN_LIMIT = 14


@dataclass(frozen=True)
class ScanGrid:
    """Distances and times for a commutator scan.

    ``op_a`` sits on region A; a copy of the single-site ``op_b`` is placed
    on the lowest-index vertex at distance L from A.
    """

    model: HamiltonianSpec
    graph: SpinGraph
    L_values: tuple[int, ...]
    t_values: tuple[float, ...]
    op_a: DenseOperator
    op_b: np.ndarray

    def __post_init__(self):
        for name in ("L_values", "t_values"):
            vals = tuple(getattr(self, name))
            if not vals:
                raise ValueError(f"{name} must be nonempty")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValueError(f"{name} must be strictly increasing")
            object.__setattr__(self, name, vals)
        object.__setattr__(self, "op_a", self.op_a.normalized())
        b = np.asarray(self.op_b, dtype=complex)
        object.__setattr__(self, "op_b", b / operator_norm(b))
        dist = distance_from(self.graph, self.op_a.support)
        for L in self.L_values:
            if L < 1 or not np.any(dist == L):
                raise ValueError(f"no vertex at distance {L} from A")

    def site_b(self, L: int) -> int:
        dist = distance_from(self.graph, self.op_a.support)
        return int(np.flatnonzero(dist == L)[0])

    def op_b_at(self, L: int) -> DenseOperator:
        return DenseOperator(self.op_b, (self.site_b(L),))


def commutator_norm(a_full: np.ndarray, op_b: DenseOperator) -> float:
    """||[A, B]|| for a full-system ``A`` and a local Hermitian ``B``.

    When B has two distinct eigenvalues the norm is |l1 - l2| times the norm
    of the off-diagonal block of A between B's eigenspaces.
    """
    n = int(np.log2(a_full.shape[0]))
    evals, w = np.linalg.eigh(op_b.matrix)
    levels = np.unique(np.round(evals, 12))
    if len(levels) == 1:
        return 0.0
    if len(levels) > 2 or not np.allclose(op_b.matrix, op_b.matrix.conj().T):
        b = kron_embed(op_b, n).matrix
        return operator_norm(a_full @ b - b @ a_full)
    s = list(op_b.support)
    rest = [q for q in range(n) if q not in s]
    ds, dr = 2 ** len(s), 2 ** len(rest)
    a4 = a_full.reshape([2] * (2 * n)).transpose(s + rest + [n + q for q in s + rest]).reshape(ds, dr, ds, dr)
    rot = np.einsum("ia,irjs,jb->arbs", w.conj(), a4, w, optimize=True)
    lo = np.isclose(evals, levels[0], atol=1e-12)
    block = rot[lo][:, :, ~lo].reshape(lo.sum() * dr, (~lo).sum() * dr)
    return float((levels[1] - levels[0]) * np.linalg.norm(block, 2))


def _choose_path(n: int, path: str) -> str:
    if path == "auto":
        path = "dense" if n <= DENSE_SCAN_LIMIT else "matfree"
    if path == "dense":
        check_size("dense light-cone scan", n, DENSE_SCAN_LIMIT)
    elif path == "matfree":
        check_size("matrix-free light-cone scan", n, MATFREE_SCAN_LIMIT)
    else:
        raise ValueError(f"unknown path {path!r}")
    return path


def _matfree_commutator_norm(grid: ScanGrid, L: int, t: float, plan: PropagatorPlan, seed: int) -> float:
    h, op_b = grid.model, grid.op_b_at(L)

    def k(v):
        return heisenberg_apply(h, grid.op_a, t, apply_local(v, op_b), plan) - apply_local(
            heisenberg_apply(h, grid.op_a, t, v, plan), op_b)

    return operator_norm_matfree(k, None, 2 ** h.n_qubits, rtol=1e-8, max_iter=3000, seed=seed)


def lightcone_scan(grid: ScanGrid, path: str = "auto", plan: PropagatorPlan = PropagatorPlan(),
                   workers: int = 1, seed: int = 0) -> ExperimentResult:
    """Table of C(L, t) = ||[O_A(t), O_B(0)]|| over the grid."""
    h = grid.model
    path = _choose_path(h.n_qubits, path)
    res = ExperimentResult("lightcone", ("L", "t"), metadata={"path": path, "model": h.name})

    if path == "dense":
        prop = StaticPropagator(h) if h.is_static else None

        def column(t):
            a = prop.heisenberg(grid.op_a, t) if prop else heisenberg_operator(h, grid.op_a, t, plan).matrix
            return [commutator_norm(a, grid.op_b_at(L)) for L in grid.L_values]
    else:
        def column(t):
            return [_matfree_commutator_norm(grid, L, t, plan, seed) for L in grid.L_values]

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        cols = list(pool.map(column, grid.t_values))
    for L_i, L in enumerate(grid.L_values):
        for t, col in zip(grid.t_values, cols):
            res.add(L, t, value=col[L_i], error=1e-12 if path == "dense" else 1e-8 * col[L_i])
    return res


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    r2: float
    residuals: tuple[float, ...]


def line_fit(x, y) -> LineFit:
    x, y = np.asarray(x, float), np.asarray(y, float)
    if len(x) < 2:
        raise ValueError("need at least two points for a line fit")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = ((y - y.mean()) ** 2).sum()
    r2 = 1 - (resid ** 2).sum() / ss_tot if ss_tot > 0 else 1.0
    return LineFit(float(slope), float(intercept), float(r2), tuple(resid))


def decay_fit(table: ExperimentResult, t: float, min_L: int = 3) -> LineFit:
    """Least-squares line through log C(L, t) versus L."""
    sub = table.where(t=t)
    L, c = sub.column("L"), sub.column("value").astype(float)
    keep = (L >= min_L) & (c > 0)
    return line_fit(L[keep], np.log(c[keep]))


def arrival_times(table: ExperimentResult, theta: float) -> tuple[dict[int, float], tuple[int, ...]]:
    """First time C(L, t) reaches ``theta``, linearly interpolated.

    Distances that never reach ``theta``, or are already above it at the first
    grid time (arrival not resolved), are excluded.
    """
    arrivals, excluded = {}, []
    for L in sorted(set(table.column("L"))):
        sub = table.where(L=L)
        t, c = sub.column("t").astype(float), sub.column("value").astype(float)
        hit = np.flatnonzero(c >= theta)
        if hit.size == 0 or hit[0] == 0:
            excluded.append(int(L))
            continue
        i = hit[0]
        frac = (theta - c[i - 1]) / (c[i] - c[i - 1])
        arrivals[int(L)] = float(t[i - 1] + frac * (t[i] - t[i - 1]))
    return arrivals, tuple(excluded)


@dataclass(frozen=True)
class LightconeFit:
    v_est: float
    xi_est: float
    theta: float
    arrivals: dict = field(default_factory=dict)
    excluded: tuple[int, ...] = ()
    arrival_residuals: tuple[float, ...] = ()
    decay_residuals: tuple[float, ...] = ()
    decay_r2: float = float("nan")
    prefactor: float = float("nan")
    arrivals_monotone: bool = True


def fit_lightcone(table: ExperimentResult, theta: float | None = None, min_L: int = 3,
                  profile_t: float | None = None) -> LightconeFit:
    """Velocity from arrival times, decay length from the profile at ``profile_t``.

    ``profile_t`` defaults to the largest grid time. ``prefactor`` estimates
    the product c * N_min, which the data cannot separate.
    """
    cmax = float(table.column("value").max())
    theta = 0.1 * cmax if theta is None else float(theta)
    if not 0 < theta < cmax:
        raise ValueError(f"threshold {theta} outside (0, max C = {cmax})")
    fit_table = ExperimentResult(table.experiment, table.params,
                                 [r for r in table.rows if r[0] >= min_L])
    arrivals, excluded = arrival_times(fit_table, theta)
    if len(arrivals) < 2:
        raise ValueError(f"threshold {theta} crossed for {len(arrivals)} distances; need 2")
    Ls = sorted(arrivals)
    ts = [arrivals[L] for L in Ls]
    arr = line_fit(Ls, ts)
    if arr.slope <= 0:
        raise ValueError("arrival times do not increase with distance")
    if profile_t is None:
        profile_t = float(max(table.column("t")))
    dec = decay_fit(table, profile_t, min_L)
    if dec.slope >= 0:
        raise ValueError("commutator profile does not decay with distance")
    v_est, xi_est = 1 / arr.slope, -1 / dec.slope
    return LightconeFit(
        v_est=v_est, xi_est=xi_est, theta=theta, arrivals=arrivals, excluded=excluded,
        arrival_residuals=arr.residuals, decay_residuals=dec.residuals, decay_r2=dec.r2,
        prefactor=float(np.exp(dec.intercept - v_est * profile_t / xi_est)),
        arrivals_monotone=bool(np.all(np.diff(ts) >= 0)),
    )


def truncation_scan(model: HamiltonianSpec, graph: SpinGraph, op_a: DenseOperator, t: float,
                    l_values: Sequence[int], plan: PropagatorPlan = PropagatorPlan()) -> ExperimentResult:
    """||O_A(t) - O_A^l(t)|| where the twirl acts on spins at distance >= l from A."""
    check_size("truncation scan", model.n_qubits, DENSE_SCAN_LIMIT)
    if any(l < 1 for l in l_values):
        raise ValueError("cut radius l must be >= 1")
    op_a = op_a.normalized()
    if model.is_static:
        o_t = StaticPropagator(model).heisenberg(op_a, t)
    else:
        o_t = heisenberg_operator(model, op_a, t, plan).matrix
    full = DenseOperator(o_t, tuple(range(model.n_qubits)))
    dist = distance_from(graph, op_a.support)
    res = ExperimentResult("truncation", ("l", "t"), metadata={"model": model.name})
    for l in l_values:
        outside = [int(q) for q in np.flatnonzero(dist >= l)]
        err = operator_norm(o_t - haar_truncate(full, outside).matrix) if outside else 0.0
        res.add(int(l), float(t), value=err, error=1e-12)
    return res


__all__ = [
    "CapabilityError", "ScanGrid", "lightcone_scan", "commutator_norm", "LightconeFit",
    "fit_lightcone", "decay_fit", "arrival_times", "line_fit", "truncation_scan",
]

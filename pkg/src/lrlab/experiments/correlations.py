"""Connected correlators after a quench, and time-to-correlate for GHZ-type targets."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..evolution import PropagatorPlan, StaticPropagator, _use_dense, evolve_vector
from ..hamiltonian import HamiltonianSpec
from ..quantum import DenseOperator, PureState, expectation, pauli, plus_state
from .lightcone import line_fit
from .table import ExperimentResult


def connected_correlator(psi, op_a: DenseOperator, op_b: DenseOperator) -> float:
    joint = DenseOperator(np.kron(op_a.matrix, op_b.matrix), op_a.support + op_b.support)
    val = expectation(psi, joint) - expectation(psi, op_a) * expectation(psi, op_b)
    return float(val.real)


def correlation_spread(model: HamiltonianSpec, psi0: PureState, op_a: DenseOperator, op_b: DenseOperator,
                       t_values: Sequence[float], plan: PropagatorPlan = PropagatorPlan()) -> ExperimentResult:
    """<O_A O_B>_c along a time grid; the state is evolved once, step by step."""
    if set(op_a.support) & set(op_b.support):
        raise ValueError("O_A and O_B must have disjoint supports")
    op_a, op_b = op_a.normalized(), op_b.normalized()
    res = ExperimentResult("correlation_spread", ("t",), metadata={"model": model.name})
    static = None
    if model.is_static and plan.method == "exact-step" and _use_dense(model, plan.backend):
        static = StaticPropagator(model)
    v, t_prev = psi0.amplitudes, 0.0
    for t in t_values:
        if static is not None:
            v = static.evolve(psi0.amplitudes, t)
        else:
            v = evolve_vector(model, v, t_prev, t, plan)
        v = v / np.linalg.norm(v)
        t_prev = t
        res.add(float(t), value=connected_correlator(v, op_a, op_b), error=plan.tolerance)
    return res


def first_crossing(t, values, threshold: float) -> float:
    """First time |value| >= threshold, linearly interpolated; nan if never."""
    t, a = np.asarray(t, float), np.abs(np.asarray(values, float))
    hit = np.flatnonzero(a >= threshold)
    if hit.size == 0:
        return float("nan")
    i = hit[0]
    if i == 0:
        return float(t[0])
    return float(t[i - 1] + (threshold - a[i - 1]) / (a[i] - a[i - 1]) * (t[i] - t[i - 1]))


def ghz_protocol_check(protocol: Callable[[int], HamiltonianSpec], n_values: Sequence[int], theta_c: float,
                       t_max: float, dt_grid: float = 0.05,
                       plan: PropagatorPlan = PropagatorPlan()) -> ExperimentResult:
    """Time for |<Z_1 Z_n>_c| to reach ``theta_c`` starting from |+...+>.

    Rows whose threshold is never reached carry value nan and error 1 (flag).
    Metadata holds the linear fit of crossing time against n.
    """
    res = ExperimentResult("ghz_protocol", ("n", "g"))
    ts = np.round(np.arange(dt_grid, t_max + 1e-12, dt_grid), 12)
    for n in n_values:
        h = protocol(n)
        traj = correlation_spread(h, plus_state(n), pauli("Z", 0), pauli("Z", n - 1), ts, plan)
        tc = first_crossing(np.r_[0.0, ts], np.r_[0.0, traj.column("value")], theta_c)
        res.add(int(n), h.g, value=tc, error=1.0 if np.isnan(tc) else dt_grid)
    ok = ~np.isnan(res.column("value").astype(float))
    if ok.sum() >= 2:
        fit = line_fit(res.column("n")[ok], res.column("value")[ok])
        res.metadata.update(slope=fit.slope, intercept=fit.intercept, r2=fit.r2)
    return res

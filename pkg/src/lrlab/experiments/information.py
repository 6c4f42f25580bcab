"""Signalling through the spin network: Holevo information received at B."""
from __future__ import annotations

import itertools
import warnings
from typing import Sequence

import numpy as np

from ..bounds import BoundValidityWarning, capacity_bound
from ..evolution import PropagatorPlan, StaticPropagator, evolve_vector
from ..hamiltonian import HamiltonianSpec
from ..quantum import DenseOperator, PureState, apply_local, partial_trace, pauli, trace_norm, von_neumann_entropy
from .table import ExperimentResult


def pauli_ensemble(sites: Sequence[int]) -> list[tuple[float, DenseOperator]]:
    """All 4^|A| Pauli strings on ``sites`` with uniform weights."""
    labels = ["".join(p) for p in itertools.product("IXYZ", repeat=len(sites))]
    return [(1 / len(labels), pauli(lab, *sites)) for lab in labels]


def holevo_quantity(probs: Sequence[float], states: Sequence[np.ndarray]) -> float:
    """S(sum p_k rho_k) - sum p_k S(rho_k), in bits."""
    avg = sum(p * s for p, s in zip(probs, states))
    return von_neumann_entropy(avg) - sum(p * von_neumann_entropy(s) for p, s in zip(probs, states))


def holevo_experiment(model: HamiltonianSpec, ensemble: Sequence[tuple[float, DenseOperator]], psi0: PureState,
                      region_b: Sequence[int], t_values: Sequence[float],
                      plan: PropagatorPlan = PropagatorPlan()) -> ExperimentResult:
    """Holevo information at B versus the trace-distance capacity bound.

    Rows per t: ``holevo`` (C_chi in bits), ``eps`` (max_k ||sigma_k - sigma_0||_1)
    and ``bound`` (capacity_bound(eps, |B|, 2)); ``error`` carries 1 when the
    bound is violated.
    """
    probs = np.array([p for p, _ in ensemble])
    if abs(probs.sum() - 1) > 1e-12 or np.any(probs < 0):
        raise ValueError("ensemble weights must be a probability distribution")
    support_a = {q for _, u in ensemble for q in u.support}
    if support_a & set(region_b):
        raise ValueError("A and B must be disjoint")
    for _, u in ensemble:
        if not np.allclose(u.matrix @ u.matrix.conj().T, np.eye(u.dim), atol=1e-12):
            raise ValueError("ensemble operators must be unitary")

    inputs = [psi0.amplitudes] + [apply_local(psi0.amplitudes, u) for _, u in ensemble]
    prop = StaticPropagator(model) if model.is_static and model.n_qubits <= 10 else None
    res = ExperimentResult("holevo", ("t", "quantity"), metadata={"model": model.name, "B": list(region_b)})
    for t in t_values:
        if prop is not None:
            u_t = prop.unitary(t)
            outs = [u_t @ v for v in inputs]
        else:
            outs = [evolve_vector(model, v, 0.0, t, plan) for v in inputs]
        sig = [partial_trace(v / np.linalg.norm(v), region_b).matrix for v in outs]
        chi = holevo_quantity(probs, sig[1:])
        eps = max(trace_norm(s - sig[0]) for s in sig[1:])
        eps = min(eps, 2.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundValidityWarning)
            bound = capacity_bound(eps, len(region_b), 2) if eps > 1e-15 else 0.0
        violated = chi > bound + 1e-10
        res.add(float(t), "holevo", value=chi if chi > 0 else 0.0, error=float(violated))
        res.add(float(t), "eps", value=eps, error=0.0)
        res.add(float(t), "bound", value=bound, error=0.0)
    return res

import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lrlab.bounds import capacity_bound, cstar, cstar_argmax
from lrlab.evolution import PropagatorPlan, StaticPropagator, evolve_vector
from lrlab.experiments.correlations import (
    connected_correlator, correlation_spread, first_crossing, ghz_protocol_check,
)
from lrlab.experiments.entanglement import (
    crossing_terms, cut_weight, entropy_growth, entropy_rate, integrated_budget, random_coupling_instance,
    rate_budget, schmidt_input, xx_coupling,
)
from lrlab.experiments.information import holevo_experiment, holevo_quantity, pauli_ensemble
from lrlab.experiments.lightcone import (
    ScanGrid, commutator_norm, fit_lightcone, lightcone_scan, truncation_scan,
)
from lrlab.experiments.table import ExperimentResult, plot_csv
from lrlab.experiments.tqo import (
    circuit_lower_bound_demo, circuit_protocol, connected_regions, gate_hamiltonian, product_pair,
    random_two_local_layers, toric_preparation_layers, tqo_accuracy,
)
from lrlab.hamiltonian import (
    Schedule, apply_x_string, assemble_dense, build_heisenberg, build_product_coupling, build_tfim,
    build_toric_code,
)
from lrlab.lattice import build_chain, build_toric_code_layout, build_torus_2d
from lrlab.quantum import (
    DenseOperator, PureState, X, Z, apply_local, ghz_state, kron_embed, pauli, plus_state, random_state,
    random_unitary,
)


def _synthetic(v=2.0, xi=1.5):
    res = ExperimentResult("lightcone", ("L", "t"))
    for L in range(1, 11):
        for t in np.round(np.arange(0, 3.01, 0.05), 10):
            res.add(L, float(t), value=math.exp(-(L - v * t) / xi), error=0.0)
    return res


@pytest.mark.parametrize("theta", [None, 0.1, 1.0])
def test_fit_recovers_synthetic_constants(theta):
    fit = fit_lightcone(_synthetic(), theta=theta)
    assert fit.v_est == pytest.approx(2.0, rel=0.05)
    assert fit.xi_est == pytest.approx(1.5, rel=0.05)
    assert fit.prefactor == pytest.approx(1.0, rel=1e-6)
    assert fit.arrivals_monotone
    assert list(fit.arrivals) == sorted(fit.arrivals)


def test_fit_rejects_unreachable_threshold():
    with pytest.raises(ValueError):
        fit_lightcone(_synthetic(), theta=1e3)


def test_fit_flags_unreached_distances():
    fit = fit_lightcone(_synthetic(v=1.0), theta=0.5)
    assert fit.excluded and max(fit.excluded) > max(fit.arrivals)


def test_arrivals_above_threshold_at_start_are_excluded():
    fit = fit_lightcone(_synthetic(), theta=0.1)
    # exp(-L/1.5) >= 0.1 already at t=0 for L <= 3
    assert 3 in fit.excluded and 4 in fit.arrivals


def _scan(n, ts, Ls=None, model=None, path="dense"):
    g = build_chain(n)
    h = model or build_tfim(g, 1.0, 1.0)
    grid = ScanGrid(h, g, tuple(Ls or range(1, n)), tuple(ts), pauli("Z", 0), Z)
    return lightcone_scan(grid, path=path)


def test_commutator_zero_at_time_zero():
    for model in (build_tfim(build_chain(6), 1.0, 0.7), build_heisenberg(build_chain(6), 0.9)):
        assert _scan(6, [0.0], model=model).column("value").max() <= 1e-12


def test_scan_grid_validation():
    g = build_chain(4)
    h = build_tfim(g, 1, 1)
    with pytest.raises(ValueError):
        ScanGrid(h, g, (2, 1), (0.0,), pauli("Z", 0), Z)
    with pytest.raises(ValueError):
        ScanGrid(h, g, (1, 5), (0.0,), pauli("Z", 0), Z)


def test_commutator_norm_matches_direct(rng):
    a = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    a = a + a.conj().T
    b = DenseOperator(np.array([[0.3, 1 - 0.2j], [1 + 0.2j, -0.5]]), (2,))
    bf = kron_embed(b, 4).matrix
    assert commutator_norm(a, b) == pytest.approx(np.linalg.norm(a @ bf - bf @ a, 2), rel=1e-10)


def _series_oracle(h, op_a, op_b, kmax=6):
    """First nonvanishing order k of ||[O_A(t), O_B]|| and its coefficient."""
    ad = op_a
    for k in range(1, kmax + 1):
        ad = h @ ad - ad @ h
        c = np.linalg.norm(ad @ op_b - op_b @ ad, 2) / math.factorial(k)
        if c > 1e-12:
            return k, c
    raise AssertionError("no nonzero order found")


@pytest.mark.parametrize("label,order", [("X", 2), ("Z", 3)])
def test_short_time_growth_matches_series(label, order):
    g = build_chain(2)
    h = build_tfim(g, 1.0, 1.0)
    hm = assemble_dense(h)
    k, coeff = _series_oracle(hm, kron_embed(pauli("Z", 0), 2).matrix, kron_embed(pauli(label, 1), 2).matrix)
    assert k == order
    grid = ScanGrid(h, g, (1,), (1e-3, 2e-3), pauli("Z", 0), {"X": X, "Z": Z}[label])
    c = lightcone_scan(grid).column("value")
    assert c[0] == pytest.approx(coeff * 1e-3 ** k, rel=1e-2)
    assert np.log(c[1] / c[0]) / np.log(2) == pytest.approx(order, abs=0.01)


def test_commutator_decays_with_distance():
    c = _scan(8, [1.0]).column("value")
    assert c[-1] < c[2] < c[0]


def test_dense_and_matrix_free_agree():
    ts = [0.5, 1.0]
    dense = _scan(6, ts, Ls=[1, 3, 5]).column("value")
    mf = _scan(6, ts, Ls=[1, 3, 5], path="matfree").column("value")
    assert np.abs(dense - mf).max() <= 1e-6


def test_commutator_rescaling():
    g = build_chain(6)
    h = build_tfim(g, 1.0, 0.8)
    a = ScanGrid(h.scaled(2.0), g, (2, 4), (0.3,), pauli("Z", 0), Z)
    b = ScanGrid(h, g, (2, 4), (0.6,), pauli("Z", 0), Z)
    assert np.abs(lightcone_scan(a).column("value") - lightcone_scan(b).column("value")).max() <= 1e-10


def test_truncation_examples():
    g = build_chain(6)
    h = build_tfim(g, 1.0, 1.0)
    assert truncation_scan(h, g, pauli("Z", 0), 0.0, [1, 3]).column("value").max() <= 1e-12
    assert truncation_scan(h, g, pauli("Z", 0), 0.7, [6]).column("value")[0] == 0.0
    err = truncation_scan(h, g, pauli("Z", 0), 0.5, range(1, 6)).column("value")
    assert np.all(np.diff(err) <= 1e-12) and err[0] <= 2


def test_correlation_examples():
    h = build_tfim(build_chain(6), 1.0, 1.0)
    prod = correlation_spread(h, plus_state(6), pauli("Z", 0), pauli("Z", 5), [0.0])
    assert abs(prod.column("value")[0]) <= 1e-12
    ghz = correlation_spread(h, ghz_state(6), pauli("Z", 0), pauli("Z", 5), [0.0])
    assert ghz.column("value")[0] == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        correlation_spread(h, ghz_state(6), pauli("Z", 0), pauli("Z", 0), [0.0])
    assert connected_correlator(PureState.basis("01"), pauli("Z", 0), pauli("Z", 1)) == pytest.approx(0)


def test_correlation_spread_matches_independent_evolution(rng):
    h = build_tfim(build_chain(5), 1.0, 0.6)
    psi = random_state(5, rng)
    ts = [0.4, 1.1]
    res = correlation_spread(h, psi, pauli("Z", 0), pauli("X", 4), ts)
    m = assemble_dense(h)
    w, vecs = np.linalg.eigh(m)
    za, xb = kron_embed(pauli("Z", 0), 5).matrix, kron_embed(pauli("X", 4), 5).matrix
    for t, val in zip(ts, res.column("value")):
        v = vecs @ (np.exp(-1j * w * t) * (vecs.conj().T @ psi.amplitudes))
        ev = lambda o: np.vdot(v, o @ v).real  # noqa: E731
        assert val == pytest.approx(ev(za @ xb) - ev(za) * ev(xb), abs=1e-9)


def test_first_crossing():
    assert first_crossing([0, 1, 2], [0, 0.5, 1.0], 0.75) == pytest.approx(1.5)
    assert math.isnan(first_crossing([0, 1], [0, 0.2], 0.5))


def test_ghz_protocol_examples():
    proto = lambda n: build_tfim(build_chain(n), 1.0, 1.0)  # noqa: E731
    res = ghz_protocol_check(proto, [4, 8], 0.5, 4.0)
    t4, t8 = res.column("value")
    assert t4 < t8
    flagged = ghz_protocol_check(proto, [4, 6], 1.5, 1.0)
    assert np.all(np.isnan(flagged.column("value").astype(float)))
    assert np.all(flagged.column("error") == 1.0)


def test_ghz_protocol_doubling_g_halves_time():
    ts = np.round(np.arange(0.0025, 3.0, 0.0025), 10)
    base = lambda n: build_tfim(build_chain(n), 1.0, 1.0)  # noqa: E731
    fast = lambda n: build_tfim(build_chain(n), 2.0, 2.0)  # noqa: E731
    a = correlation_spread(base(4), plus_state(4), pauli("Z", 0), pauli("Z", 3), ts)
    b = correlation_spread(fast(4), plus_state(4), pauli("Z", 0), pauli("Z", 3), ts / 2)
    assert np.abs(a.column("value") - b.column("value")).max() <= 1e-10
    ta = first_crossing(ts, a.column("value"), 0.3)
    tb = first_crossing(ts / 2, b.column("value"), 0.3)
    assert tb == pytest.approx(ta / 2, rel=1e-9)


def test_holevo_examples():
    h = build_tfim(build_chain(6), 1.0, 1.0)
    ident = [(0.5, DenseOperator(np.eye(2), (0,))), (0.5, DenseOperator(np.eye(2), (0,)))]
    res = holevo_experiment(h, ident, PureState.basis("0" * 6), [5], [0.0, 1.0])
    assert res.where(quantity="holevo").column("value").max() <= 1e-10
    res = holevo_experiment(h, pauli_ensemble([0]), PureState.basis("0" * 6), [4, 5], [0.0, 0.5, 1.5])
    chi = res.where(quantity="holevo").column("value")
    assert chi[0] <= 1e-10 and np.all(chi >= 0) and np.all(chi <= 2 + 1e-12)
    assert np.all(res.where(quantity="holevo").column("error") == 0)
    with pytest.raises(ValueError):
        holevo_experiment(h, [(0.7, pauli("X", 0))], PureState.basis("0" * 6), [5], [0.0])
    with pytest.raises(ValueError):
        holevo_experiment(h, pauli_ensemble([0]), PureState.basis("0" * 6), [0], [0.0])


def test_holevo_quantity_examples():
    pure = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    assert holevo_quantity([0.5, 0.5], pure) == pytest.approx(1.0)
    assert holevo_quantity([0.5, 0.5], [pure[0], pure[0]]) == pytest.approx(0.0, abs=1e-12)


def test_holevo_at_later_time_respects_capacity():
    h = build_tfim(build_chain(6), 1.0, 1.0)
    res = holevo_experiment(h, pauli_ensemble([0]), PureState.basis("0" * 6), [5], [2.0, 3.0])
    for t in (2.0, 3.0):
        row = {q: res.where(t=t, quantity=q).column("value")[0] for q in ("holevo", "eps", "bound")}
        assert row["holevo"] <= row["bound"] + 1e-10


def test_cut_weight_examples():
    assert cut_weight(pauli("XX", 0, 1), {0}) == pytest.approx(1)
    assert cut_weight(DenseOperator(np.kron(X, X) + np.kron(Z, Z), (0, 1)), {0}) == pytest.approx(2)
    assert cut_weight(pauli("X", 0), {0}) == 0


def test_entropy_examples():
    zero = build_product_coupling(pauli("X", 0), pauli("X", 1), Schedule.constant(0.0))
    res = entropy_growth(zero, schmidt_input(0.8), [0], [0.0, 0.5, 1.0])
    s = res.where(quantity="entropy").column("value")
    assert np.ptp(s) <= 1e-12
    h = xx_coupling()
    rate, err = entropy_rate(h, schmidt_input(cstar_argmax()).amplitudes, 0.0, [0], 1e-4)
    assert rate >= 1.90 and rate == pytest.approx(cstar(), abs=1e-4)


def test_schmidt_rate_profile_matches_formula():
    # dS/dt for XX coupling and input sqrt(x)|00> - i sqrt(1-x)|11> equals the rate profile
    for x in (0.6, 0.75, 0.9, 0.97):
        rate, _ = entropy_rate(xx_coupling(), schmidt_input(x).amplitudes, 0.0, [0], 1e-4)
        expect = 2 * math.sqrt(x * (1 - x)) * math.log2(x / (1 - x))
        assert rate == pytest.approx(expect, abs=1e-5)


def test_integrated_budget_piecewise():
    h = build_product_coupling(pauli("X", 0), pauli("X", 1), Schedule((1.0,), (0.5, -2.0)))
    assert integrated_budget(h, [0], 0.0, 2.0) == pytest.approx(cstar() * (0.5 + 2.0))
    assert rate_budget(h, [0], 1.5) == pytest.approx(2 * cstar())
    assert len(crossing_terms(h, [0])) == 1


@settings(max_examples=25)
@given(st.integers(0, 2 ** 32 - 1))
def test_random_couplings_respect_rate_budget(seed):
    rng = np.random.default_rng(seed)
    inst = random_coupling_instance(rng)
    t = float(rng.uniform(0.05, 1.0))
    v = evolve_vector(inst.model, inst.psi0.amplitudes, 0.0, t, PropagatorPlan(tolerance=1e-10))
    rate, _ = entropy_rate(inst.model, v, t, inst.region_a, 1e-3)
    assert rate <= rate_budget(inst.model, inst.region_a, t) + 1e-3


def _brute_regions(graph, max_diam, cap):
    G = nx.Graph(list(graph.edges))
    out = set()
    for k in range(1, min(cap, graph.n_vertices) + 1):
        for sub in itertools.combinations(range(graph.n_vertices), k):
            if nx.is_connected(G.subgraph(sub)) and all(
                    graph.distances[a, b] <= max_diam for a, b in itertools.combinations(sub, 2)):
                out.add(frozenset(sub))
    return out


@pytest.mark.parametrize("graph", [build_chain(6), build_chain(7, True), build_torus_2d(3, 3),
                                   build_toric_code_layout(2, 2).graph])
@pytest.mark.parametrize("max_diam,cap", [(0, 10), (1, 10), (2, 4)])
def test_connected_regions_against_brute_force(graph, max_diam, cap):
    assert set(connected_regions(graph, max_diam, cap)) == _brute_regions(graph, max_diam, cap)


def test_tqo_examples():
    g = build_chain(8)
    ghz = tqo_accuracy(ghz_state(8, 1), ghz_state(8, -1), [1, 2, 3], g)
    assert ghz.at(1) == pytest.approx(1.0, abs=1e-10)
    lay = build_toric_code_layout(2, 2)
    toric = tqo_accuracy(*build_toric_code(lay).ground_pair(), [1, 2, 3], lay.graph)
    assert toric.at(1) <= 1e-10 and toric.cap == 10
    assert all(b >= a - 1e-12 for a, b in zip(toric.eps, toric.eps[1:]))
    with pytest.raises(ValueError):
        tqo_accuracy(ghz_state(8), ghz_state(8), [1], g)


def test_tqo_detects_local_unitary(rng):
    n = 6
    g = build_chain(n)
    psi = PureState.basis("000000")
    flipped = PureState(apply_local(psi.amplitudes, pauli("X", 2)))
    assert tqo_accuracy(psi, flipped, [1], g).at(1) >= 0.5


def test_tqo_hermitian_scan_is_lower_bound():
    rep = tqo_accuracy(ghz_state(6, 1), ghz_state(6, -1), [1, 2], build_chain(6), hermitian_scan=50)
    assert all(h <= o + 1e-10 for h, o in zip(rep.eps_offdiag_hermitian, rep.eps_offdiag))


def test_gate_hamiltonian_reproduces_gate(rng):
    from scipy.linalg import expm
    for d in (2, 4):
        u = random_unitary(d, rng)
        h = gate_hamiltonian(u)
        assert np.allclose(h, h.conj().T) and np.allclose(expm(-1j * h), u, atol=1e-12)
        assert np.abs(np.linalg.eigvalsh(h)).max() <= math.pi + 1e-12


def test_circuit_protocol_applies_layers(rng):
    g = build_chain(4)
    layers = random_two_local_layers(g, 2, rng)
    spec, dur = circuit_protocol(4, layers, g)
    psi = random_state(4, rng)
    ref = psi.amplitudes
    for layer in layers:
        for support, u in layer:
            ref = apply_local(ref, DenseOperator(u, support))
    out = evolve_vector(spec, psi.amplitudes, 0.0, dur)
    assert dur == 2.0 and np.abs(out - ref).max() <= 1e-10


def test_lower_bound_zero_duration_keeps_accuracy():
    lay = build_toric_code_layout(2, 2)
    pair = product_pair(8)
    spec, _ = circuit_protocol(8, [], lay.graph)
    rep = circuit_lower_bound_demo(pair, spec, 0.0, 1.0, lay.graph)
    assert rep.eps_final == pytest.approx(tqo_accuracy(*pair, [1.0], lay.graph).eps[0])


def test_preparation_circuit_reaches_toric_ground_space():
    lay = build_toric_code_layout(2, 2)
    layers, loop = toric_preparation_layers(lay)
    spec, dur = circuit_protocol(8, layers, lay.graph)
    zero = PureState.basis("0" * 8)
    outs = [evolve_vector(spec, v, 0.0, dur) for v in (zero.amplitudes, apply_x_string(zero.amplitudes, loop))]
    h = assemble_dense(build_toric_code(lay).spec)
    for v in outs:
        assert np.vdot(v, h @ v).real == pytest.approx(-8.0, abs=1e-10)
    rep = circuit_lower_bound_demo((zero, PureState(outs[1] * 0 + apply_x_string(zero.amplitudes, loop))),
                                   spec, dur, 1.0, lay.graph)
    assert rep.eps_initial == pytest.approx(1.0) and rep.eps_final <= 1e-8


def test_csv_round_trip_and_plot(tmp_path):
    res = _synthetic()
    path = tmp_path / "lc.csv"
    res.write_csv(path)
    back = ExperimentResult.read_csv(path)
    assert back.experiment == "lightcone" and back.params == ("L", "t")
    assert back.rows == [tuple(r) for r in res.rows]
    assert path.read_text().startswith("# lrlab-csv/1 experiment=lightcone\n")
    plot_csv(path, tmp_path / "a.svg")
    plot_csv(path, tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
    bad = tmp_path / "bad.csv"
    bad.write_text("experiment,value,error\n")
    with pytest.raises(ValueError):
        ExperimentResult.read_csv(bad)

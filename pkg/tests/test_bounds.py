import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lrlab.bounds import (
    FORMULAS, BoundValidityWarning, CorrelationDecay, LRConstants, capacity_bound, correlation_spread_bound,
    cstar, cstar_argmax, cut_correlation_bound, entangling_rate_profile, entropy_budget, entropy_rate_bound,
    fannes_bound, lr_bound, optimal_cut, tqo_epsilon_propagation, truncation_bound,
)
from lrlab.quantum import random_density_matrix, trace_norm, von_neumann_entropy

pos = st.floats(0.05, 5.0)
small = st.floats(0.0, 5.0)

# frozen from a 10^6-point grid over (1/2, 1)
CSTAR_GRID = 1.9122733
XSTAR_GRID = 0.9167785


def _grid_oracle():
    x = np.linspace(0.5, 1.0, 10 ** 6 + 1)[1:-1]
    f = 2 * np.sqrt(x * (1 - x)) * np.log2(x / (1 - x))
    i = int(np.argmax(f))
    return f[i], x[i]


def test_cstar_against_grid():
    fmax, xmax = _grid_oracle()
    assert cstar() == pytest.approx(1.9123, abs=1e-3)
    assert cstar_argmax() == pytest.approx(0.9168, abs=1e-3)
    assert abs(cstar() - fmax) <= 1e-8
    assert abs(cstar_argmax() - xmax) <= 1e-5
    assert cstar() == pytest.approx(CSTAR_GRID, abs=1e-7)
    assert cstar_argmax() == pytest.approx(XSTAR_GRID, abs=1e-6)
    assert entangling_rate_profile(0.5) == 0


def test_constants_validated():
    with pytest.raises(ValueError):
        LRConstants(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        CorrelationDecay(1.0, -1.0)


def test_lr_bound_examples():
    k = LRConstants(1.5, 2.0, 0.7)
    assert lr_bound(k, 3, 2.0 * 1.2, 1.2) == pytest.approx(4.5)
    assert lr_bound(k, 3, 0.7, 0.0) == pytest.approx(4.5 / math.e)
    assert truncation_bound(k, 2, 2.0, 1.0) == pytest.approx(3.0)
    assert truncation_bound(k, 4, 5.0, 1.0) == pytest.approx(2 * truncation_bound(k, 2, 5.0, 1.0))
    assert truncation_bound(k, 1, 1e4, 1.0) == 0.0


def test_optimal_cut_examples():
    assert optimal_cut(1.3, 1.3, 2.0, 0.5, 4.0) == pytest.approx((2.0 * 0.5 + 4.0) / 3)
    assert optimal_cut(1.0, 2.0, 1.5, 0.0, 3.0) == pytest.approx(2.0 * 3.0 / 5.0)
    assert optimal_cut(1e9, 1.0, 1.5, 2.0, 3.0) == pytest.approx(3.0, rel=1e-6)
    assert optimal_cut(1, 1, 1, 0, 3) == 1


@given(pos, pos, pos, pos, pos, pos)
def test_optimal_cut_balances_exponents(chi, xi, v, t, L, c):
    l = optimal_cut(chi, xi, v, t, L)
    # both terms decay at the same rate at the balanced cut
    assert (l - v * t) / xi == pytest.approx((L - 2 * l) / chi, rel=1e-9, abs=1e-9)


def test_correlation_spread_examples():
    k, decay = LRConstants(1.0, 1.5, 0.5), CorrelationDecay(1.0, 2.0)
    assert correlation_spread_bound(0.3, k, decay, 2, 3, 2 * 1.5 * 0.8, 0.8) == pytest.approx(1.5)
    a = correlation_spread_bound(0.3, k, decay, 2, 3, 5.0, 0.8)
    assert correlation_spread_bound(0.3, k, decay, 4, 6, 5.0, 0.8) == pytest.approx(2 * a)


def test_fannes_examples():
    assert fannes_bound(0.0, 3) == 0.0
    assert fannes_bound(1e-12, 3) < 1e-9
    with pytest.warns(BoundValidityWarning):
        assert fannes_bound(0.5, 1, 2) == pytest.approx(1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert fannes_bound(0.25, 2, 2) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        fannes_bound(-0.1, 1)


def test_capacity_examples():
    assert capacity_bound(1.0, 3, 2) == pytest.approx(6.0)
    assert capacity_bound(0.5, 1, 2) == pytest.approx(2.0)
    assert capacity_bound(0.0, 4) == 0.0
    with pytest.warns(BoundValidityWarning):
        capacity_bound(1.5, 2)
    with pytest.raises(ValueError):
        capacity_bound(2.5, 2)


@given(st.integers(1, 6), st.sampled_from([2, 3, 4]), st.floats(1e-6, 0.999))
def test_capacity_shape_matches_calculus(n_b, m, eps):
    # d/de [2e(n log m - log e)] = 2(n log m - log e - 1/ln 2): zero at e* = m^n / e
    stationary = m ** n_b / math.e
    deriv = 2 * (n_b * math.log2(m) - math.log2(eps) - 1 / math.log(2))
    h = 1e-7 * eps
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundValidityWarning)
        fd = (capacity_bound(eps + h, n_b, m) - capacity_bound(eps - h, n_b, m)) / (2 * h)
    assert fd == pytest.approx(deriv, rel=1e-4, abs=1e-6)
    assert (deriv > 0) == (eps < stationary)


@given(st.floats(0.05, 0.35), pos, pos, st.floats(0.0, 2.0), st.integers(1, 3))
def test_capacity_of_lr_epsilon_decreases_beyond_light_cone(c, v, xi, t, n_b):
    k = LRConstants(c, v, xi)
    Ls = v * t + np.linspace(0.01, 10, 30)
    caps = [capacity_bound(lr_bound(k, 1, L, t), n_b) for L in Ls]
    assert all(b <= a + 1e-12 for a, b in zip(caps, caps[1:]))


def test_entropy_budget_examples():
    assert entropy_rate_bound([0.0, 0.0]) == 0.0
    assert entropy_rate_bound([0.5, -0.5]) == pytest.approx(cstar())
    assert entropy_budget(1.0, 1, 1.0) == pytest.approx(1.9123, abs=1e-4)
    assert entropy_budget(0.7, 3, 2.0) == pytest.approx(2 * entropy_budget(0.7, 3, 1.0))


def test_tqo_propagation_examples():
    k = LRConstants(1.0, 2.0, 0.5)
    assert tqo_epsilon_propagation(0.1, 100.0, k, 0.0, 1) == pytest.approx(0.1)
    assert tqo_epsilon_propagation(0.1, 4.0, k, 1.0, 2) == pytest.approx(0.1 + 4.0)
    assert tqo_epsilon_propagation(0.1, 4.0, k, 1.1, 2) > tqo_epsilon_propagation(0.1, 4.0, k, 1.0, 2)


@given(pos, pos, pos, st.integers(1, 5), small, small, small)
def test_bounds_monotone(c, v, xi, n, L, t, dL):
    k = LRConstants(c, v, xi)
    decay = CorrelationDecay(c, xi)
    assert 0 <= lr_bound(k, n, L + dL, t) <= lr_bound(k, n, L, t)
    assert lr_bound(k, n, L, t) <= lr_bound(k, n, L, t + dL)
    assert lr_bound(k, n, L, t) <= lr_bound(k, n + 1, L, t)
    assert correlation_spread_bound(c, k, decay, n, 1, L + dL, t) <= correlation_spread_bound(c, k, decay, n, 1, L, t)
    assert correlation_spread_bound(c, k, decay, n, 1, L, t) <= correlation_spread_bound(c, k, decay, n, 1, L, t + dL)
    assert cut_correlation_bound(k, decay, n, 1, L + dL, t, L / 4) <= cut_correlation_bound(k, decay, n, 1, L, t, L / 4)
    assert entropy_budget(c, n, t) <= entropy_budget(c, n, t + dL)


@given(st.integers(0, 2 ** 32 - 1))
def test_fannes_holds_on_random_pairs(seed):
    rng = np.random.default_rng(seed)
    n_b = int(rng.integers(1, 5))
    rho = random_density_matrix(2 ** n_b, rng)
    sigma = (1 - rng.uniform(0, 0.3)) * rho + rng.uniform(0, 0.3) * random_density_matrix(2 ** n_b, rng)
    sigma /= np.trace(sigma)
    delta = trace_norm(rho - sigma)
    if delta <= 1 / math.e:
        gap = abs(von_neumann_entropy(rho) - von_neumann_entropy(sigma))
        assert gap <= fannes_bound(delta, n_b, 2) + 1e-10


@given(st.floats(1e-6, 0.18))
def test_fannes_tight_family_uses_full_trace_norm(p):
    # |0><0| against a slightly mixed qubit: the entropy gap is the binary entropy h(p)
    rho, sigma = np.diag([1.0, 0.0]), np.diag([1 - p, p])
    gap = von_neumann_entropy(sigma)
    assert gap <= fannes_bound(trace_norm(rho - sigma), 1, 2) + 1e-12
    # with half the trace norm the same formula would fail
    assert gap > fannes_bound(0.5 * trace_norm(rho - sigma), 1, 2)


def test_formula_table_is_callable():
    for name, (func, args, unit) in FORMULAS.items():
        assert unit
        vals = {"n_min": 1, "size_a": 1, "size_b": 1, "nB": 1, "m": 2, "d": 2, "P": 1, "delta": 0.1,
                "epsilon": 0.5, "eps_f": 0.1}
        kwargs = {a: vals.get(a, 1.0) for a in args}
        assert math.isfinite(func(**kwargs)), name

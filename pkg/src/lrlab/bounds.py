"""Closed-form bounds. All logarithms are base 2; entropies are in bits."""
from __future__ import annotations

import math
import warnings
from functools import lru_cache
from dataclasses import dataclass
from typing import Iterable


class BoundValidityWarning(UserWarning):
    """A formula was evaluated outside the window where it is a proven bound."""


@dataclass(frozen=True)
class LRConstants:
    c: float
    v: float
    xi: float

    def __post_init__(self):
        if min(self.c, self.v, self.xi) <= 0:
            raise ValueError(f"LR constants must be positive, got {self}")


@dataclass(frozen=True)
class CorrelationDecay:
    c_tilde: float
    chi: float

    def __post_init__(self):
        if self.c_tilde <= 0 or self.chi <= 0:
            raise ValueError(f"correlation decay parameters must be positive, got {self}")


def lr_bound(k: LRConstants, n_min: int, L: float, t: float) -> float:
    """c * N_min * exp(-(L - v|t|)/xi), for unit-norm observables."""
    if L < 0:
        raise ValueError("distance must be nonnegative")
    return k.c * n_min * math.exp(-(L - k.v * abs(t)) / k.xi)


def truncation_bound(k: LRConstants, size_a: int, l: float, t: float) -> float:
    return lr_bound(k, size_a, l, t)


def optimal_cut(chi: float, xi: float, v: float, t: float, L: float) -> float:
    """Cut radius that balances the truncation and initial-correlation terms."""
    if min(chi, xi, v) <= 0:
        raise ValueError("chi, xi and v must be positive")
    return (chi * v * t + xi * L) / (chi + 2 * xi)


def effective_correlation_length(chi: float, xi: float) -> float:
    return chi + 2 * xi


def cut_correlation_bound(k: LRConstants, decay: CorrelationDecay, size_a: int, size_b: int,
                          L: float, t: float, l: float) -> float:
    """Bound on the connected correlator for a given cut radius ``l``."""
    return (2 * k.c * (size_a + size_b) * math.exp(-(l - k.v * t) / k.xi)
            + decay.c_tilde * math.exp(-(L - 2 * l) / decay.chi))


def correlation_spread_bound(c_bar: float, k: LRConstants, decay: CorrelationDecay,
                             size_a: int, size_b: int, L: float, t: float) -> float:
    """c_bar (|A|+|B|) exp(-(L - 2vt)/chi') with chi' = chi + 2 xi."""
    chi_p = effective_correlation_length(decay.chi, k.xi)
    return c_bar * (size_a + size_b) * math.exp(-(L - 2 * k.v * t) / chi_p)


def fannes_bound(delta: float, n_b: int, m: int = 2) -> float:
    """delta |B| log m - delta log delta, with delta = ||rho - sigma||_1 (no factor 1/2).

    Proven for delta <= 1/e; larger delta still returns the formula value but
    emits :class:`BoundValidityWarning`.
    """
    if delta < 0:
        raise ValueError("trace distance must be nonnegative")
    if delta == 0:
        return 0.0
    if delta > 1 / math.e:
        warnings.warn(f"Fannes bound used at delta={delta:.4g} > 1/e", BoundValidityWarning,
                      stacklevel=2)
    return delta * n_b * math.log2(m) - delta * math.log2(delta)


def capacity_bound(epsilon: float, n_b: int, m: int = 2) -> float:
    """2 eps (|B| log m - log eps), in bits.

    ``epsilon`` up to 2 (the range of a trace distance) is accepted; above 1
    a :class:`BoundValidityWarning` is emitted.
    """
    if epsilon < 0 or epsilon > 2:
        raise ValueError(f"epsilon must lie in [0, 2], got {epsilon}")
    if epsilon == 0:
        return 0.0
    if epsilon > 1:
        warnings.warn(f"capacity bound used at epsilon={epsilon:.4g} > 1", BoundValidityWarning,
                      stacklevel=2)
    return 2 * epsilon * (n_b * math.log2(m) - math.log2(epsilon))


def entangling_rate_profile(x: float) -> float:
    """2 sqrt(x(1-x)) log2(x/(1-x)): entropy rate of a Schmidt-weight-x qubit pair."""
    if x <= 0 or x >= 1:
        return 0.0
    return 2 * math.sqrt(x * (1 - x)) * math.log2(x / (1 - x))


_INVPHI = (math.sqrt(5) - 1) / 2


def _golden_max(f, a: float, b: float, tol: float) -> float:
    c, d = b - _INVPHI * (b - a), a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def cstar_argmax(tol: float = 1e-10) -> float:
    return _golden_max(entangling_rate_profile, 0.5, 1.0 - 1e-12, tol)


@lru_cache(maxsize=None)
def cstar(tol: float = 1e-10) -> float:
    """Maximal entangling rate of a norm-1 product Hamiltonian (~1.9123 bits/time)."""
    return entangling_rate_profile(cstar_argmax(tol))


def entropy_rate_bound(rates: Iterable[float]) -> float:
    """c* * sum_k |r_k|."""
    return cstar() * sum(abs(r) for r in rates)


def entropy_budget(g: float, P: int, t: float) -> float:
    """c* g P t: total entropy a block with P boundary terms can gain by time t."""
    if g < 0 or P < 0 or t < 0:
        raise ValueError("g, P and t must be nonnegative")
    return cstar() * g * P * t


def tqo_epsilon_propagation(eps_f: float, l_f: float, k: LRConstants, t: float, d: int) -> float:
    """eps_f + l_f^(d-1) exp(-(l_f/2 - v t)/xi), with the O(1) constant set to 1.

    A shape for comparison plots, not a certified bound.
    """
    if l_f <= 0:
        raise ValueError("l_f must be positive")
    return eps_f + l_f ** (d - 1) * math.exp(-(l_f / 2 - k.v * t) / k.xi)


# formula name -> (callable, argument names, unit) for the calculator subcommand
FORMULAS = {
    "cstar": (cstar, (), "bits/time"),
    "cstar_argmax": (cstar_argmax, (), "Schmidt weight"),
    "lr_bound": (lambda c, v, xi, n_min, L, t: lr_bound(LRConstants(c, v, xi), int(n_min), L, t),
                 ("c", "v", "xi", "n_min", "L", "t"), "operator norm"),
    "truncation_bound": (lambda c, v, xi, size_a, l, t: truncation_bound(LRConstants(c, v, xi), int(size_a), l, t),
                         ("c", "v", "xi", "size_a", "l", "t"), "operator norm"),
    "optimal_cut": (optimal_cut, ("chi", "xi", "v", "t", "L"), "edges"),
    "correlation_spread_bound": (
        lambda c_bar, c, v, xi, chi, size_a, size_b, L, t: correlation_spread_bound(
            c_bar, LRConstants(c, v, xi), CorrelationDecay(1.0, chi), int(size_a), int(size_b), L, t),
        ("c_bar", "c", "v", "xi", "chi", "size_a", "size_b", "L", "t"), "dimensionless"),
    "fannes_bound": (lambda delta, nB, m: fannes_bound(delta, int(nB), int(m)), ("delta", "nB", "m"), "bits"),
    "capacity_bound": (lambda epsilon, nB, m: capacity_bound(epsilon, int(nB), int(m)),
                       ("epsilon", "nB", "m"), "bits"),
    "entropy_budget": (lambda g, P, t: entropy_budget(g, int(P), t), ("g", "P", "t"), "bits"),
    "tqo_epsilon_propagation": (
        lambda eps_f, l_f, c, v, xi, t, d: tqo_epsilon_propagation(eps_f, l_f, LRConstants(c, v, xi), t, int(d)),
        ("eps_f", "l_f", "c", "v", "xi", "t", "d"), "dimensionless"),
}

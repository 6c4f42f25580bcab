"""Dense linear algebra over qubit tensor products.

Qubit 0 is the most significant tensor factor everywhere in the package:
basis index ``b`` has qubit ``q`` in state ``(b >> (n - 1 - q)) & 1``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}

MAX_DENSE_QUBITS = 12
MAX_QUBITS = 20


class CapabilityError(RuntimeError):
    """Requested system size exceeds what a code path supports."""

    def __init__(self, what: str, n: int, limit: int):
        super().__init__(f"{what}: {n} qubits requested, limit is {limit}")
        self.what = what
        self.n = n
        self.limit = limit


class PowerIterationError(RuntimeError):
    def __init__(self, msg: str, estimate: float, iterations: int):
        super().__init__(f"{msg} (best estimate {estimate:.12g} after {iterations} iterations)")
        self.estimate = estimate
        self.iterations = iterations


def check_size(what: str, n: int, limit: int) -> None:
    if n > limit:
        raise CapabilityError(what, n, limit)


def _n_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


@dataclass(frozen=True)
class DenseOperator:
    matrix: np.ndarray
    support: tuple[int, ...]

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        support = tuple(int(q) for q in self.support)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got shape {m.shape}")
        if m.shape[0] != 2 ** len(support):
            raise ValueError(f"dim {m.shape[0]} does not match support of size {len(support)}")
        if len(set(support)) != len(support):
            raise ValueError(f"repeated qubit in support {support}")
        if not np.all(np.isfinite(m)):
            raise ValueError("operator has non-finite entries")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "support", support)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def full(cls, matrix: np.ndarray) -> "DenseOperator":
        m = np.asarray(matrix, dtype=complex)
        return cls(m, tuple(range(_n_qubits(m.shape[0]))))

    def normalized(self) -> "DenseOperator":
        nrm = operator_norm(self)
        if nrm == 0:
            raise ValueError("cannot normalize the zero operator")
        return DenseOperator(self.matrix / nrm, self.support)


def pauli(label: str, *sites: int) -> DenseOperator:
    """Pauli string, e.g. ``pauli("ZZ", 0, 3)``."""
    if len(label) != len(sites):
        raise ValueError("one site per Pauli letter")
    m = np.ones((1, 1), dtype=complex)
    for ch in label:
        m = np.kron(m, PAULIS[ch])
    return DenseOperator(m, tuple(sites))


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        _n_qubits(a.size)
        nrm = np.linalg.norm(a)
        if abs(nrm - 1) > 1e-12:
            raise ValueError(f"state norm {nrm!r} differs from 1 by more than 1e-12")
        object.__setattr__(self, "amplitudes", a)

    @property
    def n_qubits(self) -> int:
        return _n_qubits(self.amplitudes.size)

    @classmethod
    def normalize(cls, vec) -> "PureState":
        v = np.asarray(vec, dtype=complex).reshape(-1)
        return cls(v / np.linalg.norm(v))

    @classmethod
    def basis(cls, bits: str | Sequence[int]) -> "PureState":
        bits = [int(b) for b in bits]
        v = np.zeros(2 ** len(bits), dtype=complex)
        v[int("".join(map(str, bits)) or "0", 2)] = 1
        return cls(v)

    @classmethod
    def product(cls, qubit_states: Iterable) -> "PureState":
        v = np.ones(1, dtype=complex)
        for s in qubit_states:
            v = np.kron(v, np.asarray(s, dtype=complex))
        return cls.normalize(v)


def plus_state(n: int) -> PureState:
    return PureState(np.full(2 ** n, 2 ** (-n / 2), dtype=complex))


def ghz_state(n: int, sign: int = 1) -> PureState:
    v = np.zeros(2 ** n, dtype=complex)
    v[0] = 1
    v[-1] = sign
    return PureState.normalize(v)


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        _n_qubits(m.shape[0])
        if np.abs(m - m.conj().T).max() > 1e-12:
            raise ValueError("density matrix is not Hermitian within 1e-12")
        if abs(np.trace(m) - 1) > 1e-12:
            raise ValueError(f"density matrix trace {np.trace(m).real!r} != 1")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return _n_qubits(self.dim)


def _vector(state) -> np.ndarray:
    if isinstance(state, PureState):
        return state.amplitudes
    return np.asarray(state, dtype=complex).reshape(-1)


def kron_embed(op: DenseOperator, n: int) -> DenseOperator:
    """Tensor ``op`` with the identity on the other ``n - k`` qubits."""
    k = len(op.support)
    if any(q < 0 or q >= n for q in op.support):
        raise ValueError(f"support {op.support} out of range for {n} qubits")
    rest = [q for q in range(n) if q not in op.support]
    order = list(op.support) + rest
    big = np.kron(op.matrix, np.eye(2 ** (n - k), dtype=complex)).reshape([2] * (2 * n))
    perm = [order.index(q) for q in range(n)]
    big = big.transpose(perm + [n + p for p in perm])
    return DenseOperator(big.reshape(2 ** n, 2 ** n), tuple(range(n)))


def apply_local(state, op: DenseOperator) -> np.ndarray:
    """Apply ``op`` to the qubits in its support without building the full matrix."""
    psi = _vector(state)
    n = _n_qubits(psi.size)
    k = len(op.support)
    if any(q < 0 or q >= n for q in op.support):
        raise ValueError(f"support {op.support} out of range for {n} qubits")
    t = psi.reshape([2] * n)
    gate = op.matrix.reshape([2] * (2 * k))
    out = np.tensordot(gate, t, axes=(list(range(k, 2 * k)), list(op.support)))
    out = np.moveaxis(out, list(range(k)), list(op.support))
    return out.reshape(-1)


def _split(psi: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    n = _n_qubits(psi.size)
    keep = list(keep)
    rest = [q for q in range(n) if q not in keep]
    return psi.reshape([2] * n).transpose(keep + rest).reshape(2 ** len(keep), -1)


def _check_keep(keep, n: int) -> list[int]:
    keep = sorted(set(int(q) for q in keep))
    if not keep:
        raise ValueError("keep set must be nonempty")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"keep {keep} out of range for {n} qubits")
    return keep


def partial_trace(state, keep: Iterable[int]) -> DensityMatrix:
    """Reduced density matrix on ``keep`` (sorted) of a pure state or density matrix."""
    if isinstance(state, DensityMatrix) or (
        isinstance(state, np.ndarray) and state.ndim == 2
    ):
        rho = state.matrix if isinstance(state, DensityMatrix) else np.asarray(state, complex)
        n = _n_qubits(rho.shape[0])
        keep = _check_keep(keep, n)
        rest = [q for q in range(n) if q not in keep]
        dk, dr = 2 ** len(keep), 2 ** len(rest)
        t = rho.reshape([2] * (2 * n)).transpose(keep + rest + [n + q for q in keep + rest])
        red = np.einsum("ijkj->ik", t.reshape(dk, dr, dk, dr))
    else:
        psi = _vector(state)
        keep = _check_keep(keep, _n_qubits(psi.size))
        m = _split(psi, keep)
        red = m @ m.conj().T
    return DensityMatrix(0.5 * (red + red.conj().T))


def transition_matrix(psi1, psi2, keep: Iterable[int]) -> DenseOperator:
    """Partial trace of |psi2><psi1| onto ``keep``.

    ``Tr(O @ X) == <psi1|O|psi2>`` for every ``O`` supported on ``keep``.
    """
    a, b = _vector(psi1), _vector(psi2)
    if a.size != b.size:
        raise ValueError("states have different dimensions")
    keep = _check_keep(keep, _n_qubits(a.size))
    return DenseOperator(_split(b, keep) @ _split(a, keep).conj().T, tuple(keep))


def _matrix(op) -> np.ndarray:
    if isinstance(op, (DenseOperator, DensityMatrix)):
        return op.matrix
    return np.asarray(op, dtype=complex)


def operator_norm(op) -> float:
    """Largest singular value (dense path)."""
    m = _matrix(op)
    if m.size == 0:
        return 0.0
    if np.allclose(m, m.conj().T, atol=1e-14, rtol=0):
        return float(np.abs(np.linalg.eigvalsh(m)).max())
    return float(np.linalg.norm(m, 2))


def operator_norm_matfree(
    matvec: Callable[[np.ndarray], np.ndarray],
    rmatvec: Callable[[np.ndarray], np.ndarray] | None,
    dim: int,
    *,
    rtol: float = 1e-8,
    max_iter: int = 2000,
    seed: int = 0,
) -> float:
    """Power iteration on A^dagger A. Returns ||A v|| for the final unit ``v``.

    The returned value is a certified lower bound on the norm. ``rmatvec``
    defaults to ``matvec`` (for Hermitian or anti-Hermitian A).
    """
    rmatvec = rmatvec or matvec
    rng = np.random.default_rng(seed)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    v /= np.linalg.norm(v)
    est = 0.0
    for it in range(1, max_iter + 1):
        av = matvec(v)
        new = float(np.linalg.norm(av))
        if new == 0.0:
            return 0.0
        # for anti-Hermitian A, rmatvec(A v) = -A^dagger A v; the sign drops out
        w = rmatvec(av)
        v = w / np.linalg.norm(w)
        if it > 1 and abs(new - est) <= rtol * new:
            return max(new, float(np.linalg.norm(matvec(v))))
        est = new
    raise PowerIterationError("power iteration did not converge", est, max_iter)


def trace_norm(op) -> float:
    return float(np.linalg.svd(_matrix(op), compute_uv=False).sum())


def trace_norm_maximizer(op) -> np.ndarray:
    """Unitary ``W`` with ``|Tr(W X)| = ||X||_1``."""
    u, _, vh = np.linalg.svd(_matrix(op))
    return vh.conj().T @ u.conj().T


def von_neumann_entropy(rho) -> float:
    """Entropy in bits."""
    evals = np.linalg.eigvalsh(_matrix(rho))
    if evals.min() < -1e-10:
        raise ValueError(f"density matrix has eigenvalue {evals.min():.3e} < -1e-10")
    if evals.min() < -1e-14:
        log.warning("clamping negative eigenvalue %.3e to zero", evals.min())
    p = evals[evals > 1e-14]
    return float(-(p * np.log2(p)).sum())


def haar_truncate(op: DenseOperator, outside: Iterable[int]) -> DenseOperator:
    """Normalised partial trace of ``op`` over ``outside``, tensored with identity there.

    ``op`` must act on the full system ``0..n-1``. This equals the Haar average
    of ``U op U^dagger`` over unitaries ``U`` supported on ``outside``.
    """
    n = _n_qubits(op.dim)
    outside = sorted(set(int(q) for q in outside))
    if any(q < 0 or q >= n for q in outside):
        raise ValueError(f"{outside} out of range for {n} qubits")
    if len(outside) == n:
        raise ValueError("cannot trace out the whole system")
    if not outside:
        return DenseOperator(op.matrix, tuple(range(n)))
    keep = [q for q in range(n) if q not in outside]
    dk, ds = 2 ** len(keep), 2 ** len(outside)
    t = op.matrix.reshape([2] * (2 * n)).transpose(keep + outside + [n + q for q in keep + outside])
    red = np.einsum("ijkj->ik", t.reshape(dk, ds, dk, ds)) / ds
    return kron_embed(DenseOperator(red, tuple(keep)), n)


def haar_truncate_sampled(
    op: DenseOperator, outside: Iterable[int], samples: int, rng: np.random.Generator
) -> DenseOperator:
    """Monte Carlo estimate of the Haar twirl over ``outside``; a cross-check only."""
    from scipy.stats import unitary_group

    n = _n_qubits(op.dim)
    outside = tuple(sorted(set(outside)))
    acc = np.zeros_like(op.matrix)
    for _ in range(samples):
        u = unitary_group.rvs(2 ** len(outside), random_state=rng)
        big = kron_embed(DenseOperator(u, outside), n).matrix
        acc += big @ op.matrix @ big.conj().T
    return DenseOperator(acc / samples, tuple(range(n)))


def commutator(a, b) -> np.ndarray:
    a, b = _matrix(a), _matrix(b)
    return a @ b - b @ a


def expectation(state, op: DenseOperator) -> complex:
    psi = _vector(state)
    return complex(np.vdot(psi, apply_local(psi, op)))


def random_state(n: int, rng: np.random.Generator) -> PureState:
    return PureState.normalize(rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n))


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    from scipy.stats import unitary_group

    return unitary_group.rvs(dim, random_state=rng)

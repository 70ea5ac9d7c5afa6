"""Dense linear algebra for small multi-qubit systems.

States are plain numpy arrays: a ket is a 1-D complex array of length 2**n and
a density matrix is a 2-D ``(2**n, 2**n)`` complex array. Qubit 0 is the
leftmost tensor factor, i.e. the most significant bit of a basis label, so
``|j, k, l>`` has index ``4*j + 2*k + l``.

Every function returns a fresh array and never mutates its inputs.
"""

from __future__ import annotations

import os
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

TOL_NORM = float(os.environ.get("GHZGUARD_TOL", "1e-10"))
TOL_EIG = 1e-9
MAX_QUBITS = 24

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


class QuantumStateError(ValueError):
    """A state or operator violates one of its structural invariants."""


def n_qubits(a: np.ndarray) -> int:
    """Number of qubits spanned by a ket or a square operator."""
    dim = a.shape[0]
    n = dim.bit_length() - 1
    if dim < 1 or 2**n != dim or (a.ndim == 2 and a.shape[1] != dim):
        raise QuantumStateError(f"shape {a.shape} is not a qubit register")
    return n


def ket(bits: str | Sequence[int]) -> np.ndarray:
    """Computational basis ket, e.g. ``ket("01")`` is ``|01>``."""
    bits = [int(b) for b in bits]
    if not bits or any(b not in (0, 1) for b in bits):
        raise QuantumStateError(f"invalid bit label {bits!r}")
    out = np.zeros(2 ** len(bits), dtype=complex)
    out[int("".join(map(str, bits)), 2)] = 1.0
    return out


def as_state(amplitudes: Iterable[complex], tol: float | None = None) -> np.ndarray:
    """Validate and return a normalized ket as a complex array."""
    tol = TOL_NORM if tol is None else tol
    psi = np.asarray(list(amplitudes), dtype=complex)
    if psi.ndim != 1:
        raise QuantumStateError("a ket must be one-dimensional")
    n_qubits(psi)
    norm = np.vdot(psi, psi).real
    if abs(norm - 1.0) > tol:
        raise QuantumStateError(f"ket is not normalized (norm^2 = {norm!r})")
    return psi.copy()


def check_density(rho: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Raise unless ``rho`` is Hermitian, unit trace and positive semidefinite."""
    tol = TOL_NORM if tol is None else tol
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2:
        raise QuantumStateError("a density matrix must be two-dimensional")
    n_qubits(rho)
    if not np.allclose(rho, rho.conj().T, atol=tol, rtol=0):
        raise QuantumStateError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise QuantumStateError(f"density matrix has trace {tr!r}")
    min_eig = np.linalg.eigvalsh((rho + rho.conj().T) / 2).min()
    if min_eig < -TOL_EIG:
        raise QuantumStateError(f"density matrix has eigenvalue {min_eig!r}")
    return rho


def dm(psi: np.ndarray) -> np.ndarray:
    """Projector ``|psi><psi|``."""
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def tensor(*factors: np.ndarray) -> np.ndarray:
    """Kronecker product, left factor on the most significant qubits.

    Works for kets and operators alike; mixing the two is rejected.
    """
    if not factors:
        raise ValueError("tensor needs at least one factor")
    arrs = [np.asarray(f, dtype=complex) for f in factors]
    if len({a.ndim for a in arrs}) != 1:
        raise QuantumStateError("cannot tensor a ket with an operator")
    total = sum(n_qubits(a) for a in arrs)
    if total > MAX_QUBITS:
        raise QuantumStateError(f"{total} qubits exceeds the {MAX_QUBITS}-qubit limit")
    return reduce(np.kron, arrs)


def kron_power(op: np.ndarray, n: int) -> np.ndarray:
    return tensor(*([op] * n)) if n else np.ones((1, 1), dtype=complex)


def embed(op: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Full ``2**n`` matrix of ``op`` acting on ``targets`` (in that order)."""
    targets = list(targets)
    k = len(targets)
    op = np.asarray(op, dtype=complex)
    if op.shape != (2**k, 2**k):
        raise QuantumStateError(f"operator shape {op.shape} does not fit {k} qubits")
    return apply_left(np.eye(2**n, dtype=complex), op, targets)


def _check_targets(targets: Sequence[int], n: int) -> list[int]:
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise QuantumStateError(f"repeated qubit in {targets}")
    if any(t < 0 or t >= n for t in targets):
        raise QuantumStateError(f"qubit index out of range in {targets} for {n} qubits")
    return targets


def apply_left(a: np.ndarray, op: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Multiply ``op`` (acting on ``targets``) onto the row index of ``a``.

    ``a`` may be a ket or a matrix; for a matrix only the left side is hit.
    """
    a = np.asarray(a, dtype=complex)
    n = n_qubits(a[:, 0] if a.ndim == 2 else a)
    targets = _check_targets(targets, n)
    k = len(targets)
    rest_shape = a.shape[1:]
    t = a.reshape((2,) * n + rest_shape)
    t = np.moveaxis(t, targets, range(k))
    moved_shape = t.shape
    t = op.reshape(2**k, 2**k) @ t.reshape(2**k, -1)
    t = np.moveaxis(t.reshape(moved_shape), range(k), targets)
    return t.reshape(a.shape)


def conjugate(rho: np.ndarray, op: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """``op rho op^dagger`` with ``op`` acting on ``targets``."""
    left = apply_left(rho, op, targets)
    return apply_left(left.conj().T, op, targets).conj().T


def partial_trace(rho: np.ndarray, keep: Iterable[int]) -> np.ndarray:
    """Reduced density matrix on ``keep``; kept qubits stay in ascending order."""
    rho = np.asarray(rho, dtype=complex)
    n = n_qubits(rho)
    keep = sorted(set(int(q) for q in keep))
    if not keep:
        raise QuantumStateError("partial_trace needs at least one qubit to keep")
    _check_targets(keep, n)
    drop = [q for q in range(n) if q not in keep]
    t = rho.reshape((2,) * (2 * n))
    # Row axes 0..n-1, column axes n..2n-1; keep first, then dropped.
    perm = keep + drop + [n + q for q in keep] + [n + q for q in drop]
    k, d = len(keep), len(drop)
    t = t.transpose(perm).reshape(2**k, 2**d, 2**k, 2**d)
    return np.einsum("ajbj->ab", t)


def fidelity(rho: np.ndarray, psi: np.ndarray) -> float:
    """Overlap ``<psi|rho|psi>`` of a density matrix with a pure target."""
    rho = np.asarray(rho, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    if rho.shape != (psi.size, psi.size):
        raise QuantumStateError(f"shape mismatch {rho.shape} vs ket of length {psi.size}")
    f = np.vdot(psi, rho @ psi)
    if abs(f.imag) > TOL_NORM:
        raise ArithmeticError(f"fidelity has imaginary part {f.imag!r}; rho is not Hermitian")
    return float(f.real)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise QuantumStateError(f"shape mismatch {a.shape} vs {b.shape}")
    diff = a - b
    return float(0.5 * np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2)).sum())


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Base-2 entropy; eigenvalues below TOL_EIG count as zero."""
    evals = np.linalg.eigvalsh(np.asarray(rho, dtype=complex))
    evals = evals[evals > TOL_EIG]
    return float(max(0.0, -(evals * np.log2(evals)).sum()))


def entanglement_entropy(psi: np.ndarray, partition: Iterable[int]) -> float:
    """Entropy of entanglement (bits) of a pure state across ``partition``."""
    psi = as_state(psi)
    return von_neumann_entropy(partial_trace(dm(psi), partition))


def is_unitary(u: np.ndarray, tol: float | None = None) -> bool:
    tol = TOL_NORM if tol is None else tol
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=tol, rtol=0))


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random ket on ``n`` qubits."""
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return v / np.linalg.norm(v)


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random mixed state drawn from the induced (Ginibre) measure."""
    dim = 2**n
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase fix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))

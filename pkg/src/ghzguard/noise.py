"""Bit-flip and phase-flip noise as Kraus channels.

Two models are provided. ``exact`` is the full product channel where every
affected qubit flips independently with probability ``p``. ``first_order``
keeps at most one flip: ``(1 - N p) rho + p sum_k X_k rho X_k``. The latter is
itself trace preserving, so the closed-form weights derived from it hold to
machine precision while the exact channel measures the O(p**2) remainder.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from math import comb
from typing import Iterable

import numpy as np

from . import qcore
from .qcore import TOL_NORM, QuantumStateError


class NoiseMode(str, Enum):
    EXACT = "exact"
    FIRST_ORDER = "first_order"

    @classmethod
    def parse(cls, value: "str | NoiseMode") -> "NoiseMode":
        if isinstance(value, cls):
            return value
        return cls(str(value).replace("-", "_"))


class NoiseDomainError(ValueError):
    """Noise parameters fall outside the model's domain."""


@dataclass(frozen=True)
class NoiseSpec:
    p: float
    affected_qubits: frozenset[int] = field(default_factory=frozenset)
    mode: NoiseMode = NoiseMode.FIRST_ORDER

    def __post_init__(self):
        object.__setattr__(self, "affected_qubits", frozenset(int(q) for q in self.affected_qubits))
        object.__setattr__(self, "mode", NoiseMode.parse(self.mode))
        if not 0.0 <= self.p < 0.5:
            raise NoiseDomainError(f"p = {self.p} outside [0, 0.5)")
        n = len(self.affected_qubits)
        if self.mode is NoiseMode.FIRST_ORDER and n * self.p >= 1.0:
            raise NoiseDomainError(
                f"first-order model needs N*p < 1, got N={n}, p={self.p}"
            )

    def on(self, qubits: Iterable[int]) -> "NoiseSpec":
        """Same p and mode, different affected qubits (revalidated)."""
        return NoiseSpec(self.p, frozenset(qubits), self.mode)


def check_domain(p: float, n_affected: int, mode: "str | NoiseMode") -> None:
    """Raise ``NoiseDomainError`` if ``p`` is invalid for ``n_affected`` qubits."""
    NoiseSpec(p, frozenset(range(n_affected)), mode)


@dataclass(frozen=True)
class KrausChannel:
    n_qubits: int
    kraus_ops: tuple[np.ndarray, ...]
    mode: NoiseMode

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        return sum(k @ rho @ k.conj().T for k in self.kraus_ops)

    def completeness_defect(self) -> float:
        dim = 2**self.n_qubits
        total = sum(k.conj().T @ k for k in self.kraus_ops)
        return float(np.abs(total - np.eye(dim)).max())

    def is_complete(self, tol: float = TOL_NORM) -> bool:
        return self.completeness_defect() <= tol


def _pauli_on(pauli: np.ndarray, qubits: Iterable[int], n: int) -> np.ndarray:
    op = np.eye(2**n, dtype=complex)
    for q in qubits:
        op = qcore.apply_left(op, pauli, [q])
    return op


def _check_spec(spec: NoiseSpec, n: int) -> None:
    bad = [q for q in spec.affected_qubits if not 0 <= q < n]
    if bad:
        raise QuantumStateError(f"affected qubits {sorted(bad)} out of range for {n} qubits")


def flip_channel(spec: NoiseSpec, n_qubits: int, pauli: np.ndarray = qcore.X) -> KrausChannel:
    """Kraus operators of the bit-flip (or other Pauli) channel on ``n_qubits``.

    Exact mode enumerates every flip subset S with amplitude
    ``sqrt(p**|S| (1-p)**(N-|S|))``; first-order mode has one no-flip operator
    with weight ``1 - N p`` and one single-flip operator per affected qubit.
    """
    _check_spec(spec, n_qubits)
    affected = sorted(spec.affected_qubits)
    n_aff, p = len(affected), spec.p
    ops = []
    if spec.mode is NoiseMode.EXACT:
        for r in range(n_aff + 1):
            weight = p**r * (1 - p) ** (n_aff - r)
            for subset in itertools.combinations(affected, r):
                ops.append(np.sqrt(weight) * _pauli_on(pauli, subset, n_qubits))
    else:
        ops.append(np.sqrt(1 - n_aff * p) * np.eye(2**n_qubits, dtype=complex))
        ops.extend(np.sqrt(p) * _pauli_on(pauli, [q], n_qubits) for q in affected)
    return KrausChannel(n_qubits, tuple(ops), spec.mode)


def _apply_flips(rho: np.ndarray, spec: NoiseSpec, pauli: np.ndarray) -> np.ndarray:
    # Qubit-local application; avoids materialising 2**n x 2**n Kraus operators.
    rho = np.asarray(rho, dtype=complex)
    n = qcore.n_qubits(rho)
    _check_spec(spec, n)
    p = spec.p
    if spec.mode is NoiseMode.EXACT:
        # Independent flips factorise into one single-qubit channel per qubit.
        for q in sorted(spec.affected_qubits):
            rho = (1 - p) * rho + p * qcore.conjugate(rho, pauli, [q])
        return rho
    out = (1 - len(spec.affected_qubits) * p) * rho
    for q in sorted(spec.affected_qubits):
        out = out + p * qcore.conjugate(rho, pauli, [q])
    return out


def bitflip_exact(rho: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    if spec.mode is not NoiseMode.EXACT:
        raise ValueError("bitflip_exact needs an exact-mode NoiseSpec")
    return _apply_flips(rho, spec, qcore.X)


def bitflip_first_order(rho: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    if spec.mode is not NoiseMode.FIRST_ORDER:
        raise ValueError("bitflip_first_order needs a first-order NoiseSpec")
    return _apply_flips(rho, spec, qcore.X)


def bitflip(rho: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    """Bit-flip noise in whichever mode ``spec`` names."""
    return _apply_flips(rho, spec, qcore.X)


def phaseflip_exact(rho: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    if spec.mode is not NoiseMode.EXACT:
        raise ValueError("phaseflip_exact needs an exact-mode NoiseSpec")
    return _apply_flips(rho, spec, qcore.Z)


def flip_event_probabilities(n_affected: int, p: float, mode: "str | NoiseMode") -> dict[int, float]:
    """Probability of exactly r flips, r = 0..n_affected."""
    mode = NoiseMode.parse(mode)
    if mode is NoiseMode.FIRST_ORDER:
        return {0: 1 - n_affected * p, 1: n_affected * p} | {r: 0.0 for r in range(2, n_affected + 1)}
    return {r: comb(n_affected, r) * p**r * (1 - p) ** (n_affected - r) for r in range(n_affected + 1)}

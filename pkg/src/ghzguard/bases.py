"""Bell and GHZ bases, and labeled projective measurements.

A GHZ label ``mu = (mu_0, ..., mu_{N-1})`` names the state

    |phi_mu> = (|0, mu_1, ..., mu_{N-1}> + (-1)**mu_0 |1, 1^mu_1, ..., 1^mu_{N-1}>) / sqrt(2)

so the first bit is a relative phase and the remaining bits are parities
against the first qubit. The Bell state ``|psi_mn>`` is the N = 2 case with
``(m, n) = (mu_0, mu_1)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import qcore
from .qcore import TOL_EIG, TOL_NORM, QuantumStateError

Label = tuple[int, ...]


def label_str(label: Sequence[int]) -> str:
    """Bit-string form of a label, ``(0, 1, 1) -> "011"``."""
    return "".join(str(int(b)) for b in label)


def parse_label(text: str) -> Label:
    if not text or any(c not in "01" for c in text):
        raise ValueError(f"not a bit string: {text!r}")
    return tuple(int(c) for c in text)


def all_labels(n: int) -> list[Label]:
    """Every n-bit label in lexicographic order."""
    return [tuple(bits) for bits in itertools.product((0, 1), repeat=n)]


def ghz_state(label: Sequence[int]) -> np.ndarray:
    mu = tuple(int(b) for b in label)
    if len(mu) < 2:
        raise QuantumStateError("a GHZ label needs at least two bits")
    if any(b not in (0, 1) for b in mu):
        raise QuantumStateError(f"GHZ label {mu} is not a bit vector")
    out = np.zeros(2 ** len(mu), dtype=complex)
    for j in (0, 1):
        bits = (j,) + tuple(j ^ b for b in mu[1:])
        out[int(label_str(bits), 2)] += (-1) ** (j * mu[0]) / np.sqrt(2)
    return out


def bell_state(m: int, n: int) -> np.ndarray:
    return ghz_state((m, n))


@dataclass(frozen=True)
class MeasurementBasis:
    """Ordered, labeled complete set of orthogonal projectors."""

    n_qubits: int
    labels: tuple[Label, ...]
    projectors: tuple[np.ndarray, ...]
    name: str = ""

    def __post_init__(self):
        if len(self.labels) != len(self.projectors):
            raise QuantumStateError("labels and projectors differ in length")
        dim = 2**self.n_qubits
        for p in self.projectors:
            if p.shape != (dim, dim):
                raise QuantumStateError(f"projector shape {p.shape} does not fit {self.n_qubits} qubits")

    @property
    def elements(self) -> list[tuple[Label, np.ndarray]]:
        return list(zip(self.labels, self.projectors))

    def projector(self, label: Sequence[int]) -> np.ndarray:
        return self.projectors[self.labels.index(tuple(label))]

    def validate(self, tol: float = TOL_NORM) -> None:
        """Check idempotence, mutual orthogonality and completeness."""
        dim = 2**self.n_qubits
        total = np.zeros((dim, dim), dtype=complex)
        for i, p in enumerate(self.projectors):
            if not np.allclose(p @ p, p, atol=tol, rtol=0):
                raise QuantumStateError(f"element {self.labels[i]} is not idempotent")
            for q in self.projectors[i + 1:]:
                if not np.allclose(p @ q, 0, atol=tol, rtol=0):
                    raise QuantumStateError("basis elements are not orthogonal")
            total += p
        if not np.allclose(total, np.eye(dim), atol=tol, rtol=0):
            raise QuantumStateError("basis projectors do not sum to the identity")


def ghz_basis(n: int) -> MeasurementBasis:
    """The 2**n projectors onto ``|phi_mu>``, labels in lexicographic order."""
    if n < 2:
        raise QuantumStateError("GHZ basis needs n >= 2")
    labels = tuple(all_labels(n))
    return MeasurementBasis(
        n_qubits=n,
        labels=labels,
        projectors=tuple(qcore.dm(ghz_state(mu)) for mu in labels),
        name=f"ghz{n}",
    )


def bell_basis() -> MeasurementBasis:
    basis = ghz_basis(2)
    return MeasurementBasis(2, basis.labels, basis.projectors, name="bell")


@dataclass(frozen=True)
class MeasurementRecord:
    label: Label
    probability: float
    # Full-system conditional state; None when the outcome has zero weight.
    post_state: np.ndarray | None


def measure(
    rho: np.ndarray, basis: MeasurementBasis, targets: Sequence[int]
) -> list[MeasurementRecord]:
    """Projective measurement of ``basis`` on ``targets`` of ``rho``.

    Returns one record per basis label in basis order. The conditional states
    live on the full register; trace out the measured qubits as needed.
    """
    rho = np.asarray(rho, dtype=complex)
    if len(targets) != basis.n_qubits:
        raise QuantumStateError(
            f"{basis.name or 'basis'} acts on {basis.n_qubits} qubits, got targets {list(targets)}"
        )
    records = []
    for label, proj in basis.elements:
        branch = qcore.conjugate(rho, proj, targets)
        prob = np.trace(branch)
        if prob.real < -TOL_EIG or abs(prob.imag) > TOL_NORM:
            raise ArithmeticError(f"outcome {label_str(label)} has probability {prob!r}")
        # Round-off residue on impossible outcomes is reported as exactly zero.
        prob = float(prob.real) if prob.real > 1e-15 else 0.0
        post = branch / prob if prob > TOL_NORM else None
        records.append(MeasurementRecord(label, prob, post))
    return records

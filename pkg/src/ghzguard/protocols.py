"""Teleportation and dense coding over EPR pairs or GHZ states, with noise.

Every protocol reduces to the same pipeline: prepare a register, apply
bit-flip noise to the qubits that are about to be measured, measure them in a
Bell/GHZ basis, correct the remaining qubits according to the outcome and
trace the measured qubits away. GHZ labels whose parity bits disagree
(``mu_1 != mu_2`` and so on) never occur without noise; they are *flagged*.
With post-selection the flagged runs are discarded and the rest renormalised.

Flagged runs never count towards ``desired_component_weight``. Without
post-selection a receiver that ignores the flag still ends up with some
state; we decode a flagged label ``(mu_0, mu_1, ...)`` as if it were
``(mu_0, mu_1, mu_1, ...)``, i.e. the extra GHZ qubits are ignored, and that
branch enters ``output_state`` but not the desired weight.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import qcore
from .bases import Label, MeasurementBasis, bell_state, ghz_basis, ghz_state, label_str, measure
from .noise import NoiseMode, NoiseSpec, bitflip, check_domain
from .qcore import TOL_NORM, QuantumStateError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProtocolResult:
    output_state: np.ndarray
    fidelity_to_target: float
    outcome_distribution: dict[str, float]
    acceptance_rate: float
    desired_component_weight: float
    # Probability mass on labels that cannot occur without noise.
    detected_probability: float = 0.0
    retained_labels: tuple[str, ...] = ()
    target_state: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class TeleportInput:
    alpha0: complex
    alpha1: complex
    noise: NoiseSpec | None = None

    def __post_init__(self):
        qcore.as_state([self.alpha0, self.alpha1])

    @property
    def psi(self) -> np.ndarray:
        return np.array([self.alpha0, self.alpha1], dtype=complex)


@dataclass(frozen=True)
class EprTask:
    """A task that Bell-measures ``measured_qubits`` and then corrects the rest.

    ``correction_unitaries[(m, n)]`` acts on the unmeasured qubits in
    ascending order. The lifting to GHZ copies ``measured_qubits[1]`` into a
    fresh ancilla, so that qubit should be one half of the EPR pair.
    """

    correction_unitaries: Mapping[Label, np.ndarray]
    measured_qubits: tuple[int, int]
    system_state: np.ndarray

    def __post_init__(self):
        n = qcore.n_qubits(self.system_state)
        _validate_task(n, self.measured_qubits, self.correction_unitaries, 2)

    @property
    def n_qubits(self) -> int:
        return qcore.n_qubits(self.system_state)

    @property
    def output_qubits(self) -> list[int]:
        return [q for q in range(self.n_qubits) if q not in self.measured_qubits]


@dataclass(frozen=True)
class GhzTask:
    """GHZ counterpart of an :class:`EprTask`.

    Corrections are keyed by the retained labels ``(m, n, ..., n)``; every
    other label of the N-qubit GHZ basis is in ``disallowed_labels``.
    """

    correction_unitaries: Mapping[Label, np.ndarray]
    measured_qubits: tuple[int, ...]
    system_state: np.ndarray
    disallowed_labels: frozenset[Label] = frozenset()

    def __post_init__(self):
        n_meas = len(self.measured_qubits)
        n = qcore.n_qubits(self.system_state)
        _validate_task(n, self.measured_qubits, self.correction_unitaries, n_meas)
        retained = {lab for lab in self.correction_unitaries}
        if any(len(set(lab[1:])) != 1 for lab in retained):
            raise QuantumStateError("retained GHZ labels must have equal parity bits")
        expected = {lab for lab in ghz_basis(n_meas).labels if lab not in retained}
        if self.disallowed_labels and set(self.disallowed_labels) != expected:
            raise QuantumStateError("disallowed labels must be the complement of the retained ones")
        object.__setattr__(self, "disallowed_labels", frozenset(expected))

    @property
    def n_qubits(self) -> int:
        return qcore.n_qubits(self.system_state)

    @property
    def output_qubits(self) -> list[int]:
        return [q for q in range(self.n_qubits) if q not in self.measured_qubits]


def _validate_task(n, measured, corrections, n_meas):
    if len(measured) != n_meas or len(set(measured)) != n_meas:
        raise QuantumStateError(f"need {n_meas} distinct measured qubits, got {measured}")
    if any(not 0 <= q < n for q in measured):
        raise QuantumStateError(f"measured qubits {measured} out of range for {n} qubits")
    if len(corrections) != 4:
        raise QuantumStateError("a task needs one correction per Bell label")
    dim = 2 ** (n - n_meas)
    for label, u in corrections.items():
        u = np.asarray(u)
        if u.shape != (dim, dim):
            raise QuantumStateError(f"correction {label} has shape {u.shape}, expected {(dim, dim)}")
        if not qcore.is_unitary(u):
            raise QuantumStateError(f"correction {label} is not unitary")


# -- the shared pipeline -------------------------------------------------------


def _nominal(label: Label) -> Label:
    """Retained label a flagged outcome is decoded as: parity bits from mu_1."""
    return (label[0],) + (label[1],) * (len(label) - 1)


def _output_of_branch(branch, label, corrections, measured, out_qubits):
    u = corrections[_nominal(label)]
    if out_qubits:
        branch = qcore.conjugate(branch, u, out_qubits)
        return qcore.partial_trace(branch, out_qubits)
    # No quantum output: the decoded Bell label is written to a 2-bit register.
    reg = np.zeros((4, 4), dtype=complex)
    idx = 2 * label[0] + label[1]
    reg[idx, idx] = np.trace(branch)
    return reg


def _component_weight(state, target, wrong):
    """Coefficient of ``target`` when ``state`` is fitted by ``a*target + b*wrong``.

    Least squares in the Hilbert-Schmidt inner product. If ``target`` and
    ``wrong`` coincide the fit is one-dimensional.
    """
    g11 = np.vdot(target, target).real
    g12 = np.vdot(target, wrong).real
    g22 = np.vdot(wrong, wrong).real
    r1 = np.vdot(target, state).real
    r2 = np.vdot(wrong, state).real
    det = g11 * g22 - g12 * g12
    if det <= 1e-9 * g11 * g22:
        return r1 / g11
    return (r1 * g22 - r2 * g12) / det


def _measure_and_correct(rho, basis, measured, corrections, noise):
    """Noisy measurement plus correction, split into retained and flagged parts.

    Returns ``(distribution, retained_output, flagged_output, flagged_mass)``;
    both outputs are unnormalised.
    """
    measured = list(measured)
    n = qcore.n_qubits(rho)
    out_qubits = [q for q in range(n) if q not in measured]
    if noise is not None:
        spec = noise if noise.affected_qubits else noise.on(measured)
        rho = bitflip(rho, spec)

    allowed = flagged = None
    dist: dict[str, float] = {}
    detected = 0.0
    for rec in measure(rho, basis, measured):
        dist[label_str(rec.label)] = rec.probability
        is_allowed = rec.label in corrections
        if not is_allowed:
            detected += rec.probability
        if rec.post_state is None:
            continue
        out = _output_of_branch(rec.probability * rec.post_state, rec.label, corrections,
                                measured, out_qubits)
        if is_allowed:
            allowed = out if allowed is None else allowed + out
        else:
            flagged = out if flagged is None else flagged + out

    total = sum(dist.values())
    if abs(total - 1.0) > 1e3 * TOL_NORM:
        raise ArithmeticError(f"outcome probabilities sum to {total!r}")
    return dist, allowed, flagged, detected


def _run_pipeline(rho, basis, measured, corrections, noise, postselect,
                  target, wrong, target_ket=None) -> ProtocolResult:
    dist, allowed, flagged, detected = _measure_and_correct(
        rho, basis, measured, corrections, noise)
    if allowed is None:
        allowed = np.zeros_like(target)

    weight = _component_weight(allowed, target, wrong)
    if postselect:
        acceptance = 1.0 - detected
        if acceptance <= TOL_NORM:
            raise ArithmeticError("post-selection discarded every outcome")
        output = allowed / acceptance
        weight /= acceptance
        retained = tuple(label_str(lab) for lab in basis.labels if lab in corrections)
    else:
        acceptance = 1.0
        output = allowed if flagged is None else allowed + flagged
        retained = tuple(label_str(lab) for lab in basis.labels)

    if target_ket is not None:
        fid = qcore.fidelity(output, target_ket)
    else:
        fid = float(np.vdot(target, output).real)
    return ProtocolResult(
        output_state=output,
        fidelity_to_target=fid,
        outcome_distribution=dist,
        acceptance_rate=acceptance,
        desired_component_weight=float(weight),
        detected_probability=detected,
        retained_labels=retained,
        target_state=target,
    )


def _pauli_correction(m: int, n: int) -> np.ndarray:
    return np.linalg.matrix_power(qcore.Z, m) @ np.linalg.matrix_power(qcore.X, n)


def _retained_labels(n_ghz: int) -> list[Label]:
    return [(m,) + (n,) * (n_ghz - 1) for m in (0, 1) for n in (0, 1)]


# -- teleportation -------------------------------------------------------------


def _teleport(inp: TeleportInput, n_ghz: int, postselect: bool) -> ProtocolResult:
    psi = qcore.as_state([inp.alpha0, inp.alpha1])
    resource = ghz_state((0,) * n_ghz)
    rho = qcore.dm(qcore.tensor(psi, resource))
    measured = list(range(n_ghz))  # the unknown qubit plus Alice's share
    corrections = {lab: _pauli_correction(lab[0], lab[1]) for lab in _retained_labels(n_ghz)}
    target = qcore.dm(psi)
    wrong = qcore.X @ target @ qcore.X
    return _run_pipeline(rho, ghz_basis(n_ghz), measured, corrections, inp.noise,
                         postselect, target, wrong, target_ket=psi)


def teleport_epr(inp: TeleportInput) -> ProtocolResult:
    """Teleport ``|Psi>`` over ``|psi_00>``; noise hits Alice's two qubits."""
    return _teleport(inp, 2, postselect=False)


def teleport_ghz(inp: TeleportInput, postselect: bool = False) -> ProtocolResult:
    """Teleport ``|Psi>`` over ``|phi_000>`` with Bob holding the last qubit.

    Alice measures her three qubits in the GHZ basis. Outcomes other than
    ``(m, n, n)`` reveal a flip; with ``postselect`` they are discarded.
    """
    return _teleport(inp, 3, postselect)


# -- superdense coding -----------------------------------------------------------


def _check_message(message: Sequence[int]) -> tuple[int, int]:
    a1, a2 = (int(b) for b in message)
    if a1 not in (0, 1) or a2 not in (0, 1):
        raise ValueError(f"message must be two bits, got {message!r}")
    return a1, a2


def _dense(message, noise, n_ghz, postselect) -> ProtocolResult:
    a1, a2 = _check_message(message)
    encode = np.linalg.matrix_power(qcore.X, a2) @ np.linalg.matrix_power(qcore.Z, a1)
    shared = ghz_state((0,) * n_ghz)
    rho = qcore.conjugate(qcore.dm(shared), encode, [0])
    one = np.ones((1, 1), dtype=complex)
    corrections = {lab: one for lab in _retained_labels(n_ghz)}
    target_ket = qcore.ket((a1, a2))
    target = qcore.dm(target_ket)
    wrong = qcore.dm(qcore.ket((a1, a2 ^ 1)))
    return _run_pipeline(rho, ghz_basis(n_ghz), range(n_ghz), corrections, noise,
                         postselect, target, wrong, target_ket=target_ket)


def dense_epr(message: Sequence[int], noise: NoiseSpec | None = None) -> ProtocolResult:
    """Superdense coding of ``(a1, a2)`` over an EPR pair.

    ``output_state`` is Bob's decoded 2-bit register; the desired weight is
    the probability of reading back ``(a1, a2)``.
    """
    return _dense(message, noise, 2, postselect=False)


def dense_ghz(message: Sequence[int], noise: NoiseSpec | None = None,
              postselect: bool = False) -> ProtocolResult:
    """Superdense coding over ``|phi_000>``; Alice holds the first qubit."""
    return _dense(message, noise, 3, postselect)


# -- general tasks and the ancilla lift -----------------------------------------------


def _task_reference(task, basis, corrections):
    """Noiseless output, and the output after an undetectable flip of measured[0]."""
    measured = list(task.measured_qubits)
    _, clean, _, _ = _measure_and_correct(task.system_state, basis, measured, corrections, None)
    flipped = qcore.conjugate(task.system_state, qcore.X, [measured[0]])
    _, wrong, _, _ = _measure_and_correct(flipped, basis, measured, corrections, None)
    return clean, wrong


def _run_task(task, noise, postselect):
    basis = ghz_basis(len(task.measured_qubits))
    corrections = {tuple(k): np.asarray(u, dtype=complex)
                   for k, u in task.correction_unitaries.items()}
    target, wrong = _task_reference(task, basis, corrections)
    return _run_pipeline(task.system_state, basis, task.measured_qubits, corrections,
                         noise, postselect, target, wrong)


def run_epr_task(task: EprTask, noise: NoiseSpec | None = None) -> ProtocolResult:
    """Execute an EPR task; noise, if any, hits the two measured qubits."""
    return _run_task(task, noise, postselect=False)


def lift_epr_task(task: EprTask, n_ghz: int = 3) -> GhzTask:
    """Replace the EPR pair of ``task`` by an ``n_ghz``-partite GHZ state.

    ``n_ghz - 2`` ancillas in ``|0>`` are appended after the existing qubits
    and each receives a CNOT from ``measured_qubits[1]``. Since
    ``CNOT |psi_mn>|0> = |phi_mnn>``, projecting onto ``|phi_{m,n,..,n}>``
    acts on the lifted state exactly as projecting onto ``|psi_mn>`` did on
    the original, so the noiseless outputs agree.
    """
    if n_ghz < 2:
        raise ValueError("n_ghz must be at least 2")
    n = task.n_qubits
    n_anc = n_ghz - 2
    a, b = task.measured_qubits
    rho = qcore.tensor(task.system_state, qcore.dm(qcore.ket("0" * n_anc))) if n_anc else \
        np.array(task.system_state, dtype=complex)
    ancillas = list(range(n, n + n_anc))
    for anc in ancillas:
        rho = qcore.conjugate(rho, qcore.CNOT, [b, anc])
    corrections = {
        (m,) + (k,) * (n_ghz - 1): np.asarray(task.correction_unitaries[(m, k)], dtype=complex)
        for m in (0, 1) for k in (0, 1)
    }
    return GhzTask(corrections, (a, b, *ancillas), rho)


def run_lifted_with_noise(task: GhzTask, noise: NoiseSpec | None = None,
                          postselect: bool = False) -> ProtocolResult:
    """Execute a lifted task with bit-flip noise on its measured qubits."""
    return _run_task(task, noise, postselect)


def teleport_task(psi: Sequence[complex]) -> EprTask:
    """Teleportation written as an EprTask: qubits (psi, Alice, Bob)."""
    psi = qcore.as_state(psi)
    rho = qcore.dm(qcore.tensor(psi, bell_state(0, 0)))
    corrections = {(m, n): _pauli_correction(m, n) for m in (0, 1) for n in (0, 1)}
    return EprTask(corrections, (0, 1), rho)


def dense_task(message: Sequence[int]) -> EprTask:
    """Superdense decoding written as an EprTask with trivial corrections."""
    a1, a2 = _check_message(message)
    encode = np.linalg.matrix_power(qcore.X, a2) @ np.linalg.matrix_power(qcore.Z, a1)
    rho = qcore.conjugate(qcore.dm(bell_state(0, 0)), encode, [0])
    one = np.ones((1, 1), dtype=complex)
    return EprTask({(m, n): one for m in (0, 1) for n in (0, 1)}, (0, 1), rho)


# -- N-partite GHZ ---------------------------------------------------------------

# Generic, non-degenerate teleportation input for the N-partite check.
_PROBE_PSI = np.array([np.cos(0.4), np.exp(0.7j) * np.sin(0.4)])
MAX_SIMULATED_N = 10


def nghz_closed_form(n: int, p: float) -> float:
    """Post-selected efficiency ``(1 - N p) / (1 - (N - 1) p)``."""
    if n < 2:
        raise ValueError("N must be at least 2")
    check_domain(p, n, NoiseMode.FIRST_ORDER)
    return (1 - n * p) / (1 - (n - 1) * p)


def simulate_nghz(n: int, p: float, mode: "str | NoiseMode" = NoiseMode.FIRST_ORDER,
                  psi: Sequence[complex] | None = None) -> ProtocolResult:
    """Post-selected teleportation over an N-partite GHZ resource."""
    if not 2 <= n <= MAX_SIMULATED_N:
        raise ValueError(f"simulation supports 2 <= N <= {MAX_SIMULATED_N}, got {n}")
    task = lift_epr_task(teleport_task(_PROBE_PSI if psi is None else psi), n_ghz=n)
    return run_lifted_with_noise(task, NoiseSpec(p, frozenset(), mode), postselect=True)


@dataclass(frozen=True)
class NghzCheck:
    n: int
    p: float
    closed_form: float
    simulated: float
    acceptance_rate: float

    @property
    def agrees(self) -> bool:
        return abs(self.closed_form - self.simulated) <= TOL_NORM


def compare_nghz(n: int, p: float) -> NghzCheck:
    closed = nghz_closed_form(n, p)
    res = simulate_nghz(n, p)
    return NghzCheck(n, p, closed, res.desired_component_weight, res.acceptance_rate)


def nghz_efficiency(n: int, p: float, verify: bool = True) -> float:
    """Closed-form N-partite efficiency, optionally checked by simulation.

    For N >= 3 a mismatch with the simulated protocol raises. For N = 2 there
    are no flagged outcomes, so the simulated success is ``1 - 2p`` rather
    than the formula's ``(1 - 2p) / (1 - p)``; that is logged, not raised.
    """
    closed = nghz_closed_form(n, p)
    if verify and n <= MAX_SIMULATED_N:
        check = compare_nghz(n, p)
        if not check.agrees:
            msg = (f"N={n}, p={p}: closed form {closed!r} vs simulated {check.simulated!r} "
                   f"(acceptance {check.acceptance_rate!r})")
            if n >= 3:
                raise ArithmeticError(msg)
            log.warning("no flagged outcomes for N=2; %s", msg)
    return closed


def optimal_n(p: float, n_max: int) -> int:
    """Best GHZ size in ``3..n_max``; ties (only at p = 0) go to the smallest N."""
    if n_max < 3:
        raise ValueError("n_max must be at least 3")
    if not 0.0 <= p < 1.0 / n_max:
        raise ValueError(f"need 0 <= p < 1/n_max = {1.0 / n_max}, got {p}")
    best_n, best = 3, nghz_closed_form(3, p)
    for n in range(4, n_max + 1):
        eff = nghz_closed_form(n, p)
        if eff > best:
            best_n, best = n, eff
    return best_n


def improvement_holds(p: float) -> bool:
    """Post-selected GHZ weight beats the EPR weight, ``(1-3p)/(1-2p) > 1-2p``."""
    return (1 - 3 * p) / (1 - 2 * p) > 1 - 2 * p

"""Shot-by-shot sampling of the noisy protocols.

Each shot draws a flip pattern on the measured qubits, applies it to the pure
initial ket, draws a measurement label from the Born probabilities of that
ket, and scores the corrected output. Trajectory states stay pure; the
density-matrix pipeline in :mod:`ghzguard.protocols` is the analytic
reference they are compared against.

Random numbers come from numpy's PCG64 seeded through ``SeedSequence``.
Shots are split into ``partitions`` substreams, partition ``i`` seeded with
``SeedSequence(seed, spawn_key=(i,))``, so results depend only on
``(seed, shots, partitions, parameters)`` and never on the number of workers.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import qcore
from .bases import all_labels, ghz_state, label_str
from .noise import NoiseMode, NoiseSpec
from .protocols import ProtocolResult, TeleportInput, dense_epr, dense_ghz, teleport_epr, teleport_ghz

RNG_ALGORITHM = "numpy.PCG64/SeedSequence"
Z_FLAG = 4.0

PROTOCOLS = ("teleport-epr", "teleport-ghz", "dense-epr", "dense-ghz")


@dataclass(frozen=True)
class TrajectoryConfig:
    protocol: str
    p: float
    shots: int
    seed: int
    mode: NoiseMode = NoiseMode.FIRST_ORDER
    postselect: bool = False
    psi: tuple[complex, complex] = (1.0, 0.0)
    message: tuple[int, int] = (0, 0)
    partitions: int = 1

    def __post_init__(self):
        object.__setattr__(self, "mode", NoiseMode.parse(self.mode))
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}; choose from {PROTOCOLS}")
        if self.shots < 1:
            raise ValueError("shots must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.partitions < 1:
            raise ValueError("partitions must be at least 1")
        if self.postselect and self.n_ghz == 2:
            raise ValueError("EPR protocols have no flagged outcomes to post-select on")
        # Domain check for p against the number of noisy qubits.
        NoiseSpec(self.p, frozenset(range(self.n_ghz)), self.mode)
        qcore.as_state(self.psi)

    @property
    def n_ghz(self) -> int:
        return 3 if self.protocol.endswith("ghz") else 2

    @property
    def is_teleport(self) -> bool:
        return self.protocol.startswith("teleport")


@dataclass
class EmpiricalStats:
    shots: int
    seed: int
    counts: dict[str, int]
    accepted: int
    # Sum and sum of squares of the per-shot score over scored shots.
    score_sum: float
    score_sq_sum: float
    scored: int
    flip_counts: dict[int, int] = field(default_factory=dict)
    rng: str = RNG_ALGORITHM

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.shots

    @property
    def acceptance_stderr(self) -> float:
        a = self.acceptance_rate
        return math.sqrt(a * (1 - a) / self.shots)

    @property
    def success_estimate(self) -> float:
        """Mean per-shot fidelity (1/0 for dense coding) over the scored shots."""
        return self.score_sum / self.scored if self.scored else float("nan")

    @property
    def success_stderr(self) -> float:
        if self.scored < 2:
            return float("nan")
        mean = self.success_estimate
        var = max(self.score_sq_sum / self.scored - mean * mean, 0.0)
        return math.sqrt(var / self.scored)

    def frequency(self, label: str) -> float:
        return self.counts[label] / self.shots

    def merge(self, other: "EmpiricalStats") -> "EmpiricalStats":
        return EmpiricalStats(
            shots=self.shots + other.shots,
            seed=self.seed,
            counts={k: self.counts[k] + other.counts[k] for k in self.counts},
            accepted=self.accepted + other.accepted,
            score_sum=self.score_sum + other.score_sum,
            score_sq_sum=self.score_sq_sum + other.score_sq_sum,
            scored=self.scored + other.scored,
            flip_counts=dict(Counter(self.flip_counts) + Counter(other.flip_counts)),
            rng=self.rng,
        )


class _Model:
    """Pure-state tables for one protocol instance: per flip pattern, Born
    probabilities of every label and the score of each outcome."""

    def __init__(self, config: TrajectoryConfig):
        self.config = config
        k = config.n_ghz
        self.n_meas = k
        self.labels = all_labels(k)
        self.basis = np.array([ghz_state(mu) for mu in self.labels])
        if config.is_teleport:
            psi = np.asarray(config.psi, dtype=complex)
            self.target = psi
            self.ket = qcore.tensor(psi, ghz_state((0,) * k))
        else:
            a1, a2 = config.message
            encode = np.linalg.matrix_power(qcore.X, a2) @ np.linalg.matrix_power(qcore.Z, a1)
            self.ket = qcore.apply_left(ghz_state((0,) * k), encode, [0])
            self.target = None
        self._tables: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def allowed(self, idx: int) -> bool:
        mu = self.labels[idx]
        return len(set(mu[1:])) == 1

    def table(self, pattern: int) -> tuple[np.ndarray, np.ndarray]:
        """(Born probabilities, per-label score) for a flip bitmask."""
        if pattern not in self._tables:
            k = self.n_meas
            flipped = [q for q in range(k) if pattern >> (k - 1 - q) & 1]
            psi = self.ket
            for q in flipped:
                psi = qcore.apply_left(psi, qcore.X, [q])
            rest = psi.size // 2**k
            amps = self.basis.conj() @ psi.reshape(2**k, rest)
            probs = (np.abs(amps) ** 2).sum(axis=1)
            probs = np.clip(probs, 0, None)
            probs /= probs.sum()
            scores = np.zeros(len(self.labels))
            for i, mu in enumerate(self.labels):
                m, n = mu[0], mu[1]
                if self.config.is_teleport:
                    if probs[i] <= 0:
                        continue
                    bob = amps[i] / np.linalg.norm(amps[i])
                    corr = np.linalg.matrix_power(qcore.Z, m) @ np.linalg.matrix_power(qcore.X, n)
                    scores[i] = abs(np.vdot(self.target, corr @ bob)) ** 2
                else:
                    scores[i] = float((m, n) == tuple(self.config.message))
            self._tables[pattern] = (probs, scores)
        return self._tables[pattern]


def _sample_patterns(config: TrajectoryConfig, shots: int, rng: np.random.Generator) -> np.ndarray:
    k, p = config.n_ghz, config.p
    if config.mode is NoiseMode.EXACT:
        flips = rng.random((shots, k)) < p
        weights = 1 << np.arange(k - 1, -1, -1)
        return flips.astype(np.int64) @ weights
    # First-order: no flip with 1 - k p, otherwise exactly one of the k qubits.
    branch = rng.choice(k + 1, size=shots, p=[1 - k * p] + [p] * k)
    return np.where(branch == 0, 0, 1 << (k - branch))


def _run_partition(config: TrajectoryConfig, shots: int, index: int) -> EmpiricalStats:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed, spawn_key=(index,))))
    model = _Model(config)
    counts = np.zeros(len(model.labels), dtype=np.int64)
    accepted = scored = 0
    score_sum = score_sq = 0.0
    patterns = _sample_patterns(config, shots, rng)
    flip_counts = Counter(int(bin(int(pt)).count("1")) for pt in patterns)
    for pattern in np.unique(patterns):
        n_shots = int((patterns == pattern).sum())
        probs, scores = model.table(int(pattern))
        drawn = np.bincount(rng.choice(len(probs), size=n_shots, p=probs), minlength=len(probs))
        counts += drawn
        for i, c in enumerate(drawn):
            if not c:
                continue
            keep = model.allowed(i)
            accepted += c if keep else 0
            if keep or not config.postselect:
                scored += c
                score_sum += c * scores[i]
                score_sq += c * scores[i] ** 2
    if not config.postselect:
        accepted = shots
    return EmpiricalStats(
        shots=shots,
        seed=config.seed,
        counts={label_str(mu): int(c) for mu, c in zip(model.labels, counts)},
        accepted=int(accepted),
        score_sum=float(score_sum),
        score_sq_sum=float(score_sq),
        scored=int(scored),
        flip_counts={r: flip_counts.get(r, 0) for r in range(config.n_ghz + 1)},
    )


def run_trajectories(config: TrajectoryConfig, workers: int = 1) -> EmpiricalStats:
    """Sample ``config.shots`` trajectories and aggregate their outcomes."""
    k = config.partitions
    sizes = [config.shots // k + (1 if i < config.shots % k else 0) for i in range(k)]
    jobs = [(size, i) for i, size in enumerate(sizes) if size]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: _run_partition(config, *job), jobs))
    else:
        parts = [_run_partition(config, *job) for job in jobs]
    out = parts[0]
    for part in parts[1:]:
        out = out.merge(part)
    return out


def analytic_result(config: TrajectoryConfig) -> ProtocolResult:
    """Density-matrix prediction for the same protocol instance."""
    noise = NoiseSpec(config.p, frozenset(), config.mode)
    if config.protocol == "teleport-epr":
        return teleport_epr(TeleportInput(*config.psi, noise))
    if config.protocol == "teleport-ghz":
        return teleport_ghz(TeleportInput(*config.psi, noise), config.postselect)
    if config.protocol == "dense-epr":
        return dense_epr(config.message, noise)
    return dense_ghz(config.message, noise, config.postselect)


@dataclass(frozen=True)
class LabelComparison:
    label: str
    count: int
    frequency: float
    analytic: float
    stderr: float
    z: float

    @property
    def flagged(self) -> bool:
        return abs(self.z) > Z_FLAG


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[LabelComparison, ...]
    acceptance_z: float
    success_z: float

    @property
    def flagged(self) -> list[str]:
        return [r.label for r in self.rows if r.flagged]

    @property
    def max_abs_z(self) -> float:
        return max(abs(r.z) for r in self.rows)


def _z(observed: float, expected: float, stderr: float) -> float:
    if stderr > 0:
        return (observed - expected) / stderr
    return 0.0 if math.isclose(observed, expected, abs_tol=1e-12) else math.copysign(math.inf, observed - expected)


def compare_to_analytic(stats: EmpiricalStats, analytic: ProtocolResult) -> ComparisonReport:
    """Per-label binomial z-scores of the sampled counts against ``analytic``."""
    if set(stats.counts) != set(analytic.outcome_distribution):
        raise ValueError(
            f"label sets differ: {sorted(stats.counts)} vs {sorted(analytic.outcome_distribution)}"
        )
    rows = []
    for label in sorted(stats.counts):
        prob = min(max(analytic.outcome_distribution[label], 0.0), 1.0)
        se = math.sqrt(prob * (1 - prob) / stats.shots)
        freq = stats.frequency(label)
        rows.append(LabelComparison(label, stats.counts[label], freq, prob, se, _z(freq, prob, se)))
    acc_z = _z(stats.acceptance_rate, analytic.acceptance_rate,
               math.sqrt(analytic.acceptance_rate * (1 - analytic.acceptance_rate) / stats.shots))
    success_z = _z(stats.success_estimate, analytic.fidelity_to_target, stats.success_stderr) \
        if stats.scored > 1 else float("nan")
    return ComparisonReport(tuple(rows), acc_z, success_z)

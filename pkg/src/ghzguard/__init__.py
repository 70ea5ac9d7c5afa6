"""Density-matrix simulation of GHZ-based bit-flip detection in teleportation and dense coding."""

from .bases import bell_basis, bell_state, ghz_basis, ghz_state, measure
from .noise import NoiseMode, NoiseSpec, bitflip_exact, bitflip_first_order, phaseflip_exact
from .protocols import (
    EprTask,
    GhzTask,
    ProtocolResult,
    TeleportInput,
    dense_epr,
    dense_ghz,
    lift_epr_task,
    nghz_efficiency,
    optimal_n,
    run_lifted_with_noise,
    teleport_epr,
    teleport_ghz,
)

__version__ = "0.1.0"

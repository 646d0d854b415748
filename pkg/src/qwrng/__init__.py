"""Quantum-walk randomness: walk simulation, guessing-probability sweeps,
finite-size security rates, and an end-to-end extraction pipeline."""

from qwrng.walk import (
    BasisPoint,
    CoinOperator,
    Distribution,
    FlipOperator,
    MeasurementMode,
    WalkConfig,
    WalkState,
    apply_coin,
    apply_memory,
    apply_shift,
    distribution,
    evolve,
    fidelity_with,
    initial_state,
    mode_dimension,
)

__version__ = "0.1.0"

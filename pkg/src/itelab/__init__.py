"""Noisy imaginary-time evolution laboratory.

Simulates Trotterized imaginary-time evolution of the 1D transverse-field
Ising chain under Kraus noise, maps the noisy evolution to effective
doubled-space ladder Hamiltonians solved with DMRG, and extracts
phase-transition diagnostics (Binder crossings, data collapse, fidelities,
phase boundaries).
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    AMPLITUDE_DAMPING,
    BIT_FLIP,
    DEPOLARIZING,
    NOISE_KINDS,
    TWO_QUBIT_BIT_FLIP,
    ModelSpec,
    NoiseChannelSpec,
    NoiseRates,
    effective_rate,
    inverse_effective_rate,
    kraus_operators,
    uniform_channels,
)

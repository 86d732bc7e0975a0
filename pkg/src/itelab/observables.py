"""Doubled-space observable evaluation.

Mixed-state expectation values <O> = <<I| O(x)I |rho>> / <<I|rho>>,
magnetization moments via exact power MPOs, the Binder cumulant, and the
fidelity between noisy and noiseless steady states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dmrg import (
    MatrixProductOperator,
    MatrixProductState,
    UnphysicalStateError,
    identity_pair_state,
    matrix_element,
    overlap,
)

_TRACE_FLOOR = 1e-10
_IMAG_TOL = 1e-8


class DegenerateMomentError(ValueError):
    """<m^2> vanished; the Binder cumulant is undefined."""


def identity_vector_state(rungs: int) -> MatrixProductState:
    """MPS for |I>> on the snake-ordered ladder; <<I|rho>> = Tr rho.

    Up to normalization this is the maximally mixed state: each rung holds
    the two-site maximally entangled pair, rungs are unentangled, and the
    squared norm is 2^L.
    """
    return identity_pair_state(rungs)


def trace_overlap(state: MatrixProductState) -> complex:
    """<<I|state>> (the unnormalized trace of the encoded operator)."""
    return overlap(identity_vector_state(len(state) // 2), state)


def _real_part(value: complex, what: str) -> float:
    if abs(value.imag) > _IMAG_TOL * max(1.0, abs(value.real)):
        raise ValueError(f"{what} has a non-negligible imaginary part: {value}")
    return float(value.real)


def steady_expectation(state: MatrixProductState, observable: MatrixProductOperator) -> float:
    """<<I| O(x)I |rho>> / <<I|rho>> for a leg-1 observable MPO.

    The observable MPO must act as the identity on every leg-2 (odd snake)
    site; the helpers below construct such MPOs.
    """
    ident = identity_vector_state(len(state) // 2)
    denom = overlap(ident, state)
    if abs(denom) < _TRACE_FLOOR:
        raise UnphysicalStateError(f"<<I|rho>> = {denom:.3e}: state has no trace component")
    num = matrix_element(ident, observable, state)
    return _real_part(num / denom, "steady-state expectation")


def magnetization_power_mpo(rungs: int, power: int, staggered: bool = False) -> MatrixProductOperator:
    """Exact MPO for M^power with M = (1/L) sum_i s_i Z_i on leg 1.

    The automaton state counts how many of the ``power`` factors have been
    consumed, so the bond dimension is power+1 (3 for M^2, 5 for M^4).
    """
    n = power + 1
    z = np.array([[1.0, 0.0], [0.0, -1.0]])
    eye = np.eye(2)
    tensors = []
    for site in range(2 * rungs):
        w = np.zeros((n, n, 2, 2))
        if site % 2 == 1:  # leg-2 site: pass through
            for k in range(n):
                w[k, k] = eye
        else:
            i = site // 2
            a = ((-1.0) ** i if staggered else 1.0) / rungs
            for k in range(n):
                for j in range(n - k):
                    w[k, k + j] = math.comb(power - k, j) * a**j * (z if j % 2 else eye)
        tensors.append(w)
    tensors[0] = tensors[0][0][None, :, :, :]
    tensors[-1] = tensors[-1][:, power][:, None, :, :]
    return MatrixProductOperator(tensors, hermitian=True)


def magnetization_moments(state: MatrixProductState, staggered: bool = False) -> tuple[float, float]:
    """(<m^2>, <m^4>) of the (staggered) leg-1 magnetization."""
    rungs = len(state) // 2
    m2 = steady_expectation(state, magnetization_power_mpo(rungs, 2, staggered))
    m4 = steady_expectation(state, magnetization_power_mpo(rungs, 4, staggered))
    return m2, m4


def magnetization_first_moment(state: MatrixProductState, staggered: bool = False) -> float:
    return steady_expectation(state, magnetization_power_mpo(len(state) // 2, 1, staggered))


def binder_cumulant(m2: float, m4: float) -> float:
    """U4 = (3 - <m^4>/<m^2>^2) / 2."""
    if m2 <= 1e-12:
        raise DegenerateMomentError(f"<m^2> = {m2} too small for a Binder cumulant")
    return 0.5 * (3.0 - m4 / (m2 * m2))


def fidelity(noisy_state: MatrixProductState, noiseless_state: MatrixProductState) -> float:
    """F = <<rho_gs|rho_ss>> with both states normalized to <<I|.>> = 1.

    The noiseless reference must encode a pure projector (a lambda = 0
    ground state); then F = <psi|rho_ss|psi> in [0, 1].
    """
    t_ss = trace_overlap(noisy_state)
    t_gs = trace_overlap(noiseless_state)
    for name, t in (("noisy", t_ss), ("noiseless", t_gs)):
        if abs(t) < _TRACE_FLOOR:
            raise UnphysicalStateError(f"{name} state has <<I|rho>> = {t:.3e}")
    value = overlap(noiseless_state, noisy_state) / (np.conj(t_gs) * t_ss)
    f = _real_part(complex(value), "fidelity")
    if f < -1e-8 or f > 1.0 + 1e-8:
        raise ValueError(f"fidelity {f} outside [0, 1] beyond tolerance")
    return min(max(f, 0.0), 1.0)


@dataclass
class ObservableRecord:
    """One steady-state data point (row schema of the CSV output)."""

    g: float
    length: int
    m2: float
    m4: float
    binder_u4: float
    norm_overlap: float
    energy: complex
    truncation_error: float
    converged: bool
    lam: float | None = None
    lambda_z: float | None = None
    lambda_plus: float | None = None

    def __post_init__(self):
        slack = 1e-9
        if not -slack <= self.m2 <= 1.0 + slack:
            raise ValueError(f"m2 = {self.m2} outside [0, 1]")
        if not -slack <= self.m4 <= 1.0 + slack:
            raise ValueError(f"m4 = {self.m4} outside [0, 1]")
        if self.m4 < self.m2**2 - 1e-9:
            raise ValueError(f"m4 = {self.m4} < m2^2 = {self.m2**2}: negative variance")
        expected = binder_cumulant(self.m2, self.m4)
        if abs(expected - self.binder_u4) > 1e-12:
            raise ValueError(f"binder_u4 = {self.binder_u4} inconsistent with moments ({expected})")

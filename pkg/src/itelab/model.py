"""Domain types for the transverse-field Ising chain and its noise channels.

Holds the chain specification, the four supported Kraus channels, and the
exact conversions between the channel strength p and the effective error
rate per imaginary-time step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
# sigma_plus = (sigma_x + i sigma_y)/2 maps |down> to |up> under the
# convention sigma_z |up> = +|up>, |up> = (1, 0).  The amplitude-damping
# rung term depends on this choice.
SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.conj().T
ID2 = np.eye(2, dtype=complex)

OPERATORS = {
    "I": ID2,
    "X": SIGMA_X,
    "Y": SIGMA_Y,
    "Z": SIGMA_Z,
    "+": SIGMA_PLUS,
    "-": SIGMA_MINUS,
}

BIT_FLIP = "bit_flip"
DEPOLARIZING = "depolarizing"
TWO_QUBIT_BIT_FLIP = "two_qubit_bit_flip"
AMPLITUDE_DAMPING = "amplitude_damping"
NOISE_KINDS = (BIT_FLIP, DEPOLARIZING, TWO_QUBIT_BIT_FLIP, AMPLITUDE_DAMPING)

# Upper end of the strength range for which the per-step rate mu(p) stays
# finite.  Amplitude damping is a valid channel up to and including p = 1
# (full decay), but its rates diverge there, so the rate conversions apply
# a stricter bound.
_P_SUP = {
    BIT_FLIP: 0.5,
    DEPOLARIZING: 0.75,
    TWO_QUBIT_BIT_FLIP: 0.5,
    AMPLITUDE_DAMPING: 1.0,
}
_BOUNDARY_GUARD = 1e-12


class RangeError(ValueError):
    """Channel strength or rate outside the kind's valid range."""


@dataclass(frozen=True)
class ModelSpec:
    """Target Ising chain: H = -J sum_i Z_i Z_{i+1} + g sum_i X_i, open ends."""

    coupling_sign: int
    field: float
    length: int
    boundary: str = "open"

    def __post_init__(self):
        if self.coupling_sign not in (1, -1):
            raise ValueError(f"coupling_sign must be +1 or -1, got {self.coupling_sign}")
        if self.field < 0:
            raise ValueError(f"field must be >= 0, got {self.field}")
        if self.length < 2:
            raise ValueError(f"length must be >= 2, got {self.length}")
        if self.boundary != "open":
            raise ValueError(f"only open boundaries are supported, got {self.boundary!r}")


@dataclass(frozen=True)
class NoiseChannelSpec:
    """One Kraus channel acting on a single site (or on bond (support, support+1))."""

    kind: str
    strength: float
    support: int

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        sup = _P_SUP[self.kind]
        # Amplitude damping is a valid CPTP map at p = 1 even though its
        # effective rates diverge; the Pauli channels are rejected at their
        # respective divergence points.
        ok = 0.0 <= self.strength <= 1.0 if self.kind == AMPLITUDE_DAMPING else 0.0 <= self.strength < sup
        if not ok:
            raise RangeError(
                f"{self.kind} strength {self.strength} outside valid range [0, {sup})"
            )
        if self.support < 0:
            raise ValueError(f"support must be a site/bond index >= 0, got {self.support}")

    @property
    def num_sites(self) -> int:
        return 2 if self.kind == TWO_QUBIT_BIT_FLIP else 1


@dataclass(frozen=True)
class NoiseRates:
    """Effective error rates per Trotter step, lambda = mu(p) / dtau.

    Pauli kinds fill ``lam``; amplitude damping fills ``lambda_z`` and
    ``lambda_plus`` instead.
    """

    lam: float | None = None
    lambda_z: float | None = None
    lambda_plus: float | None = None

    def __post_init__(self):
        for name in ("lam", "lambda_z", "lambda_plus"):
            value = getattr(self, name)
            if value is None:
                continue
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"rate {name}={value} must be finite and >= 0")


@dataclass(frozen=True)
class LocalTerm:
    """A one- or two-site Hermitian piece h_m of the chain Hamiltonian."""

    sites: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        dim = 2 ** len(self.sites)
        if self.matrix.shape != (dim, dim):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match sites {self.sites}")
        if np.max(np.abs(self.matrix - self.matrix.conj().T)) > 1e-12:
            raise ValueError("local term matrix must be Hermitian")


@dataclass(frozen=True)
class OpTerm:
    """A product of single-site operators with a scalar coefficient.

    ``sites`` are strictly increasing; ``ops`` are labels from OPERATORS.
    Used as the coupling-list representation for MPO construction and for
    the doubled-space ladder Hamiltonians.
    """

    sites: tuple[int, ...]
    ops: tuple[str, ...]
    coeff: complex

    def __post_init__(self):
        if len(self.sites) != len(self.ops):
            raise ValueError("sites and ops must have equal length")
        if any(b <= a for a, b in zip(self.sites, self.sites[1:])):
            raise ValueError(f"sites must be strictly increasing, got {self.sites}")
        if any(op not in OPERATORS for op in self.ops):
            raise ValueError(f"unknown operator label in {self.ops}")
        if not (math.isfinite(self.coeff.real) and math.isfinite(self.coeff.imag)):
            raise ValueError("coefficient must be finite")

    def matrix(self) -> np.ndarray:
        """Kronecker product of the labelled operators, in site order."""
        out = np.array([[1.0 + 0.0j]])
        for op in self.ops:
            out = np.kron(out, OPERATORS[op])
        return out


def build_local_terms(spec: ModelSpec) -> list[LocalTerm]:
    """Decompose the chain Hamiltonian into local terms.

    Returns the L-1 bond terms -J Z_i Z_{i+1} followed by the L field
    terms +g X_i.  The bond terms are ordered even bonds first, then odd
    bonds, which is the Trotter substep order used throughout (the two
    groups are internally commuting, so only determinism is at stake).
    """
    j = float(spec.coupling_sign)
    zz = -j * np.kron(SIGMA_Z, SIGMA_Z)
    terms = [
        LocalTerm((i, i + 1), zz)
        for parity in (0, 1)
        for i in range(parity, spec.length - 1, 2)
    ]
    terms.extend(LocalTerm((i,), spec.field * SIGMA_X) for i in range(spec.length))
    return terms


def pauli_terms(spec: ModelSpec) -> list[OpTerm]:
    """The chain Hamiltonian as a coupling list (same content as build_local_terms)."""
    j = float(spec.coupling_sign)
    terms = [OpTerm((i, i + 1), ("Z", "Z"), -j) for i in range(spec.length - 1)]
    terms.extend(OpTerm((i,), ("X",), complex(spec.field)) for i in range(spec.length))
    return terms


def kraus_operators(channel: NoiseChannelSpec) -> list[np.ndarray]:
    """The Kraus set {K_k} of the channel; satisfies sum_k K_k^dag K_k = I."""
    p = channel.strength
    if channel.kind == BIT_FLIP:
        return [math.sqrt(1.0 - p) * ID2, math.sqrt(p) * SIGMA_X]
    if channel.kind == DEPOLARIZING:
        return [
            math.sqrt(1.0 - p) * ID2,
            math.sqrt(p / 3.0) * SIGMA_X,
            math.sqrt(p / 3.0) * SIGMA_Y,
            math.sqrt(p / 3.0) * SIGMA_Z,
        ]
    if channel.kind == TWO_QUBIT_BIT_FLIP:
        return [
            math.sqrt(1.0 - p) * np.kron(ID2, ID2),
            math.sqrt(p) * np.kron(SIGMA_X, SIGMA_X),
        ]
    # Amplitude damping: K0 is diagonal with entries (1, sqrt(1-p)), K1
    # transfers |down> -> |up> with amplitude sqrt(p).
    k0 = 0.5 * (1.0 + math.sqrt(1.0 - p)) * ID2 + 0.5 * (1.0 - math.sqrt(1.0 - p)) * SIGMA_Z
    k1 = math.sqrt(p) * SIGMA_PLUS
    return [k0, k1]


def _check_p(kind: str, p: float) -> None:
    sup = _P_SUP[kind]
    if not 0.0 <= p < sup - _BOUNDARY_GUARD:
        raise RangeError(f"{kind} strength {p} outside valid rate range [0, {sup})")


def mu_from_p(kind: str, p: float) -> float:
    """Per-step exponent mu(p) of the channel, mu(0) = 0.

    Closed forms: bit flip (and the two-qubit variant) use
    atanh[p/(1-p)], depolarizing uses -(3/4) log(1 - 4p/3); amplitude
    damping is handled by effective_rate directly since it carries two
    exponents.
    """
    _check_p(kind, p)
    if kind in (BIT_FLIP, TWO_QUBIT_BIT_FLIP):
        return math.atanh(p / (1.0 - p))
    if kind == DEPOLARIZING:
        return -0.75 * math.log1p(-4.0 * p / 3.0)
    raise ValueError(f"mu_from_p does not apply to {kind}")


def effective_rate(kind: str, p: float, dtau: float) -> NoiseRates:
    """Convert a channel strength p to effective rates lambda = mu/dtau."""
    if dtau <= 0:
        raise ValueError(f"dtau must be > 0, got {dtau}")
    _check_p(kind, p)
    if kind == AMPLITUDE_DAMPING:
        return NoiseRates(lambda_z=-math.log1p(-p) / dtau, lambda_plus=p / dtau)
    return NoiseRates(lam=mu_from_p(kind, p) / dtau)


def inverse_effective_rate(kind: str, lam: float, dtau: float) -> float:
    """Invert effective_rate: the p giving rate ``lam`` at step size ``dtau``.

    For amplitude damping ``lam`` is interpreted as lambda_plus (p = lam*dtau);
    lambda_z then follows from the same p.
    """
    if dtau <= 0:
        raise ValueError(f"dtau must be > 0, got {dtau}")
    if lam < 0:
        raise RangeError(f"rate must be >= 0, got {lam}")
    mu = lam * dtau
    if kind in (BIT_FLIP, TWO_QUBIT_BIT_FLIP):
        t = math.tanh(mu)
        p = t / (1.0 + t)
    elif kind == DEPOLARIZING:
        p = 0.75 * -math.expm1(-4.0 * mu / 3.0)
    elif kind == AMPLITUDE_DAMPING:
        p = mu
    else:
        raise ValueError(f"unknown noise kind {kind!r}")
    _check_p(kind, p)  # rejects rates too large for a valid strength
    return p


def uniform_channels(kind: str, p: float, length: int) -> list[NoiseChannelSpec]:
    """One channel per site (per bond for the two-qubit kind) across the chain."""
    n = length - 1 if kind == TWO_QUBIT_BIT_FLIP else length
    return [NoiseChannelSpec(kind, p, i) for i in range(n)]

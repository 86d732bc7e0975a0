"""Direct dense density-matrix simulation of the noisy Trotterized ITE.

Ground truth for the effective-Hamiltonian picture at small sizes: each
cycle applies the normalized weak-projection steps exp(-dtau h_m) for all
local terms (ZZ bonds, then X fields) followed by one noise layer, until
the steady state is reached.  Dense storage caps the practical size at
L ~ 11 sites.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ModelSpec, NoiseChannelSpec, LocalTerm, build_local_terms, kraus_operators

_EXACT_MAX_SITES = 11


class DegenerateStateError(RuntimeError):
    """ITE denominator underflowed: state orthogonal to the retained subspace."""


@dataclass
class DensityMatrix:
    """Dense 2^L x 2^L density operator."""

    matrix: np.ndarray
    length: int

    @property
    def dimension(self) -> int:
        return 2**self.length

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.matrix.copy(), self.length)

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])


@dataclass(frozen=True)
class EvolutionConfig:
    dtau: float
    steady_state_tol: float = 1e-10
    max_cycles: int = 100_000
    initial_state: str = "ferro_up"

    def __post_init__(self):
        if self.dtau <= 0:
            raise ValueError(f"dtau must be > 0, got {self.dtau}")
        if self.steady_state_tol <= 0:
            raise ValueError(f"steady_state_tol must be > 0, got {self.steady_state_tol}")
        if self.max_cycles < 1:
            raise ValueError(f"max_cycles must be >= 1, got {self.max_cycles}")
        if self.initial_state not in ("ferro_up", "antiferro", "x_polarized"):
            raise ValueError(f"unknown initial state {self.initial_state!r}")


@dataclass
class EvolutionResult:
    rho: DensityMatrix
    cycles_used: int
    converged: bool
    # optional per-cycle record: (cycle, m2, m4, u4, trace_distance)
    history: list[tuple[int, float, float, float, float]] = field(default_factory=list)


def initial_density_matrix(length: int, which: str) -> DensityMatrix:
    """Pure product initial states used by the steady-state runs."""
    if length > _EXACT_MAX_SITES:
        raise ValueError(f"dense simulation limited to L <= {_EXACT_MAX_SITES}, got {length}")
    dim = 2**length
    if which == "ferro_up":
        psi = np.zeros(dim, dtype=complex)
        psi[0] = 1.0
    elif which == "antiferro":
        # bits 0101... with site 0 the most significant bit; bit 0 = up
        idx = 0
        for i in range(length):
            if i % 2 == 1:
                idx |= 1 << (length - 1 - i)
        psi = np.zeros(dim, dtype=complex)
        psi[idx] = 1.0
    elif which == "x_polarized":
        psi = np.full(dim, 2.0 ** (-length / 2), dtype=complex)
    else:
        raise ValueError(f"unknown initial state {which!r}")
    return DensityMatrix(np.outer(psi, psi.conj()), length)


def maximally_mixed(length: int) -> DensityMatrix:
    dim = 2**length
    return DensityMatrix(np.eye(dim, dtype=complex) / dim, length)


def _apply_rows(mat: np.ndarray, op: np.ndarray, first: int, nsites: int, length: int) -> np.ndarray:
    """op acting on the ket (row) index of a 2^L x 2^L matrix, contiguous sites."""
    d = 2**nsites
    left = 2**first
    rest = mat.size // (left * d)
    t = mat.reshape(left, d, rest)
    t = np.tensordot(op, t, axes=([1], [1]))  # (d_out, left, rest)
    return t.transpose(1, 0, 2).reshape(mat.shape)


def _apply_cols(mat: np.ndarray, op: np.ndarray, first: int, nsites: int, length: int) -> np.ndarray:
    """op^dagger acting from the right: columns transform with conj(op)."""
    dim = mat.shape[0]
    d = 2**nsites
    left = 2**first
    right = dim // (left * d)
    t = mat.reshape(dim * left, d, right)
    t = np.tensordot(t, op.conj(), axes=([1], [1]))  # (dim*left, right, d_out)
    return t.transpose(0, 2, 1).reshape(mat.shape)


def _sandwich(mat: np.ndarray, op: np.ndarray, sites: tuple[int, ...], length: int) -> np.ndarray:
    """K rho K^dagger for a contiguous-site operator K."""
    first, nsites = sites[0], len(sites)
    if sites != tuple(range(first, first + nsites)):
        raise ValueError(f"operator support must be contiguous, got {sites}")
    return _apply_cols(_apply_rows(mat, op, first, nsites, length), op, first, nsites, length)


def _ite_gate(term: LocalTerm, dtau: float) -> np.ndarray:
    """exp(-dtau h_m) via eigendecomposition (h_m is Hermitian)."""
    w, v = np.linalg.eigh(term.matrix)
    return (v * np.exp(-dtau * w)) @ v.conj().T


def ite_trotter_step(rho: DensityMatrix, term: LocalTerm, dtau: float) -> DensityMatrix:
    """One normalized weak-projection substep.

    rho -> exp(-dtau h) rho exp(-dtau h) / Tr[exp(-2 dtau h) rho].
    """
    gate = _ite_gate(term, dtau)
    out = _sandwich(rho.matrix, gate, term.sites, rho.length)
    tr = np.trace(out).real
    if tr < 1e-300:
        raise DegenerateStateError(
            f"ITE normalization underflow on sites {term.sites} (trace {tr:.3e})"
        )
    return DensityMatrix(out / tr, rho.length)


def apply_channel(rho: DensityMatrix, channel: NoiseChannelSpec) -> DensityMatrix:
    """rho -> sum_k K_k rho K_k^dagger.  Trace-preserving by completeness."""
    sites = tuple(range(channel.support, channel.support + channel.num_sites))
    if sites[-1] >= rho.length:
        raise ValueError(f"channel support {sites} outside chain of length {rho.length}")
    out = np.zeros_like(rho.matrix)
    for k in kraus_operators(channel):
        out += _sandwich(rho.matrix, k, sites, rho.length)
    return DensityMatrix(out, rho.length)


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """Half the trace norm of the (Hermitian) difference."""
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(a.matrix - b.matrix))))


def magnetization_values(length: int, staggered: bool) -> np.ndarray:
    """Diagonal of M = (1/L) sum_i s_i Z_i over the computational basis."""
    idx = np.arange(2**length)
    m = np.zeros(2**length)
    for i in range(length):
        bit = (idx >> (length - 1 - i)) & 1
        sign = -1.0 if (staggered and i % 2 == 1) else 1.0
        m += sign * (1.0 - 2.0 * bit)
    return m / length


def dm_moments(rho: DensityMatrix, staggered: bool = False) -> tuple[float, float]:
    """(Tr[rho M^2], Tr[rho M^4]) for the (staggered) magnetization M.

    M is diagonal in the computational basis, so only diag(rho) enters.
    """
    diag = np.real(np.diagonal(rho.matrix))
    m = magnetization_values(rho.length, staggered)
    m2 = m * m
    return float(diag @ m2), float(diag @ (m2 * m2))


def _cycle(rho: DensityMatrix, gates, channels, dtau: float) -> DensityMatrix:
    mat = rho.matrix
    length = rho.length
    for gate, sites in gates:
        mat = _sandwich(mat, gate, sites, length)
        tr = np.trace(mat).real
        if tr < 1e-300:
            raise DegenerateStateError(f"ITE normalization underflow on sites {sites}")
        mat = mat / tr
    out = DensityMatrix(mat, length)
    for channel in channels:
        out = apply_channel(out, channel)
    return out


def evolve_to_steady_state(
    config: EvolutionConfig,
    spec: ModelSpec,
    channels: list[NoiseChannelSpec],
    record: bool = False,
    staggered: bool | None = None,
) -> EvolutionResult:
    """Iterate ITE cycles + noise layer until the trace distance between
    successive cycles drops below the tolerance.

    Substep order within a cycle: even ZZ bonds, odd ZZ bonds, all X
    fields (the groups commute internally), then one noise layer.
    """
    if spec.length > _EXACT_MAX_SITES:
        raise ValueError(f"dense simulation limited to L <= {_EXACT_MAX_SITES}, got {spec.length}")
    kinds = {c.kind for c in channels}
    if len(kinds) > 1:
        raise ValueError(f"one noise model per run, got kinds {sorted(kinds)}")
    if staggered is None:
        staggered = spec.coupling_sign == -1

    gates = [(_ite_gate(t, config.dtau), t.sites) for t in build_local_terms(spec)]
    rho = initial_density_matrix(spec.length, config.initial_state)
    history: list[tuple[int, float, float, float, float]] = []

    converged = False
    cycles = 0
    for cycle_idx in range(1, config.max_cycles + 1):
        new = _cycle(rho, gates, channels, config.dtau)
        dist = trace_distance(new, rho)
        if record:
            m2, m4 = dm_moments(new, staggered)
            u4 = 0.5 * (3.0 - m4 / m2**2) if m2 > 1e-12 else float("nan")
            history.append((cycle_idx, m2, m4, u4, dist))
        rho = new
        cycles = cycle_idx
        if dist < config.steady_state_tol:
            converged = True
            break

    return EvolutionResult(rho=rho, cycles_used=cycles, converged=converged, history=history)

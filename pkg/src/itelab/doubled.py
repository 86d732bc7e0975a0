"""Choi-Jamiolkowski vectorization and doubled-space effective Hamiltonians.

A density matrix rho maps to the vector |rho>> = sum_mn rho_mn |m>|n> in a
doubled Hilbert space where channels become ordinary operators
sum_k K_k (x) K_k*.  For each noise kind the noisy ITE steady state is, in
the small-step limit, the ground state of a 2L-site ladder Hamiltonian
H (x) I + I (x) H* + H_N built here as a coupling list.

Dense superoperator utilities are size-guarded: they exist as oracles for
small systems, not as a simulation path.

Ladder site convention (snake ordering): ladder site 2i is chain site i on
leg 1 (the ket copy), site 2i+1 is chain site i on leg 2 (the bra copy), so
rung terms are nearest-neighbour and leg terms span two rungs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import model
from .exact import DensityMatrix
from .model import (
    AMPLITUDE_DAMPING,
    BIT_FLIP,
    DEPOLARIZING,
    TWO_QUBIT_BIT_FLIP,
    LocalTerm,
    ModelSpec,
    NoiseChannelSpec,
    NoiseRates,
    OpTerm,
    OPERATORS,
    build_local_terms,
    kraus_operators,
    mu_from_p,
    uniform_channels,
)

_DENSE_SUPEROP_MAX_L = 6
_DENSE_LADDER_MAX_SITES = 12

WEAK_Z2 = "weak_Z2"
STRONG_Z2XZ2 = "strong_Z2xZ2"
WEAK_MIRROR = "weak_mirror"

# Conjugation by sigma_x: op -> (new label, sign).  sigma_+ and sigma_-
# exchange, which is why amplitude damping breaks the spin-flip symmetries.
_FLIP_MAP = {"I": ("I", 1.0), "X": ("X", 1.0), "Y": ("Y", -1.0), "Z": ("Z", -1.0), "+": ("-", 1.0), "-": ("+", 1.0)}
_DAGGER_MAP = {"I": "I", "X": "X", "Y": "Y", "Z": "Z", "+": "-", "-": "+"}
# Elementwise complex conjugation: Y -> -Y, all the others are real.
_CONJ_SIGN = {"I": 1.0, "X": 1.0, "Y": -1.0, "Z": 1.0, "+": 1.0, "-": 1.0}


@dataclass(frozen=True)
class VectorizedState:
    """|rho>> in the leg-major doubled basis |m> (x) |n|."""

    entries: np.ndarray
    length: int


def vectorize(rho: DensityMatrix) -> VectorizedState:
    """Row-major flattening: entry m*2^L + n holds rho_mn."""
    return VectorizedState(rho.matrix.reshape(-1).copy(), rho.length)


def devectorize(state: VectorizedState) -> DensityMatrix:
    dim = 2**state.length
    return DensityMatrix(state.entries.reshape(dim, dim).copy(), state.length)


def identity_vector(length: int) -> np.ndarray:
    """|I>> in leg-major ordering; <<I|rho>> = Tr rho."""
    return np.eye(2**length, dtype=complex).reshape(-1)


def snake_to_legs_permutation(length: int) -> np.ndarray:
    """perm[s] = leg-major basis index of snake basis state s.

    Snake bit order interleaves (ket_0, bra_0, ket_1, bra_1, ...) with bit 0
    most significant; leg-major order is (ket_0..ket_{L-1}, bra_0..bra_{L-1}).
    """
    s = np.arange(4**length)
    m = np.zeros_like(s)
    n = np.zeros_like(s)
    for i in range(length):
        ket = (s >> (2 * length - 1 - 2 * i)) & 1
        bra = (s >> (2 * length - 2 - 2 * i)) & 1
        m |= ket << (length - 1 - i)
        n |= bra << (length - 1 - i)
    return (m << length) | n


def legs_to_snake(vec: np.ndarray, length: int) -> np.ndarray:
    """Reorder a leg-major doubled-space vector into snake ordering."""
    return vec[snake_to_legs_permutation(length)]


def _embed(op: np.ndarray, first: int, nsites: int, length: int) -> np.ndarray:
    left = np.eye(2**first)
    right = np.eye(2 ** (length - first - nsites))
    return np.kron(np.kron(left, op), right)


def _guard_superop(length: int) -> None:
    if length > _DENSE_SUPEROP_MAX_L:
        raise ValueError(f"dense superoperators are guarded to L <= {_DENSE_SUPEROP_MAX_L}")


def channel_superoperator(channel: NoiseChannelSpec, length: int) -> np.ndarray:
    """Dense N~ = sum_k K_k (x) K_k* on the 4^L leg-major doubled space."""
    _guard_superop(length)
    dim = 4**length
    out = np.zeros((dim, dim), dtype=complex)
    for k in kraus_operators(channel):
        kf = _embed(k, channel.support, channel.num_sites, length)
        out += np.kron(kf, kf.conj())
    return out


def noise_layer_superoperator(channels: list[NoiseChannelSpec], length: int) -> np.ndarray:
    _guard_superop(length)
    out = np.eye(4**length, dtype=complex)
    for channel in channels:
        out = channel_superoperator(channel, length) @ out
    return out


def ite_superoperator(term: LocalTerm, dtau: float, length: int) -> np.ndarray:
    """Dense exp(-dtau h_m) (x) exp(-dtau h_m)* (normalization omitted)."""
    _guard_superop(length)
    w, v = np.linalg.eigh(term.matrix)
    gate = (v * np.exp(-dtau * w)) @ v.conj().T
    gf = _embed(gate, term.sites[0], len(term.sites), length)
    return np.kron(gf, gf.conj())


def ite_layer_superoperator(spec: ModelSpec, dtau: float) -> np.ndarray:
    """Product of all ITE substep superoperators in the canonical order."""
    _guard_superop(spec.length)
    out = np.eye(4**spec.length, dtype=complex)
    for term in build_local_terms(spec):
        out = ite_superoperator(term, dtau, spec.length) @ out
    return out


def _conjugate_coeff(term: OpTerm) -> complex:
    """Coefficient of the elementwise-conjugated operator product."""
    sign = 1.0
    for op in term.ops:
        sign *= _CONJ_SIGN[op]
    return np.conj(term.coeff) * sign


def _canonical(terms) -> dict[tuple, complex]:
    merged: dict[tuple, complex] = {}
    for t in terms:
        key = (t.sites, t.ops)
        merged[key] = merged.get(key, 0.0) + complex(t.coeff)
    return {k: v for k, v in merged.items() if abs(v) > 1e-14}


def _same_termset(a: dict, b: dict, tol: float = 1e-12) -> bool:
    keys = set(a) | set(b)
    return all(abs(a.get(k, 0.0) - b.get(k, 0.0)) <= tol for k in keys)


def _flip_terms(terms, site_filter) -> list[OpTerm]:
    """Conjugate every term by prod sigma_x over the selected sites."""
    out = []
    for t in terms:
        sign = 1.0
        ops = []
        for s, op in zip(t.sites, t.ops):
            if site_filter(s):
                new, sgn = _FLIP_MAP[op]
                ops.append(new)
                sign *= sgn
            else:
                ops.append(op)
        out.append(OpTerm(t.sites, tuple(ops), sign * t.coeff))
    return out


def _mirror_terms(terms, rungs: int) -> list[OpTerm]:
    """Reflect rung r -> rungs-1-r on both legs."""
    out = []
    for t in terms:
        mapped = sorted(
            ((2 * (rungs - 1 - s // 2) + s % 2, op) for s, op in zip(t.sites, t.ops)),
        )
        sites = tuple(s for s, _ in mapped)
        ops = tuple(op for _, op in mapped)
        out.append(OpTerm(sites, ops, t.coeff))
    return out


def _dagger_terms(terms) -> list[OpTerm]:
    out = []
    for t in terms:
        ops = tuple(_DAGGER_MAP[op] for op in t.ops)
        sign = 1.0
        for op in t.ops:
            sign *= _CONJ_SIGN[op]  # transpose sign: Pauli matrices are symmetric except Y
        out.append(OpTerm(t.sites, ops, sign * np.conj(t.coeff)))
    return out


def _compute_tags(terms, rungs: int) -> frozenset[str]:
    base = _canonical(terms)
    tags = set()
    if _same_termset(base, _canonical(_flip_terms(terms, lambda s: True))):
        tags.add(WEAK_Z2)
        leg1 = _canonical(_flip_terms(terms, lambda s: s % 2 == 0))
        leg2 = _canonical(_flip_terms(terms, lambda s: s % 2 == 1))
        if _same_termset(base, leg1) and _same_termset(base, leg2):
            tags.add(STRONG_Z2XZ2)
    if _same_termset(base, _canonical(_mirror_terms(terms, rungs))):
        tags.add(WEAK_MIRROR)
    return frozenset(tags)


@dataclass(frozen=True)
class LadderHamiltonian:
    """Coupling-list form of the 2L-site effective Hamiltonian (snake order)."""

    length: int  # number of rungs; the ladder has 2*length sites
    terms: tuple[OpTerm, ...]
    hermitian: bool
    symmetry_tags: frozenset[str]

    @property
    def num_sites(self) -> int:
        return 2 * self.length


def make_ladder(length: int, terms) -> LadderHamiltonian:
    """Assemble a ladder Hamiltonian, computing the Hermitian flag and tags."""
    terms = tuple(terms)
    for t in terms:
        if not all(0 <= s < 2 * length for s in t.sites):
            raise ValueError(f"term sites {t.sites} outside ladder with {2*length} sites")
    canon = _canonical(terms)
    hermitian = _same_termset(canon, _canonical(_dagger_terms(terms)))
    return LadderHamiltonian(length, terms, hermitian, _compute_tags(terms, length))


def _leg_terms(spec: ModelSpec) -> list[OpTerm]:
    """H (x) I + I (x) H*: leg 1 carries H, leg 2 the conjugated copy."""
    out = []
    for t in model.pauli_terms(spec):
        out.append(OpTerm(tuple(2 * s for s in t.sites), t.ops, t.coeff))
        out.append(OpTerm(tuple(2 * s + 1 for s in t.sites), t.ops, _conjugate_coeff(t)))
    return out


def _rung_terms(kind: str, rates: NoiseRates, length: int) -> list[OpTerm]:
    if kind == BIT_FLIP:
        lam = rates.lam
        return [OpTerm((2 * i, 2 * i + 1), ("X", "X"), -lam) for i in range(length)]
    if kind == DEPOLARIZING:
        # The +YY sign relative to XX/ZZ comes from the complex conjugation
        # on the bra leg.
        lam = rates.lam
        out = []
        for i in range(length):
            r = (2 * i, 2 * i + 1)
            out += [
                OpTerm(r, ("X", "X"), -lam / 3.0),
                OpTerm(r, ("Y", "Y"), +lam / 3.0),
                OpTerm(r, ("Z", "Z"), -lam / 3.0),
            ]
        return out
    if kind == TWO_QUBIT_BIT_FLIP:
        lam = rates.lam
        return [
            OpTerm((2 * i, 2 * i + 1, 2 * i + 2, 2 * i + 3), ("X", "X", "X", "X"), -lam)
            for i in range(length - 1)
        ]
    if kind == AMPLITUDE_DAMPING:
        lz, lp = rates.lambda_z, rates.lambda_plus
        out = []
        for i in range(length):
            out += [
                OpTerm((2 * i,), ("Z",), -lz / 4.0),
                OpTerm((2 * i + 1,), ("Z",), -lz / 4.0),
                OpTerm((2 * i, 2 * i + 1), ("+", "+"), -lp),
            ]
        return out
    raise ValueError(f"unknown noise kind {kind!r}")


def effective_hamiltonian(spec: ModelSpec, kind: str, rates: NoiseRates) -> LadderHamiltonian:
    """H (x) I + I (x) H* plus the noise-induced rung coupling for ``kind``."""
    if kind == AMPLITUDE_DAMPING:
        if rates.lambda_z is None or rates.lambda_plus is None:
            raise ValueError("amplitude damping needs lambda_z and lambda_plus")
    elif rates.lam is None:
        raise ValueError(f"{kind} needs the scalar rate lambda")
    terms = _leg_terms(spec) + _rung_terms(kind, rates, spec.length)
    return make_ladder(spec.length, terms)


def add_pinning(ladder: LadderHamiltonian, strength: float, pattern: str) -> LadderHamiltonian:
    """Symmetry-breaking -h Z field on the first and last rung (both legs).

    ``pattern`` is 'uniform_z' or 'staggered_z'; staggered signs follow
    (-1)^rung so the field selects one branch of the (staggered) order.
    """
    if pattern == "none" or strength == 0.0:
        return ladder
    if pattern not in ("uniform_z", "staggered_z"):
        raise ValueError(f"unknown pinning pattern {pattern!r}")
    rungs = [0, ladder.length - 1]
    extra = []
    for r in rungs:
        sign = (-1.0) ** r if pattern == "staggered_z" else 1.0
        extra.append(OpTerm((2 * r,), ("Z",), -strength * sign))
        extra.append(OpTerm((2 * r + 1,), ("Z",), -strength * sign))
    return make_ladder(ladder.length, ladder.terms + tuple(extra))


def dense_ladder_matrix(ladder: LadderHamiltonian, ordering: str = "snake") -> np.ndarray:
    """Dense matrix of the ladder Hamiltonian for small systems.

    ordering='snake' uses the interleaved MPO site order; 'legs' places all
    of leg 1 before leg 2 (matching the superoperator utilities).
    """
    n = ladder.num_sites
    if n > _DENSE_LADDER_MAX_SITES:
        raise ValueError(f"dense ladder matrix guarded to 2L <= {_DENSE_LADDER_MAX_SITES}")
    if ordering == "snake":
        pos = {s: s for s in range(n)}
    elif ordering == "legs":
        pos = {s: (s // 2 if s % 2 == 0 else ladder.length + s // 2) for s in range(n)}
    else:
        raise ValueError(f"unknown ordering {ordering!r}")
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for t in ladder.terms:
        by_pos = {pos[s]: OPERATORS[op] for s, op in zip(t.sites, t.ops)}
        mat = np.array([[1.0 + 0.0j]])
        for site in range(n):
            mat = np.kron(mat, by_pos.get(site, np.eye(2)))
        out += t.coeff * mat
    return out


def channel_log_norm(kind: str, p: float, length: int) -> float:
    """Scalar c with N~ = exp(-c) exp(-dtau H_N) (exact for the Pauli kinds,
    leading order in p for amplitude damping)."""
    if kind == AMPLITUDE_DAMPING:
        return -np.log1p(-p) * length / 2.0
    n = length - 1 if kind == TWO_QUBIT_BIT_FLIP else length
    return mu_from_p(kind, p) * n


def consistency_check(spec: ModelSpec, kind: str, p: float, dtau: float) -> float:
    """Max-norm residual between one noisy-ITE cycle and exp(-dtau H_eff).

    Scales as O(dtau^2) when dtau is halved at fixed lambda = mu/dtau; the
    channel normalization constant is divided out so only Trotter splitting
    error remains.
    """
    if spec.length > 4:
        raise ValueError("consistency_check is dense-only, L <= 4")
    channels = uniform_channels(kind, p, spec.length)
    cycle = noise_layer_superoperator(channels, spec.length) @ ite_layer_superoperator(spec, dtau)

    rates = model.effective_rate(kind, p, dtau)
    ladder = effective_hamiltonian(spec, kind, rates)
    h = dense_ladder_matrix(ladder, ordering="legs")
    if ladder.hermitian:
        w, v = np.linalg.eigh(h)
        target = (v * np.exp(-dtau * w)) @ v.conj().T
    else:
        target = scipy.linalg.expm(-dtau * h)
    target = np.exp(-channel_log_norm(kind, p, spec.length)) * target
    return float(np.max(np.abs(cycle - target)))


def ladder_to_text(ladder: LadderHamiltonian) -> str:
    """Human-readable coupling list, one term per line."""
    lines = [
        f"# ladder rungs={ladder.length} hermitian={str(ladder.hermitian).lower()} "
        f"tags={','.join(sorted(ladder.symmetry_tags)) or '-'}"
    ]
    for t in ladder.terms:
        sites = ",".join(str(s) for s in t.sites)
        ops = ",".join(t.ops)
        c = complex(t.coeff)
        lines.append(f"{sites} {ops} {c.real!r} {c.imag!r}")
    return "\n".join(lines) + "\n"


def ladder_from_text(text: str) -> LadderHamiltonian:
    length = None
    terms = []
    for line in text.strip().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line.split():
                if tok.startswith("rungs="):
                    length = int(tok.split("=", 1)[1])
            continue
        sites_s, ops_s, re_s, im_s = line.split()
        sites = tuple(int(x) for x in sites_s.split(","))
        ops = tuple(ops_s.split(","))
        terms.append(OpTerm(sites, ops, complex(float(re_s), float(im_s))))
    if length is None:
        raise ValueError("missing header line with rungs=...")
    return make_ladder(length, terms)

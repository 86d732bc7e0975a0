"""Two-site DMRG for open spin-1/2 chains with short-range MPO Hamiltonians.

Solves the 2L-site ladder Hamiltonians in matrix-product form, including
the non-Hermitian PT-symmetric amplitude-damping case.  MPO tensors are
kept real whenever the Hamiltonian allows it (sigma_y pairs are rewritten
through the real matrix i*sigma_y), which roughly quarters the contraction
cost.  Local eigenproblems use a warm-started Lanczos iteration for
symmetric problems and an Arnoldi iteration (smallest real part, right
eigenvector) for general ones, with a dense fallback for small blocks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .doubled import LadderHamiltonian

_DENSE_BLOCK_CUTOFF = 64
_KRYLOV_SYM = 20
_RESTARTS_SYM = 3
_KRYLOV_GEN = 30
_RESTARTS_GEN = 6
_PT_TOL = 1e-8

# Real single-site matrices used in MPO tensors; Y enters as iY with the
# phase folded into the term coefficient.
_REAL_OPS = {
    "I": np.eye(2),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "iY": np.array([[0.0, 1.0], [-1.0, 0.0]]),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]]),
    "+": np.array([[0.0, 1.0], [0.0, 0.0]]),
    "-": np.array([[0.0, 0.0], [1.0, 0.0]]),
}


class UnsupportedRangeError(ValueError):
    """MPO terms may span at most two rungs (four consecutive sites)."""


class SolverError(RuntimeError):
    """Local Krylov eigensolver failed irrecoverably."""


class PTBrokenError(RuntimeError):
    """Non-Hermitian ground energy acquired a significant imaginary part."""


class UnphysicalStateError(RuntimeError):
    """Converged doubled-space state has (near-)zero overlap with <<I|."""


class MatrixProductState:
    """Open-chain MPS; tensor i has shape (D_left, 2, D_right)."""

    def __init__(self, tensors, center: int = 0):
        self.tensors = list(tensors)
        self.center = center

    def __len__(self) -> int:
        return len(self.tensors)

    @property
    def dtype(self):
        return self.tensors[0].dtype

    def copy(self) -> "MatrixProductState":
        return MatrixProductState([t.copy() for t in self.tensors], self.center)

    def astype(self, dtype) -> "MatrixProductState":
        return MatrixProductState([t.astype(dtype) for t in self.tensors], self.center)

    def bond_dimensions(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    def max_bond(self) -> int:
        return max(self.bond_dimensions(), default=1)

    def norm(self) -> float:
        e = np.ones((1, 1), dtype=self.dtype)
        for m in self.tensors:
            t = np.tensordot(e, m, axes=([1], [0]))
            e = np.tensordot(m.conj(), t, axes=([0, 1], [0, 1]))
        return float(np.sqrt(abs(e[0, 0])))

    def canonicalize_right(self) -> None:
        """Bring the state to right-canonical form (center 0, unit norm)."""
        for i in range(len(self.tensors) - 1, 0, -1):
            dl, d, dr = self.tensors[i].shape
            mat = self.tensors[i].reshape(dl, d * dr)
            q, r = np.linalg.qr(mat.conj().T)
            self.tensors[i] = q.conj().T.reshape(-1, d, dr)
            self.tensors[i - 1] = np.tensordot(self.tensors[i - 1], r.conj().T, axes=([2], [0]))
        nrm = np.linalg.norm(self.tensors[0])
        if nrm == 0:
            raise ValueError("cannot canonicalize a zero state")
        self.tensors[0] = self.tensors[0] / nrm
        self.center = 0

    def canonical_defect(self) -> float:
        """Largest deviation from the canonical conditions (test helper)."""
        worst = 0.0
        for i, m in enumerate(self.tensors):
            if i < self.center:
                g = np.tensordot(m.conj(), m, axes=([0, 1], [0, 1]))
            elif i > self.center:
                g = np.tensordot(m, m.conj(), axes=([1, 2], [1, 2]))
            else:
                continue
            worst = max(worst, float(np.max(np.abs(g - np.eye(g.shape[0])))))
        return worst

    def to_dense(self) -> np.ndarray:
        if len(self.tensors) > 16:
            raise ValueError("dense conversion limited to 16 sites")
        acc = np.ones((1, 1), dtype=self.dtype)
        for m in self.tensors:
            acc = np.tensordot(acc, m, axes=([1], [0]))
            acc = acc.reshape(-1, m.shape[2])
        return acc[:, 0]


class MatrixProductOperator:
    """MPO; tensor i has shape (w_left, w_right, d_out, d_in)."""

    def __init__(self, tensors, hermitian: bool):
        self.tensors = list(tensors)
        self.hermitian = hermitian

    def __len__(self) -> int:
        return len(self.tensors)

    @property
    def dtype(self):
        return self.tensors[0].dtype

    def bond_dimensions(self) -> list[int]:
        return [t.shape[1] for t in self.tensors[:-1]]

    def max_bond(self) -> int:
        return max(self.bond_dimensions(), default=1)

    def to_dense(self) -> np.ndarray:
        if len(self.tensors) > 12:
            raise ValueError("dense conversion limited to 12 sites")
        acc = self.tensors[0][0]  # (w, d, d)
        for w in self.tensors[1:]:
            acc = np.einsum("wab,wvcd->vacbd", acc, w)
            acc = acc.reshape(acc.shape[0], acc.shape[1] * 2, -1)
        return acc[0]


def basis_product_state(bits, dtype=np.float64) -> MatrixProductState:
    """Product state |b_0 b_1 ...> with bit 0 = up."""
    tensors = []
    for b in bits:
        t = np.zeros((1, 2, 1), dtype=dtype)
        t[0, int(b), 0] = 1.0
        tensors.append(t)
    return MatrixProductState(tensors, center=0)


def ladder_product_state(rungs: int, staggered: bool = False, dtype=np.float64) -> MatrixProductState:
    """Vectorized |s><s| for the (staggered) fully ordered product state."""
    bits = []
    for r in range(rungs):
        b = r % 2 if staggered else 0
        bits += [b, b]  # ket and bra copies agree
    return basis_product_state(bits, dtype)


def identity_pair_state(rungs: int, dtype=np.float64) -> MatrixProductState:
    """MPS for |I>> = sum_m |m>|m> in snake ordering (bond 2 inside rungs)."""
    a = np.zeros((1, 2, 2), dtype=dtype)
    a[0, 0, 0] = a[0, 1, 1] = 1.0
    b = np.zeros((2, 2, 1), dtype=dtype)
    b[0, 0, 0] = b[1, 1, 0] = 1.0
    return MatrixProductState([a.copy() if i % 2 == 0 else b.copy() for i in range(2 * rungs)])


@dataclass(frozen=True)
class DmrgOptions:
    chi_max: int = 128
    svd_cutoff: float = 1e-10
    max_sweeps: int = 50
    energy_tol: float = 1e-9
    pinning_strength: float = 1e-3
    pinning_pattern: str = "none"  # uniform_z | staggered_z | none
    solver: str = "symmetric_krylov"  # symmetric_krylov | general_krylov

    def __post_init__(self):
        if self.chi_max < 2:
            raise ValueError(f"chi_max must be >= 2, got {self.chi_max}")
        if self.energy_tol <= 0:
            raise ValueError(f"energy_tol must be > 0, got {self.energy_tol}")
        if self.svd_cutoff < 0:
            raise ValueError(f"svd_cutoff must be >= 0, got {self.svd_cutoff}")
        if self.max_sweeps < 1:
            raise ValueError(f"max_sweeps must be >= 1, got {self.max_sweeps}")
        if self.pinning_pattern not in ("uniform_z", "staggered_z", "none"):
            raise ValueError(f"unknown pinning pattern {self.pinning_pattern!r}")
        if self.solver not in ("symmetric_krylov", "general_krylov"):
            raise ValueError(f"unknown solver {self.solver!r}")


@dataclass
class DmrgResult:
    energy: complex
    state: MatrixProductState
    max_truncation_error: float
    sweeps_used: int
    converged: bool


# ---------------------------------------------------------------------------
# MPO construction: finite-state machine over the coupling list.  Pending
# states are keyed by the remaining (site, op) suffix of a term, so terms
# sharing a suffix share machine states.
# ---------------------------------------------------------------------------

def _realify_terms(terms) -> tuple[list[tuple[tuple[int, ...], tuple[str, ...], complex]], bool]:
    """Rewrite Y -> iY, folding phases into coefficients; report realness."""
    out = []
    real = True
    for t in terms:
        coeff = complex(t.coeff)
        if coeff == 0.0:
            continue
        ops = []
        for op in t.ops:
            if op == "Y":
                ops.append("iY")
                coeff *= -1.0j
            else:
                ops.append(op)
        if abs(coeff.imag) > 1e-14 * max(1.0, abs(coeff)):
            real = False
        out.append((t.sites, tuple(ops), coeff))
    return out, real


def mpo_from_terms(num_sites: int, terms, hermitian: bool | None = None) -> MatrixProductOperator:
    """Exact MPO for a list of OpTerm couplings on ``num_sites`` sites."""
    if num_sites < 2:
        raise ValueError("need at least two sites")
    prepared, real = _realify_terms(terms)
    for sites, _, _ in prepared:
        if sites[-1] >= num_sites:
            raise ValueError(f"term sites {sites} outside chain of {num_sites} sites")
        if sites[-1] - sites[0] > 3:
            raise UnsupportedRangeError(
                f"term on sites {sites} spans more than two rungs; not representable"
            )
    dtype = np.float64 if real else np.complex128

    def remaining(pairs, bond):
        return tuple((s, op) for s, op in pairs if s >= bond)

    # enumerate machine states per bond
    pend = [set() for _ in range(num_sites + 1)]
    for sites, ops, _ in prepared:
        pairs = tuple(zip(sites, ops))
        for b in range(sites[0] + 1, sites[-1] + 1):
            pend[b].add(remaining(pairs, b))
    bonds: list[dict] = []
    for b in range(num_sites + 1):
        states: dict = {}
        if b < num_sites:
            states["ready"] = len(states)
        for key in sorted(pend[b]):
            states[key] = len(states)
        if b > 0:
            states["done"] = len(states)
        bonds.append(states)

    mats = {k: v.astype(dtype) for k, v in _REAL_OPS.items()}
    tensors = [
        np.zeros((len(bonds[s]), len(bonds[s + 1]), 2, 2), dtype=dtype)
        for s in range(num_sites)
    ]
    for s in range(num_sites):
        left, right = bonds[s], bonds[s + 1]
        if "ready" in left and "ready" in right:
            tensors[s][left["ready"], right["ready"]] += mats["I"]
        if "done" in left and "done" in right:
            tensors[s][left["done"], right["done"]] += mats["I"]
        # pending-state propagation (set once per state, shared by terms)
        for key in left:
            if key in ("ready", "done"):
                continue
            site0, op0 = key[0]
            if site0 > s:
                tensors[s][left[key], right[key]] = mats["I"]
            else:
                rest = key[1:]
                target = right["done"] if not rest else right[rest]
                tensors[s][left[key], target] = mats[op0]
    for sites, ops, coeff in prepared:
        s = sites[0]
        left, right = bonds[s], bonds[s + 1]
        pairs = tuple(zip(sites, ops))
        rest = remaining(pairs, s + 1)
        target = right["done"] if not rest else right[rest]
        weight = coeff.real if real else coeff
        tensors[s][left["ready"], target] += weight * mats[ops[0]]

    # restrict boundaries to the ready row / done column
    tensors[0] = tensors[0][bonds[0]["ready"]][None, :, :, :]
    tensors[-1] = tensors[-1][:, bonds[num_sites]["done"]][:, None, :, :]
    if hermitian is None:
        hermitian = _terms_hermitian(terms)
    return MatrixProductOperator(tensors, hermitian)


def _terms_hermitian(terms) -> bool:
    from .doubled import _canonical, _dagger_terms, _same_termset

    terms = list(terms)
    return _same_termset(_canonical(terms), _canonical(_dagger_terms(terms)))


def build_mpo(hamiltonian: LadderHamiltonian) -> MatrixProductOperator:
    """Exact MPO of a ladder Hamiltonian on its 2L snake-ordered sites."""
    return mpo_from_terms(hamiltonian.num_sites, hamiltonian.terms, hamiltonian.hermitian)


def single_chain_mpo(terms, length: int) -> MatrixProductOperator:
    """MPO for an ordinary L-site chain coupling list."""
    return mpo_from_terms(length, terms, None)


# ---------------------------------------------------------------------------
# Contractions
# ---------------------------------------------------------------------------

def _contract_left(env, mket, w, mbra=None):
    mbra = mket if mbra is None else mbra
    t = np.tensordot(env, mket, axes=([2], [0]))       # (Db, wl, s_in, Dk')
    t = np.tensordot(t, w, axes=([1, 2], [0, 3]))      # (Db, Dk', wr, s_out)
    t = np.tensordot(mbra.conj(), t, axes=([0, 1], [0, 3]))  # (Db', Dk', wr)
    return t.transpose(0, 2, 1)

def _contract_right(env, mket, w, mbra=None):
    mbra = mket if mbra is None else mbra
    t = np.tensordot(mket, env, axes=([2], [2]))       # (Dk, s_in, Db, wr)
    t = np.tensordot(t, w, axes=([1, 3], [3, 1]))      # (Dk, Db, wl, s_out)
    t = np.tensordot(mbra.conj(), t, axes=([1, 2], [3, 1]))  # (Db', Dk, wl)
    return t.transpose(0, 2, 1)


def _apply_two_site(le, w1, w2, re, theta):
    t = np.tensordot(le, theta, axes=([2], [0]))       # (Db, wl, s1, s2, Dr)
    t = np.tensordot(t, w1, axes=([1, 2], [0, 3]))     # (Db, s2, Dr, w, s1')
    t = np.tensordot(t, w2, axes=([3, 1], [0, 3]))     # (Db, Dr, s1', wr, s2')
    t = np.tensordot(t, re, axes=([1, 3], [2, 1]))     # (Db, s1', s2', Db2)
    return t


def _dense_two_site(le, w1, w2, re):
    t1 = np.tensordot(le, w1, axes=([1], [0]))         # (Db, Dk, w, s1o, s1i)
    t2 = np.tensordot(w2, re, axes=([1], [1]))         # (w, s2o, s2i, Db2, Dk2)
    h = np.tensordot(t1, t2, axes=([2], [0]))          # (Db, Dk, s1o, s1i, s2o, s2i, Db2, Dk2)
    h = h.transpose(0, 2, 4, 6, 1, 3, 5, 7)
    n = h.shape[0] * h.shape[1] * h.shape[2] * h.shape[3]
    return h.reshape(n, n)


def expectation(state: MatrixProductState, mpo: MatrixProductOperator) -> complex:
    """<state|H|state> by exact contraction (state assumed as stored)."""
    return matrix_element(state, mpo, state)


def matrix_element(bra: MatrixProductState, mpo: MatrixProductOperator, ket: MatrixProductState) -> complex:
    if not (len(bra) == len(mpo) == len(ket)):
        raise ValueError(f"length mismatch: bra {len(bra)}, mpo {len(mpo)}, ket {len(ket)}")
    env = np.ones((1, 1, 1), dtype=np.result_type(bra.dtype, mpo.dtype, ket.dtype))
    for mb, w, mk in zip(bra.tensors, mpo.tensors, ket.tensors):
        env = _contract_left(env, mk, w, mb)
    return complex(env[0, 0, 0])


def overlap(a: MatrixProductState, b: MatrixProductState) -> complex:
    """<a|b>; conjugates the left argument."""
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    env = np.ones((1, 1), dtype=np.result_type(a.dtype, b.dtype))
    for ma, mb in zip(a.tensors, b.tensors):
        t = np.tensordot(env, mb, axes=([1], [0]))
        env = np.tensordot(ma.conj(), t, axes=([0, 1], [0, 1]))
    return complex(env[0, 0])


# ---------------------------------------------------------------------------
# Local eigensolvers
# ---------------------------------------------------------------------------

def _lanczos_run(matvec, v0, krylov, tol):
    v = v0 / np.linalg.norm(v0)
    basis = [v]
    alphas: list[float] = []
    betas: list[float] = []
    w = matvec(v)
    alphas.append(float(np.vdot(v, w).real))
    w = w - alphas[0] * v
    val, y = alphas[0], np.array([1.0])
    for _ in range(krylov - 1):
        for q in basis:  # full reorthogonalization
            w -= np.vdot(q, w) * q
        beta = float(np.linalg.norm(w))
        if beta < 1e-14 * max(1.0, abs(val)):
            vec = sum(c * q for c, q in zip(y, basis))
            return val, vec / np.linalg.norm(vec), True
        v = w / beta
        basis.append(v)
        betas.append(beta)
        w = matvec(v) - beta * basis[-2]
        alphas.append(float(np.vdot(v, w).real))
        w = w - alphas[-1] * v
        evals, evecs = scipy.linalg.eigh_tridiagonal(alphas, betas)
        val, y = evals[0], evecs[:, 0]
        resid = float(np.linalg.norm(w)) * abs(y[-1])
        if resid <= tol * max(1.0, abs(val)):
            vec = sum(c * q for c, q in zip(y, basis))
            return val, vec / np.linalg.norm(vec), True
    vec = sum(c * q for c, q in zip(y, basis))
    return val, vec / np.linalg.norm(vec), False


def lanczos_ground(matvec, v0, krylov=_KRYLOV_SYM, tol=1e-10, restarts=_RESTARTS_SYM):
    """Lowest eigenpair of a symmetric operator; Ritz value never exceeds
    the Rayleigh quotient of the start vector."""
    vec = v0
    val, ok = 0.0, False
    for _ in range(restarts + 1):
        val, vec, ok = _lanczos_run(matvec, vec, krylov, tol)
        if ok:
            break
    return val, vec, ok


def _select_min_real(evals):
    """Index of the smallest-real-part eigenvalue, preferring real ones."""
    real_mask = np.abs(evals.imag) <= 1e-9 * np.maximum(1.0, np.abs(evals.real))
    if real_mask.any():
        cand = np.where(real_mask)[0]
        return cand[np.argmin(evals.real[cand])], True
    return int(np.argmin(evals.real)), False


def _realify_vector(vec):
    """Remove the global phase of an (almost) real eigenvector."""
    if not np.iscomplexobj(vec):
        return vec
    k = int(np.argmax(np.abs(vec)))
    phase = vec[k] / abs(vec[k])
    vec = vec * np.conj(phase)
    return vec.real if np.max(np.abs(vec.imag)) < 1e-6 * np.linalg.norm(vec) else vec


def arnoldi_min_real(matvec, v0, krylov=_KRYLOV_GEN, tol=1e-10, restarts=_RESTARTS_GEN):
    """Eigenpair with smallest real part of a general real operator.

    Returns (value, right eigenvector, converged).  The value may carry an
    imaginary part; the caller decides whether that flags a PT-broken point.
    """
    start = v0 / np.linalg.norm(v0)
    best = (None, start, False)
    for _ in range(restarts + 1):
        basis = [start]
        hess = np.zeros((krylov + 1, krylov), dtype=start.dtype)
        theta, y, resid = None, None, np.inf
        j_used = 0
        for j in range(krylov):
            w = matvec(basis[j])
            for i in range(j + 1):
                c = np.vdot(basis[i], w)
                hess[i, j] += c
                w -= c * basis[i]
            for i in range(j + 1):  # second pass for robustness
                c = np.vdot(basis[i], w)
                hess[i, j] += c
                w -= c * basis[i]
            hnext = float(np.linalg.norm(w))
            hess[j + 1, j] = hnext
            j_used = j + 1
            evals, evecs = scipy.linalg.eig(hess[: j + 1, : j + 1])
            idx, _ = _select_min_real(evals)
            theta, y = evals[idx], evecs[:, idx]
            resid = hnext * abs(y[-1])
            if resid <= tol * max(1.0, abs(theta)) or hnext < 1e-14 * max(1.0, abs(theta)):
                vec = sum(c * q for c, q in zip(y, basis))
                vec = _realify_vector(vec / np.linalg.norm(vec))
                return theta, vec, True
            basis.append(w / hnext)
        vec = sum(c * q for c, q in zip(y[:j_used], basis[:j_used]))
        vec = _realify_vector(vec / np.linalg.norm(vec))
        best = (theta, vec, False)
        nxt = vec.real if np.iscomplexobj(vec) else vec
        nrm = np.linalg.norm(nxt)
        if nrm < 1e-12:
            break
        start = (nxt / nrm).astype(v0.dtype)
    return best


def _solve_local(le, w1, w2, re, guess, hermitian, tol):
    """Lowest (smallest real part) eigenpair of the two-site problem."""
    shape = guess.shape
    n = guess.size
    if n <= _DENSE_BLOCK_CUTOFF:
        h = _dense_two_site(le, w1, w2, re)
        if hermitian:
            evals, evecs = np.linalg.eigh(h)
            return float(evals[0]), evecs[:, 0].reshape(shape)
        evals, evecs = scipy.linalg.eig(h)
        idx, _ = _select_min_real(evals)
        vec = _realify_vector(evecs[:, idx])
        return complex(evals[idx]), (vec / np.linalg.norm(vec)).reshape(shape)

    def mv(vec):
        return _apply_two_site(le, w1, w2, re, vec.reshape(shape)).reshape(-1)

    flat = guess.reshape(-1)
    if hermitian:
        val, vec, _ = lanczos_ground(mv, flat, tol=tol)
        return float(val), vec.reshape(shape)
    val, vec, _ = arnoldi_min_real(mv, flat, tol=tol)
    return complex(val), vec.reshape(shape)


def _truncate(theta, chi_max, cutoff):
    """SVD split of the two-site tensor; returns (U, s, Vt, rel. error)."""
    dl, d1, d2, dr = theta.shape
    mat = theta.reshape(dl * d1, d2 * dr)
    try:
        u, s, vt = np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError:  # gesdd occasionally fails to converge
        u, s, vt = scipy.linalg.svd(mat, full_matrices=False, lapack_driver="gesvd")
    s2 = s * s
    total = float(s2.sum())
    discarded = np.concatenate([np.cumsum(s2[::-1])[::-1], [0.0]])
    keep = int(np.searchsorted(-discarded, -cutoff * total))
    keep = max(1, min(keep, chi_max, len(s)))
    err = float(discarded[keep] / total) if total > 0 else 0.0
    s_kept = s[:keep]
    s_kept = s_kept / np.linalg.norm(s_kept)
    return u[:, :keep], s_kept, vt[:keep], err


def ground_state(
    mpo: MatrixProductOperator,
    options: DmrgOptions,
    initial: MatrixProductState | None = None,
    ladder_trace_fix: bool = False,
) -> DmrgResult:
    """Two-site DMRG ground-state search.

    Sweeps left-to-right and back, solving each two-site block with an
    iterative Krylov eigensolver (lowest eigenvalue for symmetric problems,
    smallest real part with the right eigenvector for general ones), until
    the per-sweep energy change drops below ``energy_tol``.

    With ``ladder_trace_fix`` the converged doubled-space state has its
    global sign/phase fixed so that <<I|rho>> is real and positive; a
    near-zero trace overlap raises UnphysicalStateError.
    """
    n = len(mpo)
    hermitian = mpo.hermitian
    if hermitian and options.solver != "symmetric_krylov":
        raise ValueError("symmetric_krylov is required for Hermitian problems")
    if not hermitian and options.solver != "general_krylov":
        raise ValueError("general_krylov is required for non-Hermitian problems")

    if initial is None:
        state = basis_product_state([0] * n, dtype=mpo.dtype)
    else:
        state = initial.copy()
        if np.result_type(state.dtype, mpo.dtype) != state.dtype:
            state = state.astype(np.result_type(state.dtype, mpo.dtype))
    if len(state) != n:
        raise ValueError(f"initial state has {len(state)} sites, MPO has {n}")
    state.canonicalize_right()

    w = mpo.tensors
    m = state.tensors
    one = np.ones((1, 1, 1), dtype=np.result_type(state.dtype, mpo.dtype))
    lenv: list = [None] * (n + 1)
    renv: list = [None] * (n + 1)
    lenv[0] = one
    renv[n] = one
    for i in range(n - 1, 1, -1):
        renv[i] = _contract_right(renv[i + 1], m[i], w[i])

    solver_tol = max(1e-12, 0.02 * options.energy_tol)
    energy = None
    energy_prev = None
    sweep_trunc = 0.0
    converged = False
    sweeps = 0
    for sweep in range(1, options.max_sweeps + 1):
        sweeps = sweep
        sweep_trunc = 0.0
        for i in range(n - 1):  # left to right
            theta = np.tensordot(m[i], m[i + 1], axes=([2], [0]))
            energy, theta = _solve_local(
                lenv[i], w[i], w[i + 1], renv[i + 2], theta, hermitian, solver_tol
            )
            u, s, vt, err = _truncate(theta, options.chi_max, options.svd_cutoff)
            sweep_trunc = max(sweep_trunc, err)
            dl = m[i].shape[0]
            dr = m[i + 1].shape[2]
            m[i] = u.reshape(dl, 2, -1)
            m[i + 1] = (s[:, None] * vt).reshape(-1, 2, dr)
            lenv[i + 1] = _contract_left(lenv[i], m[i], w[i])
        for i in range(n - 2, -1, -1):  # right to left
            theta = np.tensordot(m[i], m[i + 1], axes=([2], [0]))
            energy, theta = _solve_local(
                lenv[i], w[i], w[i + 1], renv[i + 2], theta, hermitian, solver_tol
            )
            u, s, vt, err = _truncate(theta, options.chi_max, options.svd_cutoff)
            sweep_trunc = max(sweep_trunc, err)
            dl = m[i].shape[0]
            dr = m[i + 1].shape[2]
            m[i + 1] = vt.reshape(-1, 2, dr)
            m[i] = (u * s).reshape(dl, 2, -1)
            renv[i + 1] = _contract_right(renv[i + 2], m[i + 1], w[i + 1])
        state.center = 0
        if energy_prev is not None and abs(energy - energy_prev) < options.energy_tol:
            converged = True
            break
        energy_prev = energy

    energy = complex(energy)
    if not hermitian and abs(energy.imag) > _PT_TOL * max(1.0, abs(energy.real)):
        raise PTBrokenError(
            f"ground energy {energy} has a significant imaginary part; "
            "PT-broken regime, observables would be complex"
        )
    if ladder_trace_fix:
        _fix_trace_sign(state)
    return DmrgResult(
        energy=energy,
        state=state,
        max_truncation_error=sweep_trunc,
        sweeps_used=sweeps,
        converged=converged,
    )


def _fix_trace_sign(state: MatrixProductState) -> complex:
    if len(state) % 2 != 0:
        raise ValueError("trace fixing applies to doubled-space (even-site) states")
    trace_vec = identity_pair_state(len(state) // 2, dtype=np.float64)
    t = overlap(trace_vec, state)
    if abs(t) < 1e-8:
        raise UnphysicalStateError(
            f"<<I|rho>> = {t:.3e}: state carries no physical trace component"
        )
    phase = t / abs(t)
    if np.iscomplexobj(state.tensors[0]):
        state.tensors[0] = state.tensors[0] * np.conj(phase)
    elif phase.real < 0:
        state.tensors[0] = -state.tensors[0]
    return abs(t)


def save_mps(path, state: MatrixProductState) -> None:
    """Binary MPS checkpoint (versioned npz of the site tensors)."""
    arrays = {f"tensor_{i}": t for i, t in enumerate(state.tensors)}
    np.savez(path, version=1, center=state.center, num_sites=len(state), **arrays)


def load_mps(path) -> MatrixProductState:
    with np.load(path) as data:
        if int(data["version"]) != 1:
            raise ValueError(f"unsupported checkpoint version {data['version']}")
        n = int(data["num_sites"])
        tensors = [data[f"tensor_{i}"] for i in range(n)]
        return MatrixProductState(tensors, center=int(data["center"]))

"""Exact diagonalization on the truncated Fock^3 x qubit^3 space.

State layout: amplitudes indexed by (n1, n2, n3, s1, s2, s3) flattened in C
order, i.e. the spin bits vary fastest and the site-1 Fock index slowest.
Spin index 0 is the atomic ground state (sigma_z = -1), 1 the excited state.
Two independent Hamiltonian representations are kept: a matrix-free
application built from sliced-array ladder terms, and a Kronecker-product
CSR assembly. Large solves use the CSR matrix (faster matvec); eigenvector
residuals are always measured against the matrix-free form, so the two
constructions cross-check each other on every solve.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .params import ModelParams, bare_coupling

DENSE_CUTOFF = 4096
#: directed hopping bonds 1->2, 2->3, 3->1 (0-indexed), each counted once
BONDS = ((0, 1), (1, 2), (2, 0))


class TruncationCapError(RuntimeError):
    """Raised when truncation convergence exceeds the configured Fock cap."""


@dataclass(frozen=True)
class Truncation:
    """Per-cavity Fock cutoff; Hilbert dimension is 8*(n_tr+1)^3."""

    n_tr: int

    def __post_init__(self) -> None:
        if self.n_tr < 1:
            raise ValueError(f"n_tr must be >= 1, got {self.n_tr}")

    @property
    def n_fock(self) -> int:
        return self.n_tr + 1

    @property
    def dim(self) -> int:
        return 8 * self.n_fock**3

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_fock,) * 3 + (2,) * 3


@dataclass
class EigenSolution:
    """k lowest eigenpairs with convergence metadata."""

    values: np.ndarray       # (k,) ascending
    vectors: np.ndarray      # (dim, k)
    residuals: np.ndarray    # (k,) ||H v - E v||
    n_tr_used: int
    converged: bool


def _diagonal(p: ModelParams, t: Truncation) -> np.ndarray:
    n = np.arange(t.n_fock, dtype=float)
    sz = np.array([-1.0, 1.0])
    diag = (
        p.omega * (n[:, None, None] + n[None, :, None] + n[None, None, :])
    )[..., None, None, None] + 0.5 * p.delta * (
        sz[:, None, None] + sz[None, :, None] + sz[None, None, :]
    )[None, None, None, ...]
    return np.broadcast_to(diag, t.shape).copy()


def _ladder_xy(psi: np.ndarray, axis: int, sq: np.ndarray) -> np.ndarray:
    """(a + a^+) along a Fock axis with a hard cutoff."""
    out = np.zeros_like(psi)
    nd = psi.ndim
    shape = [1] * nd
    shape[axis] = -1
    f = sq.reshape(shape)
    dst = [slice(None)] * nd
    src = [slice(None)] * nd
    # a^+ : out[n] += sqrt(n) psi[n-1]
    dst[axis], src[axis] = slice(1, None), slice(None, -1)
    out[tuple(dst)] += f[tuple([slice(1, None) if k == axis else slice(None) for k in range(nd)])] * psi[tuple(src)]
    # a : out[n] += sqrt(n+1) psi[n+1]
    dst[axis], src[axis] = slice(None, -1), slice(1, None)
    out[tuple(dst)] += f[tuple([slice(1, None) if k == axis else slice(None) for k in range(nd)])] * psi[tuple(src)]
    return out


def _hop(psi: np.ndarray, ax_up: int, ax_dn: int, sq: np.ndarray) -> np.ndarray:
    """a_up^+ a_dn along two Fock axes."""
    out = np.zeros_like(psi)
    nd = psi.ndim
    dst = [slice(None)] * nd
    src = [slice(None)] * nd
    dst[ax_up], src[ax_up] = slice(1, None), slice(None, -1)
    dst[ax_dn], src[ax_dn] = slice(None, -1), slice(1, None)
    up_shape = [1] * nd
    up_shape[ax_up] = -1
    dn_shape = [1] * nd
    dn_shape[ax_dn] = -1
    f_up = sq[1:].reshape(up_shape)
    f_dn = sq[1:].reshape(dn_shape)
    out[tuple(dst)] = f_up * f_dn * psi[tuple(src)]
    return out


def apply_hamiltonian(p: ModelParams, t: Truncation, psi: np.ndarray) -> np.ndarray:
    """Return H psi for a flat (or 6-d) state vector, matrix-free."""
    flat_in = psi.ndim == 1
    if flat_in and psi.size != t.dim:
        raise ValueError(f"state dimension {psi.size} != {t.dim}")
    psi6 = np.asarray(psi, dtype=complex).reshape(t.shape)
    g = bare_coupling(p)
    sq = np.sqrt(np.arange(t.n_fock, dtype=float))
    out = _diagonal(p, t) * psi6
    for site in range(3):
        tmp = _ladder_xy(psi6, site, sq)
        out += g * np.flip(tmp, axis=3 + site)  # sigma_x on the matching spin axis
    ph = p.j * np.exp(1j * p.theta)
    for up, dn in BONDS:
        out += ph * _hop(psi6, up, dn, sq)
        out += np.conj(ph) * _hop(psi6, dn, up, sq)
    return out.ravel() if flat_in else out


def hamiltonian_operator(p: ModelParams, t: Truncation) -> LinearOperator:
    """Matrix-free LinearOperator view of the Hamiltonian."""
    diag = _diagonal(p, t)
    g = bare_coupling(p)
    sq = np.sqrt(np.arange(t.n_fock, dtype=float))
    ph = p.j * np.exp(1j * p.theta)

    def matvec(v: np.ndarray) -> np.ndarray:
        psi6 = v.reshape(t.shape)
        out = diag * psi6
        for site in range(3):
            out += g * np.flip(_ladder_xy(psi6, site, sq), axis=3 + site)
        for up, dn in BONDS:
            out += ph * _hop(psi6, up, dn, sq)
            out += np.conj(ph) * _hop(psi6, dn, up, sq)
        return out.ravel()

    return LinearOperator((t.dim, t.dim), matvec=matvec, dtype=complex)


def sparse_hamiltonian(p: ModelParams, t: Truncation) -> sp.csr_matrix:
    """CSR assembly via Kronecker products (independent of the sliced matvec)."""
    n_fock = t.n_fock
    g = bare_coupling(p)
    a = sp.diags(np.sqrt(np.arange(1, n_fock)), 1, format="csr")
    adag = a.T.conj().tocsr()
    num = sp.diags(np.arange(n_fock, dtype=float))
    ifock = sp.identity(n_fock, format="csr")
    sx = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    sz = sp.csr_matrix(np.array([[-1.0, 0.0], [0.0, 1.0]]))
    ispin = sp.identity(2, format="csr")

    def embed(ops: dict[int, sp.spmatrix]) -> sp.spmatrix:
        # factor order matches the flat C layout: fock1, fock2, fock3, spin1..3
        full = None
        for idx in range(6):
            op = ops.get(idx, ifock if idx < 3 else ispin)
            full = op if full is None else sp.kron(full, op, format="csr")
        return full

    h = sp.csr_matrix((t.dim, t.dim), dtype=complex)
    for site in range(3):
        h = h + p.omega * embed({site: num})
        h = h + 0.5 * p.delta * embed({3 + site: sz})
        h = h + g * embed({site: adag + a, 3 + site: sx})
    for up, dn in BONDS:
        hop = embed({up: adag, dn: a})
        h = h + p.j * np.exp(1j * p.theta) * hop
        h = h + p.j * np.exp(-1j * p.theta) * hop.T.conj()
    return h.tocsr()


def dense_hamiltonian(p: ModelParams, t: Truncation) -> np.ndarray:
    """Dense Hamiltonian (small-dimension oracle)."""
    return sparse_hamiltonian(p, t).toarray()


def lowest_eigenpairs(
    p: ModelParams,
    t: Truncation,
    k: int = 4,
    tol: float = 1e-9,
    seed: int = 0,
    v0: np.ndarray | None = None,
    ncv: int | None = None,
) -> EigenSolution:
    """k lowest eigenpairs: implicitly restarted Lanczos, dense solve when small."""
    if k < 1 or k >= t.dim:
        raise ValueError(f"need 1 <= k < dim, got k={k}, dim={t.dim}")
    if t.dim <= DENSE_CUTOFF:
        h = dense_hamiltonian(p, t)
        vals, vecs = scipy.linalg.eigh(h)
        vals, vecs = vals[:k], vecs[:, :k]
        converged = True
    else:
        # Lanczos spends nearly all its time in matvecs; the CSR matrix is
        # several times faster to apply than the sliced-array form.
        op = sparse_hamiltonian(p, t)
        if v0 is None:
            rng = np.random.default_rng(seed)
            v0 = rng.standard_normal(t.dim) + 1j * rng.standard_normal(t.dim)
        try:
            vals, vecs = eigsh(
                op, k=k, which="SA", tol=tol, v0=v0,
                ncv=ncv or min(t.dim - 1, max(4 * k + 1, 40)),
                maxiter=100 * t.dim,
            )
            converged = True
        except ArpackNoConvergence as err:
            vals, vecs = err.eigenvalues, err.eigenvectors
            converged = False
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    residuals = np.array(
        [np.linalg.norm(apply_hamiltonian(p, t, vecs[:, i]) - vals[i] * vecs[:, i])
         for i in range(vals.size)]
    )
    return EigenSolution(
        values=np.real(vals), vectors=vecs, residuals=residuals,
        n_tr_used=t.n_tr, converged=converged,
    )


def _embed_vector(v: np.ndarray, t_old: Truncation, t_new: Truncation) -> np.ndarray:
    src = v.reshape(t_old.shape)
    dst = np.zeros(t_new.shape, dtype=complex)
    s = t_old.n_fock
    dst[:s, :s, :s, ...] = src
    return dst.ravel()


def converge_truncation(
    p: ModelParams,
    k: int = 4,
    energy_tol: float = 1e-8,
    n_tr_start: int = 10,
    n_tr_max: int = 60,
    n_tr_step: int = 5,
    tol: float = 1e-9,
    seed: int = 0,
) -> EigenSolution:
    """Increase the Fock cutoff until all k energies move less than energy_tol."""
    t = Truncation(n_tr_start)
    sol = lowest_eigenpairs(p, t, k=k, tol=tol, seed=seed)
    while True:
        n_next = t.n_tr + n_tr_step
        if n_next > n_tr_max:
            raise TruncationCapError(
                f"energies not converged to {energy_tol:g} within n_tr <= {n_tr_max}"
            )
        t_next = Truncation(n_next)
        v0 = _embed_vector(sol.vectors[:, 0], t, t_next)
        sol_next = lowest_eigenpairs(p, t_next, k=k, tol=tol, seed=seed, v0=v0)
        drift = np.max(np.abs(sol_next.values - sol.values))
        if drift < energy_tol and sol.converged and sol_next.converged:
            # the smaller cutoff is already converged; report it
            return sol
        t, sol = t_next, sol_next


# ---------------------------------------------------------------------------
# Symmetry operators
# ---------------------------------------------------------------------------

def parity_expectation(psi: np.ndarray, t: Truncation) -> float:
    """Expectation of the global parity exp[i pi sum_n (n_n + sigma^+ sigma^-_n)]."""
    psi6 = psi.reshape(t.shape)
    n = np.arange(t.n_fock)
    s = np.arange(2)
    total = (
        (n[:, None, None] + n[None, :, None] + n[None, None, :])[..., None, None, None]
        + (s[:, None, None] + s[None, :, None] + s[None, None, :])[None, None, None, ...]
    )
    signs = np.where(total % 2 == 0, 1.0, -1.0)
    return float(np.real(np.vdot(psi6, signs * psi6)))


def translate(psi: np.ndarray, t: Truncation) -> np.ndarray:
    """Cyclic site relabeling n -> n+1 on both Fock and spin indices."""
    psi6 = psi.reshape(t.shape)
    return np.ascontiguousarray(np.transpose(psi6, (2, 0, 1, 5, 3, 4))).reshape(psi.shape)


def translation_expectation(psi: np.ndarray, t: Truncation) -> complex:
    return complex(np.vdot(psi, translate(psi, t).ravel()) if psi.ndim == 1
                   else np.vdot(psi, translate(psi, t)))


# ---------------------------------------------------------------------------
# Binary eigenvector checkpoints
# ---------------------------------------------------------------------------

_HEADER = struct.Struct("<qqq")  # n_tr, k, dim (little-endian int64)


def save_checkpoint(path: str, sol: EigenSolution) -> None:
    """Write eigenpairs: header {n_tr, k, dim}, eigenvalues, then interleaved
    real/imaginary float64 vector components (all little-endian)."""
    k = int(sol.values.size)
    dim = int(sol.vectors.shape[0])
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(sol.n_tr_used, k, dim))
        fh.write(np.asarray(sol.values, dtype="<f8").tobytes())
        inter = np.empty((k, dim, 2), dtype="<f8")
        inter[..., 0] = np.real(sol.vectors).T
        inter[..., 1] = np.imag(sol.vectors).T
        fh.write(inter.tobytes())


def load_checkpoint(path: str) -> EigenSolution:
    with open(path, "rb") as fh:
        n_tr, k, dim = _HEADER.unpack(fh.read(_HEADER.size))
        values = np.frombuffer(fh.read(8 * k), dtype="<f8").copy()
        inter = np.frombuffer(fh.read(16 * k * dim), dtype="<f8").reshape(k, dim, 2)
    vectors = (inter[..., 0] + 1j * inter[..., 1]).T.copy()
    return EigenSolution(
        values=values, vectors=vectors,
        residuals=np.full(k, np.nan), n_tr_used=int(n_tr), converged=True,
    )

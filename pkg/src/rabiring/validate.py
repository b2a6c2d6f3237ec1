"""Self-contained invariant suite cross-checking the independent code paths.

Each check compares two things that were computed by different routes
(dense vs Lanczos, minimizer vs fixed point, closed form vs generic
solver, symmetry of the assembled matrix vs symmetry of the model), so a
bug in either route shows up as a disagreement.  The suite is cheap: all
exact-diagonalization checks run at small Fock cutoffs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import eigsh

from . import analytic, ed
from .params import MOMENTA, ModelParams


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    tolerance: float
    elapsed: float

    def row(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status}  {self.name:<44s} "
            f"measured={self.measured:10.3e}  tol={self.tolerance:8.1e}  "
            f"[{self.elapsed:5.2f}s]"
        )


def _check(name, tol, fn) -> CheckResult:
    t0 = time.perf_counter()
    measured = float(fn())
    elapsed = time.perf_counter() - t0
    return CheckResult(name, measured <= tol, measured, tol, elapsed)


def _dense_with_optional_fault(p: ModelParams, t: ed.Truncation,
                               corrupt_hopping: bool) -> np.ndarray:
    h = ed.dense_hamiltonian(p, t)
    if corrupt_hopping:
        # flip the hopping sign on one bond only; stays Hermitian but breaks
        # the ring's threefold translation symmetry, so [H, T] must fail
        h = h - 2.0 * _single_bond_hop(p, t)
    return h


def _single_bond_hop(p: ModelParams, t: ed.Truncation) -> np.ndarray:
    """Dense hopping term of the first bond alone."""
    import scipy.sparse as sp

    n_fock = t.n_fock
    a = sp.diags(np.sqrt(np.arange(1, n_fock)), 1, format="csr")
    adag = a.T.conj().tocsr()
    ifock = sp.identity(n_fock, format="csr")
    ispin = sp.identity(2, format="csr")

    def embed(ops):
        full = None
        for idx in range(6):
            op = ops.get(idx, ifock if idx < 3 else ispin)
            full = op if full is None else sp.kron(full, op, format="csr")
        return full

    up, dn = ed.BONDS[0]
    hop = embed({up: adag, dn: a})
    term = p.j * np.exp(1j * p.theta) * hop
    return (term + term.T.conj()).toarray()


def _translation_matrix(t: ed.Truncation) -> np.ndarray:
    dim = t.dim
    cols = np.eye(dim, dtype=complex)
    out = np.empty((dim, dim), dtype=complex)
    for i in range(dim):
        out[:, i] = ed.translate(cols[:, i], t)
    return out


def _parity_diagonal(t: ed.Truncation) -> np.ndarray:
    n = np.arange(t.n_fock)
    s = np.arange(2)
    total = (
        n[:, None, None, None, None, None] + n[None, :, None, None, None, None]
        + n[None, None, :, None, None, None] + s[None, None, None, :, None, None]
        + s[None, None, None, None, :, None] + s[None, None, None, None, None, :]
    )
    return np.where(total % 2 == 0, 1.0, -1.0).ravel()


def run_checks(corrupt_hopping: bool = False, seed: int = 0) -> list[CheckResult]:
    """Run every invariant check; returns one result per check."""
    checks: list[CheckResult] = []
    p = ModelParams(omega=0.2, delta=3.0, g1=0.35, j=0.01, theta=0.3 * math.pi)
    t2 = ed.Truncation(2)
    t3 = ed.Truncation(3)

    h3 = _dense_with_optional_fault(p, t3, corrupt_hopping)
    checks.append(_check(
        "hermiticity (dense, n_tr=3)", 1e-12,
        lambda: np.max(np.abs(h3 - h3.T.conj())) / np.max(np.abs(h3)),
    ))

    pi_diag = _parity_diagonal(t3)
    checks.append(_check(
        "[H, parity] = 0", 1e-12,
        lambda: np.max(np.abs(h3 * pi_diag[None, :] - pi_diag[:, None] * h3))
        / np.max(np.abs(h3)),
    ))

    tmat = _translation_matrix(t3)
    checks.append(_check(
        "[H, translation] = 0", 1e-12,
        lambda: np.max(np.abs(h3 @ tmat - tmat @ h3)) / np.max(np.abs(h3)),
    ))

    def spectrum_reflection():
        p_neg = ModelParams(omega=p.omega, delta=p.delta, g1=p.g1, j=p.j,
                            theta=-p.theta)
        e_pos = scipy.linalg.eigvalsh(h3)
        e_neg = scipy.linalg.eigvalsh(
            _dense_with_optional_fault(p_neg, t3, corrupt_hopping))
        return np.max(np.abs(e_pos - e_neg)) / np.max(np.abs(e_pos))

    checks.append(_check("spectrum(theta) = spectrum(-theta)", 1e-12,
                         spectrum_reflection))

    def gap_closing():
        worst = 0.0
        for theta in np.linspace(-math.pi, math.pi, 20):
            for q in MOMENTA:
                base = ModelParams(omega=0.2, delta=20.0, g1=0.1, j=0.01,
                                   theta=theta)
                g1c = analytic.critical_coupling(base, q)
                pc = ModelParams(omega=0.2, delta=20.0, g1=g1c, j=0.01,
                                 theta=theta)
                lhs = analytic.omega_q(pc, q) * analytic.omega_q(pc, -q)
                rhs = 4.0 * pc.omega**2 * pc.g1**4
                worst = max(worst, abs(lhs - rhs) / abs(rhs))
        return worst

    checks.append(_check("gap closing at critical coupling (20x3 grid)",
                         1e-10, gap_closing))

    def dense_vs_lanczos():
        h2 = ed.dense_hamiltonian(p, t2)
        dense_vals = scipy.linalg.eigvalsh(h2)[:4]
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(t2.dim) + 1j * rng.standard_normal(t2.dim)
        sparse_vals = eigsh(ed.sparse_hamiltonian(p, t2), k=4, which="SA",
                            tol=1e-12, v0=v0)[0]
        return np.max(np.abs(np.sort(sparse_vals) - dense_vals))

    checks.append(_check("dense vs Lanczos eigenvalues (n_tr=2)", 1e-9,
                         dense_vs_lanczos))

    def minimizer_vs_fixed_point():
        worst = 0.0
        for theta in (0.0, 0.2 * math.pi, 0.516 * math.pi, 0.8 * math.pi):
            pc = ModelParams(omega=0.2, delta=10.0, g1=0.7, j=0.01,
                             theta=theta)
            d = analytic.ccp_displacement(pc)
            mf = analytic.minimize_meanfield(pc)
            worst = max(worst, float(np.max(np.abs(mf.alpha - d.alpha))))
        return worst

    checks.append(_check("mean-field minimizer vs fixed point", 1e-8,
                         minimizer_vs_fixed_point))

    def ncp_recovery():
        pc = ModelParams(omega=0.2, delta=10.0, g1=0.7, j=0.01,
                         theta=0.9 * math.pi)
        a_closed = analytic.ncp_displacement(pc)
        d = analytic.ccp_displacement(pc)
        return float(np.max(np.abs(np.abs(d.a) - np.abs(a_closed.a))))

    checks.append(_check("uniform-phase closed form vs generic solver",
                         1e-10, ncp_recovery))

    def onset_exponent():
        theta = 0.9 * math.pi
        base = ModelParams(omega=0.2, delta=10.0, g1=0.6, j=0.01, theta=theta)
        g1c = analytic.critical_coupling(base, 0.0)
        eps = np.geomspace(1e-7, 1e-5, 6)
        amps = []
        for e in eps:
            pc = ModelParams(omega=0.2, delta=10.0, g1=g1c + e, j=0.01,
                             theta=theta)
            amps.append(abs(analytic.ncp_displacement(pc).a[0]))
        slope = np.polyfit(np.log(eps), np.log(amps), 1)[0]
        return abs(slope - 0.5)

    checks.append(_check("order-parameter onset exponent = 1/2", 0.01,
                         onset_exponent))

    return checks


def report(checks: list[CheckResult]) -> str:
    lines = [c.row() for c in checks]
    n_fail = sum(not c.passed for c in checks)
    lines.append(
        f"{len(checks) - n_fail}/{len(checks)} checks passed"
        + ("" if n_fail == 0 else f" ({n_fail} FAILED)")
    )
    return "\n".join(lines)

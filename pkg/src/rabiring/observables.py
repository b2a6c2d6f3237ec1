"""Chirality and coherence observables on truncated-space state vectors.

The photon current I = i[(a1^+ a2 + a2^+ a3 + a3^+ a1) e^{i theta} - h.c.]
follows the real-space definition; in momentum space it evaluates to
-2 sum_q sin(theta - q) <n_q>.  The chirality operator is the quadratic
three-site circulation C = -i sum_n (a_n^+ a_{n+1} - h.c.), oriented so that
the one-photon plane wave with site amplitudes e^{i n q}, q = +2pi/3, gives
exactly +sqrt(3).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ed import BONDS, Truncation, _hop, translate
from .params import MOMENTA, Q_MINUS, Q_PLUS, Q_ZERO


@dataclass
class ObservableSet:
    energy: float
    n_photons: float
    current: float
    chirality: float
    parity: float
    state_index: int


def _occupations(psi6: np.ndarray, t: Truncation) -> np.ndarray:
    n = np.arange(t.n_fock, dtype=float)
    prob = np.abs(psi6) ** 2
    occ = np.empty(3)
    for site in range(3):
        axes = tuple(k for k in range(6) if k != site)
        occ[site] = float(np.tensordot(prob.sum(axis=axes), n, axes=1))
    return occ


def photon_number(psi: np.ndarray, t: Truncation) -> float:
    """Total photon number sum_n <a_n^+ a_n>."""
    return float(np.sum(_occupations(psi.reshape(t.shape), t)))


def _ring_hop_expectation(psi: np.ndarray, t: Truncation) -> complex:
    """<sum_n a_n^+ a_{n+1}> over the directed bonds 1->2, 2->3, 3->1."""
    psi6 = psi.reshape(t.shape)
    sq = np.sqrt(np.arange(t.n_fock, dtype=float))
    acc = 0.0 + 0.0j
    for up, dn in BONDS:
        acc += np.vdot(psi6, _hop(psi6, up, dn, sq))
    return complex(acc)


def photon_current(psi: np.ndarray, t: Truncation, theta: float) -> float:
    """Expectation of the Hermitian ring current at hopping phase theta."""
    z = _ring_hop_expectation(psi, t)
    return float(-2.0 * np.imag(np.exp(1j * theta) * z))


def chirality(psi: np.ndarray, t: Truncation) -> float:
    """Expectation of the photon chirality operator."""
    return float(2.0 * np.imag(_ring_hop_expectation(psi, t)))


def make_one_photon_state(q: float, t: Truncation) -> np.ndarray:
    """Plane-wave one-photon state (1/sqrt3) sum_n e^{i n q} a_n^+ |vac>|ggg>."""
    psi6 = np.zeros(t.shape, dtype=complex)
    for site, label in enumerate((1, 2, 3)):
        idx = [0, 0, 0, 0, 0, 0]
        idx[site] = 1
        psi6[tuple(idx)] = np.exp(1j * q * label) / np.sqrt(3.0)
    return psi6.ravel()


def momentum_occupations(psi: np.ndarray, t: Truncation) -> np.ndarray:
    """<a_q^+ a_q> for q in (0, +2pi/3, -2pi/3), Fourier modes with site
    amplitudes e^{-i n q}."""
    psi6 = psi.reshape(t.shape)
    sq = np.sqrt(np.arange(t.n_fock, dtype=float))
    rho = np.zeros((3, 3), dtype=complex)  # rho[m, n] = <a_m^+ a_n>
    prob_occ = _occupations(psi6, t)
    for m in range(3):
        rho[m, m] = prob_occ[m]
    for m in range(3):
        for n in range(3):
            if m != n:
                rho[m, n] = np.vdot(psi6, _hop(psi6, m, n, sq))
    sites = np.arange(1, 4)
    out = np.empty(3)
    for i, q in enumerate(MOMENTA):
        phase = np.exp(1j * q * sites)
        out[i] = float(np.real(np.conj(phase) @ rho @ phase) / 3.0)
    return out


def resolve_multiplet(
    states: np.ndarray, t: Truncation, tol: float = 1e-8
) -> tuple[np.ndarray, np.ndarray]:
    """Rotate a degenerate eigenspace into the translation eigenbasis.

    states: (dim, m) orthonormal vectors spanning a degenerate level.
    Returns (rotated_states, q_labels); raises if T does not close on the
    subspace, which signals that the input was not actually degenerate.
    """
    states = np.atleast_2d(states.T).T
    m = states.shape[1]
    if m == 1:
        tpsi = translate(states[:, 0], t)
        lam = complex(np.vdot(states[:, 0], tpsi))
        return states, np.array([_momentum_from_eigenvalue(lam)])
    tmat = np.empty((m, m), dtype=complex)
    closure = 0.0
    for jcol in range(m):
        tpsi = translate(states[:, jcol], t)
        tmat[:, jcol] = states.conj().T @ tpsi
        closure = max(closure, float(np.linalg.norm(tpsi - states @ tmat[:, jcol])))
    if closure > np.sqrt(tol):
        raise ValueError(
            f"translation does not close on the subspace (leak {closure:.3e}); "
            "the input states likely do not span a degenerate level"
        )
    evals, evecs = np.linalg.eig(tmat)
    rotated = states @ evecs
    rotated /= np.linalg.norm(rotated, axis=0)
    labels = np.array([_momentum_from_eigenvalue(lam) for lam in evals])
    order = np.argsort(labels)
    return rotated[:, order], labels[order]


def _momentum_from_eigenvalue(lam: complex) -> float:
    """Momentum label from a translation eigenvalue e^{-i q}."""
    best = min(MOMENTA, key=lambda q: abs(lam - np.exp(-1j * q)))
    return best

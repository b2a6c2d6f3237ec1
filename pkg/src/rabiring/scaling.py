"""Finite-frequency critical scaling: sweeps over eta = delta/omega and
log-log exponent extraction."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import analytic
from .ed import TruncationCapError, converge_truncation
from .observables import photon_number
from .params import ModelParams
from .ed import Truncation


@dataclass
class ScalingSeries:
    """(eta, value) points of one observable along the critical line."""

    points: list[tuple[float, float]]
    theta: float
    g1_rule: str
    n_tr_used: list[int]
    converged: list[bool]

    @property
    def etas(self) -> np.ndarray:
        return np.array([e for e, _ in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.points])


@dataclass
class ScalingFit:
    slope: float
    intercept: float
    stderr: float
    window: tuple[float, float]
    local_slopes: list[tuple[float, float]] = field(default_factory=list)  # (1/eta, slope)


def _start_truncation(eta: float) -> int:
    # critical photon fluctuations grow ~ eta^(1/3); the coefficient matches
    # the measured converged cutoff (n_tr = 20 at eta = 25, tol 1e-6)
    return max(10, int(math.ceil(6.9 * eta ** (1.0 / 3.0))))


def critical_sweep(
    omega: float,
    j: float,
    theta: float,
    eta_list: list[float],
    k: int = 2,
    energy_tol: float = 1e-6,
    n_tr_max: int = 75,
    solver_tol: float = 1e-9,
    seed: int = 0,
) -> tuple[ScalingSeries, ScalingSeries]:
    """Ground-energy and photon-number series along the critical coupling.

    At each eta the coupling is pinned to g1c(q*) at this theta (the critical
    coupling is eta-independent).  Returns (energy_series, photon_series) with
    values E_g/eta - c0 (c0 = -3 omega / 2) and N_p/eta.  Points whose
    truncation exceeds the cap are flagged unconverged and carry NaN values.
    """
    probe = ModelParams(omega=omega, delta=omega, g1=0.0, j=j, theta=theta)
    cls = analytic.classify_phase(probe)
    g1c = cls.g1c_at_theta
    rule = f"g1 = g1c(q*={cls.q_star:+.6f}) = {g1c:.12f}"
    c0 = -1.5 * omega
    e_pts: list[tuple[float, float]] = []
    n_pts: list[tuple[float, float]] = []
    n_trs: list[int] = []
    flags: list[bool] = []
    for eta in sorted(eta_list):
        p = ModelParams(omega=omega, delta=eta * omega, g1=g1c, j=j, theta=theta)
        try:
            sol = converge_truncation(
                p, k=k, energy_tol=energy_tol,
                n_tr_start=_start_truncation(eta), n_tr_max=n_tr_max,
                tol=solver_tol, seed=seed,
            )
            e_g = float(sol.values[0])
            n_p = photon_number(sol.vectors[:, 0], Truncation(sol.n_tr_used))
            e_pts.append((eta, e_g / eta - c0))
            n_pts.append((eta, n_p / eta))
            n_trs.append(sol.n_tr_used)
            flags.append(True)
        except TruncationCapError:
            warnings.warn(f"eta={eta}: truncation cap exceeded, point excluded", RuntimeWarning)
            e_pts.append((eta, math.nan))
            n_pts.append((eta, math.nan))
            n_trs.append(n_tr_max)
            flags.append(False)
    mk = lambda pts: ScalingSeries(points=pts, theta=theta, g1_rule=rule,
                                   n_tr_used=list(n_trs), converged=list(flags))
    return mk(e_pts), mk(n_pts)


def loglog_slope(
    series: ScalingSeries, window: tuple[float, float] | None = None
) -> ScalingFit:
    """Ordinary least-squares slope of log|value| against log(eta).

    The fit uses |value| because the energy correction E_g/eta - c0 approaches
    its power law from below; exact zeros and non-finite points are excluded
    with a warning.  The default window keeps the largest max(4, n/2) etas.
    Also emits running local slopes (consecutive finite differences) against
    1/eta for convergence diagnostics.
    """
    etas = series.etas
    vals = series.values
    keep = np.isfinite(vals) & (vals != 0.0)
    if np.count_nonzero(~keep):
        warnings.warn(
            f"{np.count_nonzero(~keep)} nonpositive/undefined points excluded from fit",
            RuntimeWarning,
        )
    etas, vals = etas[keep], np.abs(vals[keep])
    if len(etas) < 4:
        raise ValueError(f"need >= 4 usable points for a slope fit, got {len(etas)}")
    if window is None:
        n_keep = min(len(etas), max(4, (len(etas) + 1) // 2))
        window = (float(etas[-n_keep]), float(etas[-1]))
    sel = (etas >= window[0]) & (etas <= window[1])
    if np.count_nonzero(sel) < 4:
        raise ValueError(f"need >= 4 points inside window {window}, got {np.count_nonzero(sel)}")
    x = np.log(etas[sel])
    y = np.log(vals[sel])
    design = np.vstack([x, np.ones_like(x)]).T
    coef, res_ss, *_ = np.linalg.lstsq(design, y, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    n = x.size
    resid = y - design @ coef
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = math.sqrt(float(resid @ resid) / max(n - 2, 1) / sxx) if sxx > 0 else math.inf
    local = []
    for i in range(1, len(etas)):
        ds = (np.log(vals[i]) - np.log(vals[i - 1])) / (np.log(etas[i]) - np.log(etas[i - 1]))
        mid = 0.5 * (1.0 / etas[i] + 1.0 / etas[i - 1])
        local.append((float(mid), float(ds)))
    return ScalingFit(slope=slope, intercept=intercept, stderr=stderr,
                      window=(float(window[0]), float(window[1])), local_slopes=local)

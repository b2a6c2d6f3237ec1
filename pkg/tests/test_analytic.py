import math

import numpy as np
import pytest

from rabiring import analytic
from rabiring.analytic import PhaseLabel
from rabiring.params import MOMENTA, ModelParams, Q_MINUS, Q_PLUS, Q_ZERO


def mk(omega=0.2, delta=15.0, g1=0.1, j=0.01, theta=0.0):
    return ModelParams(omega=omega, delta=delta, g1=g1, j=j, theta=theta)


# ---------------------------------------------------------------- iCP forms

def test_omega_q_bare_limit():
    assert analytic.omega_q(mk(g1=0.0, j=0.0), Q_PLUS) == pytest.approx(0.2)


def test_omega_q_value():
    # 0.2 - 2*0.2*0.01 + 2*0.01 = 0.216
    assert analytic.omega_q(mk(), Q_ZERO) == pytest.approx(0.216, abs=1e-12)


def test_omega_q_at_theta_equals_q():
    p = mk(theta=Q_PLUS)
    expected = 0.2 - 2 * 0.2 * 0.01 + 2 * 0.01
    assert analytic.omega_q(p, Q_PLUS) == pytest.approx(expected, rel=1e-14)


def test_icp_excitation_zero_coupling():
    p = mk(g1=0.0, theta=0.4)
    for q in MOMENTA:
        assert analytic.icp_excitation(p, q) == pytest.approx(
            0.2 + 2 * 0.01 * math.cos(0.4 - q), rel=1e-13
        )


def test_icp_excitation_value():
    assert analytic.icp_excitation(mk(), Q_ZERO) == pytest.approx(
        0.2159630, abs=5e-7
    )


def test_icp_excitation_vanishes_at_critical_coupling():
    for theta in (0.0, 0.3, 2.0):
        p = mk(theta=theta)
        for q in MOMENTA:
            g1c = analytic.critical_coupling(p, q)
            pc = mk(g1=g1c, theta=theta)
            eps = analytic.icp_excitation(pc, q)
            assert min(eps, analytic.icp_excitation(pc, -q)) == pytest.approx(
                0.0, abs=1e-7
            )


def test_icp_excitation_domain_error_beyond_critical():
    p = mk(g1=0.9)
    with pytest.raises(analytic.DomainError):
        analytic.icp_excitation(p, Q_ZERO)


def test_icp_ground_energy_decoupled():
    assert analytic.icp_ground_energy(mk(g1=0.0, j=0.0)) == pytest.approx(
        -1.5 * 15.0, rel=1e-14
    )


def test_bogoliubov_lambda():
    assert analytic.bogoliubov_lambda(mk(g1=0.0), Q_ZERO) == 0.0
    # (1/8) ln(0.44/0.424)
    assert analytic.bogoliubov_lambda(mk(), Q_ZERO) == pytest.approx(
        math.log(0.44 / 0.424) / 8.0, rel=1e-12
    )
    p = mk(theta=0.7)
    assert analytic.bogoliubov_lambda(p, Q_PLUS) == pytest.approx(
        analytic.bogoliubov_lambda(p, Q_MINUS), rel=1e-14
    )


# ----------------------------------------------------- critical lines, tcp

def test_critical_coupling_j_zero():
    for theta in (0.0, 1.0, math.pi):
        p = mk(j=0.0, theta=theta)
        for q in MOMENTA:
            assert analytic.critical_coupling(p, q) == pytest.approx(0.5, rel=1e-14)


def test_critical_coupling_values():
    p = mk(j=0.01, theta=0.0)  # J/omega = 0.05
    assert analytic.critical_coupling(p, Q_ZERO) == pytest.approx(
        math.sqrt(1.21 / 4.4), rel=1e-12
    )
    assert analytic.critical_coupling(p, Q_PLUS) == pytest.approx(
        math.sqrt(0.9025 / 3.8), rel=1e-12
    )
    assert analytic.critical_coupling(p, Q_ZERO) == pytest.approx(0.52440, abs=5e-6)
    assert analytic.critical_coupling(p, Q_PLUS) == pytest.approx(0.48734, abs=5e-6)


def test_gap_closing_identity():
    for theta in np.linspace(-math.pi, math.pi, 11):
        for q in MOMENTA:
            g1c = analytic.critical_coupling(mk(theta=theta), q)
            pc = mk(g1=g1c, theta=theta)
            lhs = analytic.omega_q(pc, q) * analytic.omega_q(pc, -q)
            rhs = 4 * pc.omega**2 * pc.g1**4
            assert lhs == pytest.approx(rhs, rel=1e-10)


def test_tricritical_point_values():
    tc = analytic.tricritical_point(mk())
    assert tc.theta_c / math.pi == pytest.approx(0.5158432, abs=1e-6)
    assert tc.g_tc == pytest.approx(0.4987546, abs=1e-6)
    # critical lines meet there
    pc = mk(theta=tc.theta_c)
    assert analytic.critical_coupling(pc, Q_ZERO) == pytest.approx(
        analytic.critical_coupling(pc, Q_PLUS), abs=1e-10
    )


def test_tricritical_point_zero_hopping_limit():
    tc = analytic.tricritical_point(mk(j=0.0))
    assert tc.theta_c == pytest.approx(math.pi / 2, abs=1e-10)
    assert tc.g_tc == pytest.approx(0.5, abs=1e-10)


# --------------------------------------------------------------- phases

def test_classify_phase_icp():
    for theta in (0.0, 1.0, 3.0):
        cls = analytic.classify_phase(mk(g1=0.1, theta=theta))
        assert cls.label is PhaseLabel.ICP


def test_classify_phase_ncp():
    cls = analytic.classify_phase(mk(g1=0.7, theta=math.pi))
    assert cls.label is PhaseLabel.NCP
    assert cls.q_star == Q_ZERO


def test_classify_phase_ccp_sign():
    assert analytic.classify_phase(mk(g1=0.7, theta=0.1)).label is PhaseLabel.CCP_PLUS
    assert analytic.classify_phase(mk(g1=0.7, theta=-0.1)).label is PhaseLabel.CCP_MINUS
    assert analytic.classify_phase(mk(g1=0.7, theta=0.1)).q_star == Q_PLUS


# ----------------------------------------------------------- displacements

def test_ncp_displacement_closed_form():
    p = mk(delta=10.0, g1=0.7, theta=math.pi)
    d = analytic.ncp_displacement(p)
    assert np.allclose(d.b, 0.0)
    assert d.a[0] == d.a[1] == d.a[2]
    assert d.a[0] == pytest.approx(4.8856282, abs=1e-6)
    assert d.residual < 1e-10


def test_ncp_displacement_onset():
    theta = math.pi
    g1c = analytic.critical_coupling(mk(delta=10.0, theta=theta), Q_ZERO)
    d = analytic.ncp_displacement(mk(delta=10.0, g1=g1c + 1e-10, theta=theta))
    assert abs(d.a[0]) < 1e-3


def test_ncp_displacement_below_threshold_raises():
    with pytest.raises(analytic.DomainError):
        analytic.ncp_displacement(mk(delta=10.0, g1=0.2, theta=math.pi))


def test_ccp_displacement_generic_point():
    p = mk(delta=10.0, g1=0.7, theta=0.3 * math.pi)
    d = analytic.ccp_displacement(p)
    assert d.converged
    assert d.residual < 1e-10
    assert np.max(np.abs(d.b)) > 1e-3  # genuinely complex for theta not in {0, pi}
    mf = analytic.minimize_meanfield(p)
    assert np.max(np.abs(mf.alpha - d.alpha)) < 1e-8


def test_ccp_displacement_theta_zero_real_frustrated():
    d = analytic.ccp_displacement(mk(delta=10.0, g1=0.7, theta=0.0))
    assert np.allclose(d.b, 0.0, atol=1e-12)
    assert not np.allclose(d.a, d.a[0])  # frustrated, not uniform


def test_ccp_displacement_at_theta_c_pattern():
    tc = analytic.tricritical_point(mk())
    d = analytic.ccp_displacement(mk(delta=10.0, g1=0.7, theta=tc.theta_c))
    mags = np.sort(np.abs(d.a))
    # (a, a, -a) orbit: all magnitudes equal
    assert mags[2] == pytest.approx(mags[0], rel=1e-8)
    signs = np.sign(d.a)
    assert abs(np.sum(signs)) == 1  # two of one sign, one of the other


def test_meanfield_energy_vacuum_and_symmetries():
    p = mk(delta=10.0, g1=0.7, theta=0.4)
    assert analytic.meanfield_energy(p, np.zeros(3, dtype=complex)) == pytest.approx(
        -15.0, rel=1e-14
    )
    rng = np.random.default_rng(3)
    alpha = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    e1 = analytic.meanfield_energy(p, alpha)
    assert analytic.meanfield_energy(p, -alpha) == pytest.approx(e1, rel=1e-12)
    p_neg = mk(delta=10.0, g1=0.7, theta=-0.4)
    assert analytic.meanfield_energy(p_neg, np.conj(alpha)) == pytest.approx(
        e1, rel=1e-12
    )


def test_meanfield_gradient_matches_finite_differences():
    p = mk(delta=10.0, g1=0.7, theta=0.3)
    rng = np.random.default_rng(5)
    x = rng.standard_normal(6)
    grad = analytic.meanfield_gradient(p, x[:3], x[3:])
    h = 1e-6
    for i in range(6):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        fd = (
            analytic.meanfield_energy(p, xp[:3] + 1j * xp[3:])
            - analytic.meanfield_energy(p, xm[:3] + 1j * xm[3:])
        ) / (2 * h)
        assert grad[i] == pytest.approx(fd, abs=1e-6)


def test_minimize_meanfield_icp_is_trivial():
    mf = analytic.minimize_meanfield(mk(g1=0.1, theta=0.5))
    assert np.max(np.abs(mf.alpha)) < 1e-6


def test_minimize_meanfield_ccp_beats_uniform_ansatz():
    p = mk(delta=10.0, g1=0.7, theta=0.2 * math.pi)
    mf = analytic.minimize_meanfield(p)
    a_uniform = analytic.ncp_displacement(p)
    e_uniform = analytic.meanfield_energy(p, a_uniform.alpha)
    assert analytic.meanfield_energy(p, mf.alpha) < e_uniform - 1e-6


# ------------------------------------------------------- excitations/energy

def test_ncp_excitation_gap_closes_at_threshold():
    theta = math.pi
    g1c = analytic.critical_coupling(mk(delta=10.0, theta=theta), Q_ZERO)
    p = mk(delta=10.0, g1=g1c + 1e-9, theta=theta)
    assert analytic.ncp_excitation(p, Q_ZERO) == pytest.approx(0.0, abs=1e-3)


def test_ncp_excitation_time_reversal():
    p_pos = mk(delta=10.0, g1=0.7, theta=0.8 * math.pi)
    p_neg = mk(delta=10.0, g1=0.7, theta=-0.8 * math.pi)
    assert analytic.ncp_excitation(p_pos, Q_PLUS) == pytest.approx(
        analytic.ncp_excitation(p_neg, Q_MINUS), rel=1e-12
    )


def test_ccp_excitations_match_ncp_formula_on_uniform_solution():
    p = mk(delta=10.0, g1=0.7, theta=0.9 * math.pi)
    d = analytic.ncp_displacement(p)
    modes = analytic.ccp_excitations(p, d)
    expected = np.sort([analytic.ncp_excitation(p, q) for q in MOMENTA])
    assert np.max(np.abs(modes - expected)) < 1e-8


def test_ccp_excitations_reduce_to_icp_at_zero_displacement():
    p = mk(g1=0.1, theta=0.4)
    d = analytic.DisplacementSolution(
        a=np.zeros(3), b=np.zeros(3), residual=0.0, converged=True, iterations=0
    )
    modes = analytic.ccp_excitations(p, d)
    expected = np.sort([analytic.icp_excitation(p, q) for q in MOMENTA])
    assert np.max(np.abs(modes - expected)) < 1e-10


def test_ccp_lowest_mode_vanishes_at_second_order_boundary():
    theta = 0.2 * math.pi
    g1c = analytic.critical_coupling(mk(delta=10.0, theta=theta), Q_PLUS)
    p = mk(delta=10.0, g1=g1c + 1e-7, theta=theta)
    d = analytic.ccp_displacement(p)
    modes = analytic.ccp_excitations(p, d)
    assert modes[0] == pytest.approx(0.0, abs=1e-2)


def test_coherent_ground_energy_symmetric_in_theta():
    for th in (0.2 * math.pi, 0.8 * math.pi):
        e_pos = analytic.ground_energy(mk(delta=10.0, g1=0.7, theta=th))
        e_neg = analytic.ground_energy(mk(delta=10.0, g1=0.7, theta=-th))
        assert e_pos == pytest.approx(e_neg, rel=1e-10)


def test_ground_energy_kink_at_theta_c():
    # slope discontinuity of E_g(theta) across the first-order line
    tc = analytic.tricritical_point(mk()).theta_c
    h = 2e-3
    e = [
        analytic.ground_energy(mk(delta=10.0, g1=0.7, theta=tc + s * h))
        for s in (-2, -1, 0, 1, 2)
    ]
    slope_left = (e[1] - e[0]) / h
    slope_right = (e[4] - e[3]) / h
    assert abs(slope_right - slope_left) > 0.05


def test_time_reversal_of_icp_quantities():
    p_pos = mk(theta=0.7)
    p_neg = mk(theta=-0.7)
    for q in MOMENTA:
        assert analytic.omega_q(p_pos, q) == pytest.approx(
            analytic.omega_q(p_neg, -q), rel=1e-14
        )
        assert analytic.icp_excitation(p_pos, q) == pytest.approx(
            analytic.icp_excitation(p_neg, -q), rel=1e-12
        )
        assert analytic.critical_coupling(p_pos, q) == pytest.approx(
            analytic.critical_coupling(p_neg, -q), rel=1e-14
        )

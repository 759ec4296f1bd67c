import math

import numpy as np
import pytest

from ringtoa import (
    CoherentParams,
    DetectorKernel,
    ModeSpace,
    RingState,
    RotationFrame,
    amp_state,
    autocorrelation,
    coherent_state,
    from_modes,
    localization_matrix,
    pc_density,
    qsymbol,
    timescales,
    vacuum_noise,
    velocity,
)
from ringtoa.probability import ProbabilityGrid, pgamma_validation
from ringtoa.errors import DomainError, SeriesError


MS0 = ModeSpace(mu=0.0, r=1.0, m_max=1100)
COH = CoherentParams(theta=0.0, xi=1000.0, alpha=10.0)


def max_loc(ms):
    return localization_matrix(DetectorKernel.max_localization(), ms)


def test_pc_density_factorizes_through_amplitude():
    st = coherent_state(MS0, COH)
    det = max_loc(MS0)
    t = np.linspace(2.0, 9.0, 7)
    dens = pc_density(st, det, t, 1.3)
    amp = amp_state(st, MS0, t, 1.3)
    np.testing.assert_allclose(
        dens, np.abs(amp) ** 2 / (2.0 * math.pi), rtol=1e-12
    )


def test_pc_density_single_mode_constant():
    ms = ModeSpace(mu=3.0, r=2.0, m_max=8)
    st = from_modes(ms, {5: 1.0})
    det = localization_matrix(DetectorKernel.max_localization(gamma0=0.3), ms)
    vals = [pc_density(st, det, t, phi) for t, phi in ((0.0, 0.0), (5.5, 2.2), (31.4, -1.0))]
    expect = velocity(ms, 5) / (2.0 * math.pi * ms.r)
    np.testing.assert_allclose(vals, expect, rtol=1e-12)


def test_pc_density_unit_integral_per_period_massless():
    # the normalization convention: one circulation integrates to 1
    st = coherent_state(MS0, COH)
    det = max_loc(MS0)
    period = 2.0 * math.pi
    t = np.linspace(0.4, 0.4 + period, 20001)
    dens = pc_density(st, det, t, math.pi)
    total = np.trapezoid(dens, t)
    assert total == pytest.approx(1.0, abs=2e-6)


def test_pc_density_mixed_state_matrix_path():
    # mixed rho = 1/2 |a><a| + 1/2 |b><b|: density is the average
    ms = ModeSpace(mu=1.0, r=1.0, m_max=20)
    a = from_modes(ms, {3: 1.0, 5: 1.0})
    b = from_modes(ms, {4: 1.0})
    rho = 0.5 * a.density_matrix() + 0.5 * b.density_matrix()
    mixed = RingState(ms, rho=rho)
    det = max_loc(ms)
    t, phi = 2.1, 0.7
    expect = 0.5 * pc_density(a, det, t, phi) + 0.5 * pc_density(b, det, t, phi)
    # mixed states take the einsum route; force it by flagging purity off
    got = pc_density(mixed, det, t, phi)
    assert got == pytest.approx(expect, rel=1e-11)


def test_pc_density_general_localization_damps_interference():
    ms = ModeSpace(mu=1.0, r=1.0, m_max=30)
    st = from_modes(ms, {4: 1.0, 9: 1.0})
    grid_w = np.linspace(0.0, 40.0, 2)
    grid_m = np.linspace(-31.0, 31.0, 125)
    logs = np.zeros(2)[:, None] + (0.02 * grid_m**2)[None, :]
    dk = DetectorKernel.tabulated(grid_w, grid_m, logs, log_values=True)
    det = localization_matrix(dk, ms)
    t = np.linspace(0.0, 20.0, 300)
    dens_full = pc_density(st, max_loc(ms), t, 0.0)
    dens_damp = pc_density(st, det, t, 0.0)
    # same mean, smaller oscillation amplitude
    damp = math.exp(-0.02 * 25.0 / 4.0)
    assert np.ptp(dens_damp) == pytest.approx(np.ptp(dens_full) * damp, rel=1e-6)


def test_pc_density_rotating_frame_consistency():
    ms = ModeSpace(mu=0.0, r=1.0, m_max=1100)
    st = coherent_state(ms, COH)
    rf = RotationFrame(omega_d=1e-3, modespace=ms)
    det_rot = localization_matrix(DetectorKernel.max_localization(), ms, frame=rf)
    det_static = max_loc(ms)
    with pytest.raises(DomainError):
        pc_density(st, det_rot, 1.0, 0.0)  # frame argument must match
    with pytest.raises(DomainError):
        pc_density(st, det_static, 1.0, 0.0, frame=rf)
    dens = pc_density(st, det_rot, np.array([6.0, 6.3]), 0.0, frame=rf)
    assert np.all(dens >= 0)


def test_pc_density_rotating_matches_split_representation():
    # the rotating double sum (rotating velocities) and the split-amplitude
    # form (static velocities, rotating phases) agree up to O(Omega_D r)
    # weight corrections, which largely cancel for symmetric states
    from ringtoa import amp_rotating_split, symmetric_superposition

    ms = ModeSpace(mu=0.0, r=1.0, m_max=1130)
    sym = symmetric_superposition(ms, coherent_state(ms, COH))
    rf = RotationFrame(omega_d=1e-4, modespace=ms)
    det = localization_matrix(DetectorKernel.max_localization(), ms, frame=rf)
    t = np.linspace(6.0, 6.6, 31)
    p_eq = pc_density(sym, det, t, 0.0, frame=rf)
    d_plus, d_minus = amp_rotating_split(sym, rf, t, 0.0)
    p_split = np.abs(d_plus + d_minus) ** 2 / (2.0 * math.pi)
    assert np.max(np.abs(p_eq - p_split)) / p_split.max() < 1e-5


def test_pc_density_support_violation():
    ms = ModeSpace(mu=0.0, r=1.0, m_max=40)
    st = from_modes(ms, {-5: 1.0, 5: 1.0})
    det = localization_matrix(DetectorKernel.ring_exponential(a=1.0), ms)
    from ringtoa.errors import SupportError

    with pytest.raises(SupportError):
        pc_density(st, det, 0.0, 0.0)


def test_qsymbol_matches_pc_density_on_coherent_state():
    det = max_loc(MS0)
    st = coherent_state(MS0, COH)
    t = np.linspace(5.0, 8.0, 5)
    q = qsymbol(MS0, COH, t, 1.7)
    p = pc_density(st, det, t, 1.7)
    np.testing.assert_allclose(q, p, rtol=1e-10)


def test_qsymbol_peak_at_zero_separation():
    ms = ModeSpace(mu=0.0, r=1.0, m_max=200)
    cp = CoherentParams(theta=0.6, xi=100.0, alpha=5.0)
    q_on = qsymbol(ms, cp, 0.0, 0.6)
    q_off = qsymbol(ms, cp, 0.0, 0.6 + np.linspace(0.3, 3.0, 7))
    assert np.all(q_on > q_off)


def test_qsymbol_image_method_agrees_semiclassically():
    # incoherent winding images vs exact mode sum, well before T_q
    ms = ModeSpace(mu=1000.0, r=1.0, m_max=1100)
    scales = timescales(ms, COH.xi, COH.alpha)
    v = velocity(ms, 1000.0)
    t = 0.3 * scales.t_quantum
    theta = (v * t) % (2.0 * math.pi)
    offs = np.array([-0.1, -0.03, 0.0, 0.03, 0.1])
    exact = qsymbol(ms, COH, np.full_like(offs, t), theta + offs)
    images = qsymbol(ms, COH, np.full_like(offs, t), theta + offs, method="images")
    assert np.max(np.abs(images / exact - 1.0)) < 0.01


def test_qsymbol_peak_times_follow_windings():
    # peaks of Q over t sit at t_n = r(phi - theta + 2 pi n)/v_p
    ms = ModeSpace(mu=1000.0, r=1.0, m_max=1130)
    cp = CoherentParams(theta=1.0, xi=1000.0, alpha=10.0)
    v_p = velocity(ms, 1000.0)
    phi = 2.5
    t = np.arange(0.5, 30.0, 0.002)
    q = qsymbol(ms, cp, t, phi)
    from scipy.signal import find_peaks

    idx, _ = find_peaks(q, prominence=0.2 * q.max())
    expected = np.array([(phi - cp.theta + 2 * math.pi * n) / v_p for n in (0, 1, 2, 3)])
    expected = expected[expected < t[-1]]
    np.testing.assert_allclose(t[idx], expected, atol=0.01)


def test_qsymbol_warns_below_alpha_three():
    ms = ModeSpace(mu=0.0, r=1.0, m_max=60)
    with pytest.warns(UserWarning):
        qsymbol(ms, CoherentParams(0.0, 20.0, 1.0), 0.0, 0.0)


def test_vacuum_noise_ring_exponential_closed_form():
    ms = ModeSpace(mu=0.0, r=1.0, m_max=60)
    dk = DetectorKernel.ring_exponential(a=1.0)
    p0 = vacuum_noise(dk, ms)
    assert p0 * 4.0 * math.pi * ms.r == pytest.approx(
        -math.log(1.0 - math.exp(-1.0)), rel=1e-14
    )


def test_vacuum_noise_flat_kernel_diverges():
    ms = ModeSpace(mu=1.0, r=1.0, m_max=400)
    with pytest.raises(SeriesError):
        vacuum_noise(DetectorKernel.max_localization(), ms)


def test_vacuum_noise_rotating_reduces_to_static():
    ms = ModeSpace(mu=0.0, r=1.0, m_max=80)
    dk = DetectorKernel.ring_exponential(a=0.7)
    rf = RotationFrame(omega_d=0.0, modespace=ms)
    assert vacuum_noise(dk, ms, frame=rf) == vacuum_noise(dk, ms)


def test_vacuum_noise_monotone_in_decay_constant():
    ms = ModeSpace(mu=0.0, r=1.0, m_max=80)
    vals = [vacuum_noise(DetectorKernel.ring_exponential(a=a), ms) for a in (0.5, 1.0, 2.0)]
    assert vals[0] > vals[1] > vals[2] > 0


def test_timescales_fig_caption_parameters():
    ms = ModeSpace(mu=1000.0, r=1.0, m_max=1100)
    scales = timescales(ms, 1000.0, 10.0)
    assert 280.0 <= scales.t_quantum <= 285.0
    assert 35000.0 <= scales.t_recurrence <= 36000.0
    assert scales.t_recurrence == pytest.approx(4.0 * math.pi * 10.0 * scales.t_quantum)


def test_timescales_massless_ideal_clock():
    ms = ModeSpace(mu=0.0, r=1.0, m_max=100)
    scales = timescales(ms, 50.0, 5.0)
    assert math.isinf(scales.t_quantum) and math.isinf(scales.t_recurrence)
    assert scales.tick == pytest.approx(2.0 * math.pi, rel=1e-15)


def test_reality_residue_guard():
    # non-Hermitian rho must be rejected by the state constructor itself
    ms = ModeSpace(mu=1.0, r=1.0, m_max=3)
    rho = np.eye(7, dtype=complex) / 7.0
    rho[1, 2] = 0.3j
    with pytest.raises(Exception):
        RingState(ms, rho=rho)


def test_probability_grid_negativity_policy():
    t = np.linspace(0.0, 1.0, 5)
    with pytest.warns(UserWarning):
        g = ProbabilityGrid(t=t, phi=np.zeros(5), density=np.array([0.0, -1e-12, 1.0, 2.0, 0.5]))
    assert np.all(g.density >= 0.0)
    with pytest.raises(DomainError):
        ProbabilityGrid(t=t, phi=np.zeros(5), density=np.array([0.0, -1e-3, 1.0, 2.0, 0.5]))


def test_autocorrelation_initial_value_and_period():
    st = coherent_state(MS0, COH)
    f0 = autocorrelation(st, MS0, 0.0)
    assert f0 == pytest.approx(1.0, rel=1e-12)
    # massless: exact revival every circulation
    f1 = autocorrelation(st, MS0, 2.0 * math.pi)
    assert f1 == pytest.approx(1.0, rel=1e-10)


def test_pgamma_regularized_normalization_validation():
    ms = ModeSpace(mu=0.0, r=1.0, m_max=40)
    st = from_modes(ms, {6: 1.0, 9: 1.0, 12: 0.5})
    dk = DetectorKernel.ring_exponential(a=0.5)
    ratios, offdiag = [], []
    for gamma in (0.2, 0.1, 0.05):
        out = pgamma_validation(st, dk, ms, gamma)
        ratios.append(out["ratio"])
        offdiag.append(out["offdiag_fraction"])
    assert ratios[-1] == pytest.approx(1.0, abs=5e-3)
    assert abs(ratios[-1] - 1.0) < abs(ratios[0] - 1.0) + 1e-9
    assert offdiag[-1] < 1e-10

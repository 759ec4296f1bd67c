import math

import numpy as np
import pytest

from ringtoa import (
    DetectorKernel,
    ModeSpace,
    RotationFrame,
    absorption,
    kernel_eval,
    localization_matrix,
    omega,
    wigner_weyl,
)
from ringtoa.detector import kernel_from_spec
from ringtoa.errors import DomainError, UnphysicalKernelError


MS = ModeSpace(mu=1.0, r=1.0, m_max=30)


def test_kernel_eval_flat_on_support():
    dk = DetectorKernel.max_localization(A=1.0)
    assert kernel_eval(dk, 5.0, 3, r=1.0) == 1.0
    assert kernel_eval(dk, 5.0, 5, r=1.0) == 1.0  # boundary |m|/r = omega included


def test_kernel_eval_negative_energy_is_zero():
    dk = DetectorKernel.max_localization(A=1.0)
    assert kernel_eval(dk, -1.0, 0, r=1.0) == 0.0


def test_kernel_eval_spacelike_is_zero():
    dk = DetectorKernel.max_localization(A=2.0, gamma0=0.1)
    assert kernel_eval(dk, 1.0, 4, r=1.0) == 0.0
    assert kernel_eval(dk, 1.0, 4, r=8.0) > 0.0  # |m|/r = 0.5 < 1


def test_kernel_eval_ring_exponential_on_shell():
    # e^{-a m} theta(m) at mu=0 on shell
    dk = DetectorKernel.ring_exponential(a=1.0)
    ms = ModeSpace(mu=0.0, r=1.0, m_max=10)
    w2 = omega(ms, 2)
    assert kernel_eval(dk, w2, 2, r=1.0) == pytest.approx(math.exp(-2.0), rel=1e-15)
    assert kernel_eval(dk, w2, -2, r=1.0) == 0.0
    assert kernel_eval(dk, 0.0, 0, r=1.0) == 0.0


def test_kernel_raw_skips_support_cone():
    dk = DetectorKernel.ring_exponential(a=1.0)
    # rotating argument below the cone: raw keeps the exponential
    assert dk.raw_value(1.0, 2, r=1.0) == pytest.approx(math.exp(-1.0))
    assert kernel_eval(dk, 1.0, 2, r=1.0) == 0.0


def test_localization_max_family_is_exactly_one():
    for gamma0 in (0.0, 0.3, 2.0):
        dk = DetectorKernel.max_localization(gamma0=gamma0)
        L = localization_matrix(dk, MS)
        assert L.is_max_localization
        assert np.all(L.matrix == 1.0)


def test_localization_chiral_gamma1_family():
    # gamma1 > 0 restricted to m > 0: exactly 1 on the supported block
    dk = DetectorKernel.max_localization(gamma0=0.1, gamma1=0.7, chiral=True)
    L = localization_matrix(dk, MS)
    sup = L.on_support
    assert np.array_equal(sup, MS.modes() > 0)
    assert np.all(L.matrix[np.ix_(sup, sup)] == 1.0)
    assert np.all(L.matrix[~sup, :] == 0.0)


def test_localization_gamma1_full_lattice_rejected():
    # mixed-sign pairs give ratio > 1: unphysical, must be rejected
    dk = DetectorKernel.max_localization(gamma1=0.5)
    with pytest.raises(UnphysicalKernelError):
        localization_matrix(dk, MS)


def test_localization_diagonal_is_one_for_custom_kernel():
    grid_w = np.linspace(0.0, 40.0, 81)
    grid_m = np.linspace(-31.0, 31.0, 63)
    vals = np.exp(-0.05 * grid_w)[:, None] * np.ones(63)[None, :]
    dk = DetectorKernel.tabulated(grid_w, grid_m, vals)
    L = localization_matrix(dk, MS)
    sup = L.on_support
    assert np.all(np.diag(L.matrix)[sup] == 1.0)
    assert np.all(L.matrix[np.ix_(sup, sup)] <= 1.0 + 1e-12)


def test_localization_gaussian_counterexample_rejected():
    # R = e^{-omega^2} gives L = e^{(w-w')^2/4} > 1: positivity violation
    grid_w = np.linspace(0.0, 40.0, 401)
    grid_m = np.linspace(-31.0, 31.0, 63)
    vals = np.exp(-(grid_w**2))[:, None] * np.ones(63)[None, :]
    dk = DetectorKernel.tabulated(grid_w, grid_m, vals)
    with pytest.raises(UnphysicalKernelError):
        localization_matrix(dk, MS)


def test_rotating_localization_max_family_stays_one():
    # "a maximum-localization detector remains so in presence of rotation"
    rf = RotationFrame(omega_d=0.6, modespace=MS)
    for dk in (
        DetectorKernel.max_localization(gamma0=1.3),
        DetectorKernel.max_localization(gamma0=0.2, gamma1=0.4, chiral=True),
        DetectorKernel.ring_exponential(a=0.8),
    ):
        L = localization_matrix(dk, MS, frame=rf)
        sup = L.on_support
        assert np.all(L.matrix[np.ix_(sup, sup)] == 1.0)


def test_absorption_flat_kernel():
    dk = DetectorKernel.max_localization()
    prof = absorption(dk, MS)
    m = MS.modes()
    safe = np.where(m == 0, 1, np.abs(m)).astype(float)
    expected = np.where(m == 0, 0.0, 1.0 / (2.0 * safe))
    np.testing.assert_allclose(prof.values, expected, rtol=1e-15)
    assert prof.at(0) == 0.0


def test_absorption_ring_exponential():
    ms = ModeSpace(mu=0.0, r=1.0, m_max=10)
    dk = DetectorKernel.ring_exponential(a=1.0)
    prof = absorption(dk, ms)
    assert prof.at(3) == pytest.approx(math.exp(-3.0) / 6.0, rel=1e-14)
    assert prof.at(-3) == 0.0  # theta(m) one-sided kernel


def test_wigner_weyl_marginal_is_one_at_integer_p():
    ms = ModeSpace(mu=1.0, r=1.0, m_max=120)
    L = localization_matrix(DetectorKernel.max_localization(gamma0=0.4), ms)
    n_theta = 512
    theta = np.linspace(0.0, 2.0 * math.pi, n_theta, endpoint=False)
    p_grid = np.array([-7.0, 0.0, 3.0, 11.0])
    field = wigner_weyl(L, theta, p_grid)
    marg = field.values.sum(axis=1) * (2.0 * math.pi / n_theta)
    np.testing.assert_allclose(marg, 1.0, atol=1e-8)
    np.testing.assert_allclose(field.marginal_truncation, 0.0, atol=1e-12)


def test_wigner_weyl_marginal_truncation_accounting():
    # at any p, marginal + reported truncation deficit = 1 exactly
    ms = ModeSpace(mu=1.0, r=1.0, m_max=90)
    L = localization_matrix(DetectorKernel.max_localization(), ms)
    n_theta = 512
    theta = np.linspace(0.0, 2.0 * math.pi, n_theta, endpoint=False)
    p_grid = np.array([-2.5, 0.37, 7.5, 12.123])
    field = wigner_weyl(L, theta, p_grid)
    marg = field.values.sum(axis=1) * (2.0 * math.pi / n_theta)
    np.testing.assert_allclose(marg + field.marginal_truncation, 1.0, atol=1e-12)


def test_wigner_weyl_diagonal_kernel_theta_independent():
    ms = ModeSpace(mu=1.0, r=1.0, m_max=25)
    L = localization_matrix(DetectorKernel.max_localization(gamma0=0.2), ms)
    diag_only = L.matrix * np.eye(L.matrix.shape[0])
    from ringtoa.detector import LocalizationMatrix

    Ld = LocalizationMatrix(ms, diag_only, L.on_support)
    theta = np.linspace(0.0, 2.0 * math.pi, 64, endpoint=False)
    field = wigner_weyl(Ld, theta, np.array([0.0, 1.3]))
    spread = np.ptp(field.values, axis=1)
    np.testing.assert_allclose(spread, 0.0, atol=1e-14)


def test_wigner_weyl_max_localization_width_shrinks_like_inverse_m_max():
    theta = np.linspace(-math.pi, math.pi, 4096, endpoint=False)
    widths = {}
    for m_max in (100, 200):
        ms = ModeSpace(mu=1.0, r=1.0, m_max=m_max)
        L = localization_matrix(DetectorKernel.max_localization(), ms)
        field = wigner_weyl(L, theta, np.array([0.0]))
        row = field.values[0]
        half = row.max() / 2.0
        above = np.abs(theta[row > half])
        widths[m_max] = 2.0 * above.max()
        assert widths[m_max] < 2.0 * math.pi / m_max
    ratio = widths[100] / widths[200]
    assert ratio == pytest.approx(2.0, rel=0.25)


def test_wigner_weyl_positive_for_summable_localization():
    # log R = +c m^2 gives L = e^{-c(m-m')^2/4}: positive definite and
    # summable, so the truncated transform has a positive floor; the bands
    # are supplied as a log-valued table (linear values would overflow)
    ms = ModeSpace(mu=1.0, r=1.0, m_max=150)
    m_grid = np.linspace(-151.0, 151.0, 605)
    w_grid = np.linspace(0.0, 200.0, 2)
    c = 2.0
    logs = np.zeros(2)[:, None] + (c * m_grid**2)[None, :]
    dk = DetectorKernel.tabulated(w_grid, m_grid, logs, log_values=True)
    L = localization_matrix(dk, ms)
    off = np.abs(np.diagonal(L.matrix, offset=1) - math.exp(-c / 4.0))
    assert off.max() < 1e-10
    theta = np.linspace(0.0, 2.0 * math.pi, 256, endpoint=False)
    field = wigner_weyl(L, theta, np.array([0.0, 0.5, 3.0, 17.25]))
    assert field.values.min() > -1e-8


def test_kernel_from_spec_roundtrip():
    dk = kernel_from_spec({"family": "ring-exponential", "a": 2.0})
    assert dk.params["a"] == 2.0
    dk2 = kernel_from_spec(
        {"family": "max-localization", "gamma0": 0.5, "chiral": True}
    )
    assert dk2.params["chiral"] is True
    table = [[w, m, math.exp(-w)] for w in (0.0, 1.0, 2.0) for m in (-1.0, 0.0, 1.0)]
    dk3 = kernel_from_spec({"family": "custom", "table": table})
    assert dk3.family == "custom"
    with pytest.raises(DomainError):
        kernel_from_spec({"family": "nope"})


def test_kernel_spec_validation():
    with pytest.raises(DomainError):
        DetectorKernel.ring_exponential(a=-1.0)
    with pytest.raises(DomainError):
        DetectorKernel.max_localization(A=0.0)

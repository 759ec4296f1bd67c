"""Detection amplitudes: mode sums, Poisson-resummed images, saddle points.

The arrival amplitude of a state psi on the ring is the mode sum

    amp(t, phi) = sum_m psi_m sqrt(|v_m|) exp(i m phi - i omega_m t),

absolutely convergent for normalizable states.  The same quantity can be
rebuilt from line theory: Poisson resummation turns the lattice sum into a
sum over winding images of the line arrival amplitude, each evaluated here
by adaptive quadrature.  The two routes share no code beyond the dispersion
relation, which is what makes their agreement a real cross-check.

The bare (state-free) amplitude is a distribution; it is only evaluated
under an explicit smooth momentum taper, and only state-contracted
amplitudes are physically meaningful.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, QuadratureError, StateError
from .modes import ModeSpace, RotationFrame, omega, rotating_omega, rotating_velocity, velocity
from .specfun import coherent_norm
from .states import CoherentParams, LineProfileOnRing, LineState, RingState, spread_at_time

__all__ = [
    "AmplitudeField",
    "amp_state",
    "amp_ring",
    "amp_poisson",
    "amp_saddle",
    "amp_rotating_split",
    "line_arrival_amp",
]

# modes-per-chunk x grid-points budget for the dense phase matrices
_CHUNK_BUDGET = 4_000_000


@dataclass(frozen=True)
class AmplitudeField:
    """Amplitude samples on a grid, tagged with method and parameters."""

    values: np.ndarray
    t: np.ndarray
    phi: np.ndarray
    method: str
    params: dict = field(default_factory=dict)


def _speed_weights(ms: ModeSpace, m: np.ndarray) -> np.ndarray:
    """sqrt(|v_m|) with the zero mode excluded (Theta(0) = 0 convention)."""
    w = np.empty(m.size)
    nz = m != 0
    w[nz] = np.sqrt(np.abs(velocity(ms, m[nz])))
    w[~nz] = 0.0
    return w


def _mode_sum(coeffs: np.ndarray, m: np.ndarray, freq: np.ndarray, t, phi):
    """sum_m coeffs_m exp(i(m phi - freq_m t)) over a broadcast (t, phi) grid."""
    t_arr, phi_arr = np.broadcast_arrays(
        np.asarray(t, dtype=float), np.asarray(phi, dtype=float)
    )
    shape = t_arr.shape
    tf = t_arr.ravel()
    pf = phi_arr.ravel()
    active = np.abs(coeffs) > 0.0
    c, mm, ww = coeffs[active], m[active], freq[active]
    out = np.zeros(tf.size, dtype=complex)
    if c.size:
        chunk = max(1, _CHUNK_BUDGET // max(tf.size, 1))
        for i in range(0, c.size, chunk):
            sl = slice(i, i + chunk)
            phase = np.exp(
                1j * (mm[sl, None] * pf[None, :] - ww[sl, None] * tf[None, :])
            )
            out += c[sl] @ phase
    if shape == ():
        return complex(out[0])
    return out.reshape(shape)


def amp_state(state: RingState, ms: ModeSpace, t, phi, det=None):
    """Arrival amplitude of a pure state under maximum localization.

    det, if supplied, must be a maximum-localization matrix; general
    localization never factorizes into an amplitude and is handled by the
    probability module instead.
    """
    if not state.is_pure:
        raise StateError("amplitudes need a pure state; use pc_density for mixed")
    if state.modespace != ms:
        raise StateError("state lives on a different mode space")
    if det is not None and not det.is_max_localization:
        raise DomainError(
            "amp_state is only defined for maximum localization; "
            "use probability.pc_density for general detectors"
        )
    m = ms.modes()
    coeffs = state.coeffs * _speed_weights(ms, m)
    return _mode_sum(coeffs, m.astype(float), omega(ms, m), t, phi)


def taper_window(m: np.ndarray, m_max: int, taper_frac: float = 0.1) -> np.ndarray:
    """Cosine taper: 1 up to (1-taper_frac) m_max, smoothly to 0 at m_max."""
    edge = (1.0 - taper_frac) * m_max
    x = np.clip((np.abs(m) - edge) / max(m_max - edge, 1), 0.0, 1.0)
    return np.cos(0.5 * math.pi * x) ** 2


def amp_ring(ms: ModeSpace, t, phi, taper_frac: float = 0.1):
    """Bare arrival amplitude sum_{m>0} sqrt(v_m) e^{i m phi - i omega_m t}, tapered.

    The untapered series is a distribution (it diverges pointwise); the
    smooth momentum window over the last ``taper_frac`` of modes stands in
    for the test function.  Only state-contracted amplitudes are physical.
    """
    m = np.arange(1, ms.m_max + 1)
    coeffs = _speed_weights(ms, m) * taper_window(m, ms.m_max, taper_frac)
    return _mode_sum(coeffs, m.astype(float), omega(ms, m), t, phi)


def line_arrival_amp(x: float, t: float, mu: float, profile=None,
                     k_range=None, rel_tol: float = 1e-10,
                     taper=None, limit: int = 800) -> complex:
    """Line-theory arrival amplitude ∫_0^∞ dk sqrt(v_k) psi~(k) e^{i k x - i omega_k t}.

    profile: callable k -> psi~(k) (complex); None means the bare amplitude,
    which requires a k_range (and usually a taper window) for convergence.
    This is evaluated by adaptive quadrature and serves as the independent
    oracle for the mode-sum amplitudes.  The convergence gate scales with
    rel_tol, so loose tolerances are allowed for the strongly oscillatory
    bare integrand.
    """
    if k_range is None:
        raise DomainError("line amplitude quadrature needs an explicit k_range")
    k_lo, k_hi = k_range

    def integrand(k, part):
        w = math.sqrt(mu * mu + k * k)
        v = k / w if w > 0 else 0.0
        val = math.sqrt(abs(v)) * cmath.exp(1j * (k * x - w * t))
        if profile is not None:
            val *= complex(profile(k))
        if taper is not None:
            val *= taper(k)
        return val.real if part == 0 else val.imag

    re, re_err = quad(integrand, k_lo, k_hi, args=(0,), limit=limit,
                      epsabs=1e-13, epsrel=rel_tol)
    im, im_err = quad(integrand, k_lo, k_hi, args=(1,), limit=limit,
                      epsabs=1e-13, epsrel=rel_tol)
    val = complex(re, im)
    err = re_err + im_err
    if err > max(1e-10, 100.0 * rel_tol * abs(val)):
        raise QuadratureError(
            f"line amplitude quadrature poorly converged at x={x}, t={t}: "
            f"estimate {err:.3e} for |value| {abs(val):.3e}"
        )
    return val


def _image_windings(x0_over_r: float, v_p: float, t: float, sigma_t: float,
                    r: float, n_extra: int = 1) -> range:
    """Winding indices whose image can reach weight above ~1e-12."""
    center = (v_p * t / r - x0_over_r) / (2.0 * math.pi)
    half = (14.0 * sigma_t / r) / (2.0 * math.pi) + n_extra
    return range(math.floor(center - half), math.ceil(center + half) + 1)


def amp_poisson(ms: ModeSpace, t, phi, state: RingState | None = None,
                taper_frac: float = 0.1, rel_tol: float = 1e-10,
                windings=None):
    """Poisson-resummed amplitude: sum of line-theory winding images.

    With a state (built from coherent parameters or a line profile), each
    image is the quadrature amplitude of the corresponding continuum packet;
    without one, the bare tapered amplitude is resummed with the same taper
    as amp_ring.  Images are included until the neglected ones carry less
    than ~1e-12 of the packet weight; an explicit ``windings`` sequence
    overrides that window unchecked (single-image analysis and the like).
    """
    t_arr, phi_arr = np.broadcast_arrays(
        np.asarray(t, dtype=float), np.asarray(phi, dtype=float)
    )
    shape = t_arr.shape
    out = np.zeros(t_arr.size, dtype=complex)
    tf, pf = t_arr.ravel(), phi_arr.ravel()

    if state is None:
        k_hi = ms.m_max / ms.r
        win = (lambda k: taper_window(np.asarray(k * ms.r), ms.m_max, taper_frac))
        bare_tol = max(rel_tol, 1e-8)
        for idx in range(tf.size):
            ti, pi_ = tf[idx], pf[idx]
            ns = windings if windings is not None else range(
                -2, int((ti / ms.r - pi_) / (2 * math.pi)) + 3
            )
            total = 0.0 + 0.0j
            for n in ns:
                x_n = (pi_ + 2.0 * math.pi * n) * ms.r
                total += ms.r * line_arrival_amp(
                    x_n, ti, ms.mu, k_range=(0.0, k_hi), rel_tol=bare_tol,
                    taper=win, limit=2000,
                )
            out[idx] = total
        return complex(out[0]) if shape == () else out.reshape(shape)

    if not state.profiles:
        raise StateError(
            "Poisson resummation needs a state with a continuum profile "
            "(coherent or line-sampled)"
        )

    for weight, prof in state.profiles:
        if isinstance(prof, CoherentParams):
            cp = prof
            sigma = ms.r / (math.sqrt(2.0) * cp.alpha)
            p = cp.xi / ms.r
            line = LineState(p=p, sigma=sigma)
            pref = (
                coherent_norm(cp.xi, cp.alpha)
                * ms.r
                * (math.pi / (2.0 * sigma**2)) ** 0.25
            )
            theta0 = cp.theta
        elif isinstance(prof, LineProfileOnRing):
            line = prof.line
            p = line.p
            sigma = line.sigma
            pref = ms.r / prof.norm
            theta0 = prof.theta0
        else:
            raise StateError(f"unsupported profile type {type(prof).__name__}")

        if p <= 0:
            raise StateError("Poisson images require positive mean momentum")
        eps_p = math.sqrt(ms.mu**2 + p**2)
        v_p = p / eps_p
        k_win = (max(0.0, p - 8.0 / sigma), p + 8.0 / sigma)
        for idx in range(tf.size):
            ti, pi_ = tf[idx], pf[idx]
            sig_t = spread_at_time(line, ms, ti) if ms.mu > 0 else sigma
            ns = windings if windings is not None else _image_windings(
                pi_ - theta0, v_p, ti, sig_t, ms.r
            )
            total = 0.0 + 0.0j
            for n in ns:
                x_n = (pi_ - theta0 + 2.0 * math.pi * n) * ms.r
                total += line_arrival_amp(
                    x_n, ti, ms.mu, profile=line.momentum_profile,
                    k_range=k_win, rel_tol=rel_tol,
                )
            out[idx] += weight * pref * total
    return complex(out[0]) if shape == () else out.reshape(shape)


def amp_saddle(ms: ModeSpace, t, phi, delta_lc: float | None = None):
    """Saddle-point form of the bare massive amplitude, summed over windings.

    Each winding n >= 1 inside the light cone contributes
    sqrt(2 pi i mu r^3 t (phi + 2 pi n)) / [t^2 - (phi+2pi n)^2 r^2]^(3/4)
    exp(-i mu sqrt(t^2 - (phi+2pi n)^2 r^2)), principal branch (sqrt(i) =
    e^{i pi/4}).  Points within delta_lc of any cone are rejected: the
    [t^2 - x^2]^(-3/4) divergence there is an artifact of the approximation.
    """
    if ms.mu <= 0:
        raise DomainError("saddle-point amplitude requires mu > 0")
    if delta_lc is None:
        delta_lc = 10.0 / ms.mu
    t_arr, phi_arr = np.broadcast_arrays(
        np.asarray(t, dtype=float), np.asarray(phi, dtype=float)
    )
    shape = t_arr.shape
    tf, pf = t_arr.ravel(), phi_arr.ravel()
    out = np.zeros(tf.size, dtype=complex)
    root_i = cmath.exp(1j * math.pi / 4.0)
    for idx in range(tf.size):
        ti, pi_ = tf[idx], pf[idx]
        n_hi = int(math.floor((ti / ms.r - pi_) / (2.0 * math.pi))) + 1
        total = 0.0 + 0.0j
        for n in range(1, n_hi + 1):
            x_n = (pi_ + 2.0 * math.pi * n) * ms.r
            gap = ti - x_n
            if abs(gap) < delta_lc:
                raise DomainError(
                    f"evaluation point (t={ti}, phi={pi_}) is within delta_lc="
                    f"{delta_lc} of the winding-{n} light cone"
                )
            if gap <= 0:
                continue
            q = ti * ti - x_n * x_n
            total += (
                root_i
                * math.sqrt(2.0 * math.pi * ms.mu * ms.r**3 * ti * (pi_ + 2 * math.pi * n))
                / q**0.75
                * cmath.exp(-1j * ms.mu * math.sqrt(q))
            )
        out[idx] = total
    return complex(out[0]) if shape == () else out.reshape(shape)


def amp_rotating_split(state: RingState, rf: RotationFrame, t, phi):
    """Rotating-frame amplitudes (D+, D-) split by the sign of the rotating velocity.

    D_pm = sum_m Theta(+-v~_m) psi_m sqrt(|v_m|) e^{i m phi - i omega~_m t};
    modes with v~_m = 0 exactly are assigned to D+ (measure-zero tie-break).
    |D+ + D-|^2 gives the rotating detection profile for maximum localization.
    """
    ms = rf.modespace
    if not state.is_pure:
        raise StateError("rotating split needs a pure state")
    if state.modespace != ms:
        raise StateError("state lives on a different mode space")
    m = ms.modes()
    w = _speed_weights(ms, m)
    vt = np.empty(m.size)
    nz = m != 0
    vt[nz] = rotating_velocity(rf, m[nz])
    vt[~nz] = 0.0
    freq = np.empty(m.size)
    freq[nz] = rotating_omega(rf, m[nz])
    freq[~nz] = ms.mu
    coeffs = state.coeffs * w
    plus = nz & (vt >= 0.0)
    minus = nz & (vt < 0.0)
    mf = m.astype(float)
    d_plus = _mode_sum(np.where(plus, coeffs, 0.0), mf, freq, t, phi)
    d_minus = _mode_sum(np.where(minus, coeffs, 0.0), mf, freq, t, phi)
    return d_plus, d_minus

"""Rotating-ring observables: noise ratio, Sagnac fringes, coincidences.

Rotation leaves the vacuum alone but shifts the kernel argument of the
state-independent noise, giving the ratio eta(Omega_D) > 1 that diverges
logarithmically at the light-speed edge Omega_D r -> 1.  For symmetric
states, the counter-propagating components pick up opposite phases
xi Omega_D t, producing Sagnac fringes in the detection record at the entry
point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .amplitudes import amp_rotating_split
from .errors import DomainError, SeriesError, StateError
from .modes import ModeSpace, RotationFrame, omega, velocity
from .detector import DetectorKernel
from .probability import B_GAMMA, timescales
from .states import RingState

__all__ = [
    "NoiseCurve",
    "SagnacResult",
    "eta",
    "eta_closed_form",
    "noise_curve",
    "sagnac_scan",
    "coincidence_winding",
    "coincidence_report",
]

ETA_TAIL_TOL = 1e-12
ETA_HARD_CAP = 2_000_000


def _eta_sum(dk: DetectorKernel, ms: ModeSpace, omega_d: float) -> float:
    """sum_m R(omega_m - m Omega_D, m) / omega_m with auto-extended cutoff.

    The kernel is evaluated at the literal rotating argument (no support
    clipping).  The cutoff grows until the geometric tail bound drops below
    1e-12 of the partial sum; non-decaying tails raise SeriesError.
    """
    m_max = ms.m_max
    while True:
        m = np.arange(-m_max, m_max + 1)
        m = m[m != 0]
        w = omega(ms, m)
        vals = dk.raw_value(w - m * omega_d, m, r=ms.r)
        terms = vals / w
        total = float(terms.sum())
        if total <= 0:
            raise SeriesError("noise sum vanishes: kernel has no supported modes")
        hi = float(terms[-1])
        lo = float(terms[0])
        prev_hi = float(terms[-2])
        prev_lo = float(terms[1])
        edge = 0.0
        for last, prev in ((hi, prev_hi), (lo, prev_lo)):
            if last <= 0:
                continue
            if prev <= 0 or last >= prev:
                raise SeriesError(
                    "noise series tail is not decreasing; eta sum diverges"
                )
            q = last / prev
            edge += last * q / (1.0 - q)
        if edge < ETA_TAIL_TOL * total:
            return total
        if 2 * m_max > ETA_HARD_CAP:
            raise SeriesError(
                f"eta tail bound {edge:.3e} still above tolerance at "
                f"m_max={m_max}; kernel decays too slowly"
            )
        m_max *= 2


def eta(dk: DetectorKernel, ms: ModeSpace, omega_d: float,
        full_output: bool = False):
    """Rotation-induced noise ratio eta = P0(Omega_D) / P0(0).

    Requires a timelike frame (|Omega_D r| < 1) and a decaying kernel.  For
    the ring-exponential family at mu = 0 this equals
    log(1 - e^(-a(1 - Omega_D r))) / log(1 - e^(-a)) analytically.
    """
    x = omega_d * ms.r
    if abs(x) >= 1.0:
        raise DomainError(f"|Omega_D r| = {abs(x)} >= 1: frame is not timelike")
    num = _eta_sum(dk, ms, omega_d)
    den = _eta_sum(dk, ms, 0.0)
    value = num / den
    if full_output:
        closed = None
        if dk.family == "ring-exponential" and ms.mu == 0:
            closed = eta_closed_form(dk.params["a"], x)
        return value, closed
    return value


def eta_closed_form(a: float, omega_d_r: float) -> float:
    """log(1 - e^(-a(1 - Omega_D r))) / log(1 - e^(-a)).

    Valid for the one-sided exponential kernel at mu = 0; rests on
    sum_m e^(-am)/m = -log(1 - e^(-a)).
    """
    if a <= 0:
        raise DomainError("kernel decay constant must be positive")
    if not -1.0 < omega_d_r < 1.0:
        raise DomainError("need |Omega_D r| < 1")
    return math.log1p(-math.exp(-a * (1.0 - omega_d_r))) / math.log1p(-math.exp(-a))


@dataclass(frozen=True)
class NoiseCurve:
    """Sampled eta(Omega_D r), with closed-form values where they exist."""

    omega_d_r: np.ndarray
    eta: np.ndarray
    eta_closed: np.ndarray | None
    kernel_params: dict
    method: str = "mode-sum"


def noise_curve(dk: DetectorKernel, ms: ModeSpace, omega_d_grid) -> NoiseCurve:
    """Evaluate the noise ratio over a grid of angular velocities."""
    omega_d_grid = np.asarray(omega_d_grid, dtype=float)
    vals = np.array([eta(dk, ms, od) for od in omega_d_grid])
    closed = None
    if dk.family == "ring-exponential" and ms.mu == 0:
        closed = np.array(
            [eta_closed_form(dk.params["a"], od * ms.r) for od in omega_d_grid]
        )
    return NoiseCurve(
        omega_d_r=omega_d_grid * ms.r,
        eta=vals,
        eta_closed=closed,
        kernel_params=dict(dk.params) if dk.family != "custom" else {"family": "custom"},
        method="mode-sum",
    )


@dataclass(frozen=True)
class SagnacResult:
    """Detection density at the entry point with extracted fringe frequency."""

    t: np.ndarray
    density: np.ndarray
    pass_times: np.ndarray
    pass_weights: np.ndarray
    fringe_frequency: float
    expected_frequency: float
    params: dict = field(default_factory=dict)


def sagnac_scan(state: RingState, rf: RotationFrame, t_grid,
                phi: float = 0.0) -> SagnacResult:
    """Scan the rotating detection density and demodulate the Sagnac fringes.

    The state must be symmetric (psi_{-m} = psi_m).  Per-circulation
    detection weights W_n follow cos^2(xi Omega_D t_n); their zero-mean
    demodulation 2 W_n / max(W) - 1 crosses zero with spacing
    pi / (2 xi Omega_D), from which the fringe angular frequency
    is estimated and compared to xi Omega_D.
    """
    ms = rf.modespace
    if not state.is_pure:
        raise StateError("Sagnac scan needs a pure symmetric state")
    sym_err = float(np.max(np.abs(state.coeffs - state.coeffs[::-1])))
    if sym_err > 1e-10:
        raise StateError(
            f"state is not symmetric under m -> -m (max deviation {sym_err:.3e})"
        )
    t_grid = np.asarray(t_grid, dtype=float)
    d_plus, d_minus = amp_rotating_split(state, rf, t_grid, phi)
    density = (B_GAMMA / (2 * math.pi * ms.r)) * np.abs(d_plus + d_minus) ** 2

    occ = state.occupation()
    m = ms.modes()
    pos = m > 0
    m_mean = float(np.sum(np.abs(m[pos]) * occ[pos]) / np.sum(occ[pos]))
    v_char = abs(velocity(ms, m_mean))
    xi = m_mean
    period = 2.0 * math.pi * ms.r / v_char

    # per-circulation weights: integrate density around each expected return
    n_pass = int(t_grid[-1] / period)
    pass_times, pass_weights = [], []
    for n in range(1, n_pass + 1):
        t_n = n * period
        sel = (t_grid >= t_n - period / 2) & (t_grid < t_n + period / 2)
        if np.count_nonzero(sel) < 8:
            continue
        pass_times.append(t_n)
        pass_weights.append(float(np.trapezoid(density[sel], t_grid[sel])))
    pass_times = np.asarray(pass_times)
    pass_weights = np.asarray(pass_weights)
    if pass_times.size < 4:
        raise DomainError("time grid covers too few circulations for fringe analysis")

    u = 2.0 * pass_weights / pass_weights.max() - 1.0
    crossings = []
    for j in range(u.size - 1):
        if u[j] == 0.0 or u[j] * u[j + 1] < 0.0:
            frac = u[j] / (u[j] - u[j + 1])
            crossings.append(pass_times[j] + frac * (pass_times[j + 1] - pass_times[j]))
    if len(crossings) < 2:
        fringe = math.nan
    else:
        spacing = float(np.mean(np.diff(crossings)))
        fringe = math.pi / (2.0 * spacing)
    expected = xi * rf.omega_d
    return SagnacResult(
        t=t_grid,
        density=density,
        pass_times=pass_times,
        pass_weights=pass_weights,
        fringe_frequency=fringe,
        expected_frequency=expected,
        params={"phi": phi, "omega_d": rf.omega_d, "xi": xi},
    )


def coincidence_winding(phi: float, xi: float, omega_d: float) -> float:
    """Winding count n = (pi - phi) / (xi Omega_D) at which counter-propagating
    detections coincide; phi = pi coincides immediately (n = 0)."""
    if omega_d == 0 or xi == 0:
        raise DomainError("coincidence winding needs xi != 0 and Omega_D != 0")
    return (math.pi - phi) / (xi * omega_d)


def coincidence_report(phi: float, xi: float, omega_d: float,
                       ms: ModeSpace, alpha: float) -> dict:
    """Winding estimate plus the observability flag t(n) < T_q."""
    n = coincidence_winding(phi, xi, omega_d)
    v_xi = abs(velocity(ms, xi))
    t_n = abs(n) * 2.0 * math.pi * ms.r / v_xi
    t_q = timescales(ms, xi, alpha).t_quantum
    return {"n": n, "t_n": t_n, "t_quantum": t_q, "observable": t_n < t_q}

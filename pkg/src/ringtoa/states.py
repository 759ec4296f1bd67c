"""Single-particle states on the ring and on the line.

Ring states live on the integer angular-momentum lattice |m| <= m_max, either
as pure coefficient vectors or as dense density matrices.  Line states are
Gaussian packets (and their x-weighted orthogonal partners) used both as the
continuum limit of ring coherent states and as the independent line-theory
oracle: gaussian_line with a time argument evolves the packet by direct
quadrature of its momentum integral, with no semiclassical input.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import CutoffError, DomainError, QuadratureError, StateError
from .modes import ModeSpace
from .specfun import coherent_norm

__all__ = [
    "CoherentParams",
    "LineState",
    "LineProfileOnRing",
    "RingState",
    "coherent_state",
    "from_modes",
    "line_to_ring",
    "gaussian_line",
    "spread_at_time",
    "post_select",
    "symmetric_superposition",
    "state_from_spec",
]

NORM_TOL = 1e-10
TAIL_TOL = 1e-12


@dataclass(frozen=True)
class CoherentParams:
    """Ring coherent state |theta, xi>: mean angle, mean angular momentum, spread."""

    theta: float
    xi: float
    alpha: float

    def __post_init__(self):
        if self.alpha <= 0:
            raise DomainError(f"coherent spread must be > 0, got alpha={self.alpha}")

    def mirrored(self) -> "CoherentParams":
        """Parameters of the m -> -m reflected state."""
        return CoherentParams(theta=-self.theta, xi=-self.xi, alpha=self.alpha)


@dataclass(frozen=True)
class LineState:
    """Gaussian packet on the line, psi(x) = (2 pi sigma^2)^(-1/4) e^(-x^2/4sigma^2 + ipx).

    family 'gaussian-times-x' is the orthogonal partner psi_2(x) = (x/sigma) psi_1(x).
    """

    p: float
    sigma: float
    family: str = "gaussian"

    def __post_init__(self):
        if self.sigma <= 0:
            raise DomainError(f"position spread must be > 0, got sigma={self.sigma}")
        if self.family not in ("gaussian", "gaussian-times-x"):
            raise DomainError(f"unknown line-state family {self.family!r}")

    def momentum_profile(self, k) -> np.ndarray:
        """Momentum wavefunction psi~(k), L2-normalized on the line."""
        k = np.asarray(k, dtype=float)
        base = (2.0 * self.sigma**2 / math.pi) ** 0.25 * np.exp(
            -(self.sigma**2) * (k - self.p) ** 2
        )
        if self.family == "gaussian":
            return base.astype(complex)
        # x psi(x) <-> i d/dk psi~(k); normalized partner is -2i sigma (k-p) psi~_1
        return -2j * self.sigma * (k - self.p) * base

    def position_profile(self, x) -> np.ndarray:
        """Position wavefunction at t = 0."""
        x = np.asarray(x, dtype=float)
        base = (2.0 * math.pi * self.sigma**2) ** -0.25 * np.exp(
            -(x**2) / (4.0 * self.sigma**2) + 1j * self.p * x
        )
        if self.family == "gaussian":
            return base
        return (x / self.sigma) * base


@dataclass(frozen=True)
class LineProfileOnRing:
    """A line momentum profile sampled onto the ring lattice at angle theta0."""

    line: LineState
    theta0: float = 0.0
    # lattice normalization constant, filled in by line_to_ring
    norm: float = 1.0


@dataclass(frozen=True)
class RingState:
    """State on the mode lattice: pure coefficients or a density matrix.

    coeffs is indexed by m + m_max (lattice order -m_max..m_max).  profiles
    carries the continuum momentum profiles the state was built from, when
    known, as (weight, CoherentParams | LineProfileOnRing) pairs; resummation
    paths use them, mode sums never need them.
    """

    modespace: ModeSpace
    coeffs: np.ndarray | None = None
    rho: np.ndarray | None = None
    profiles: tuple = ()
    source_localized: bool = False

    def __post_init__(self):
        n = 2 * self.modespace.m_max + 1
        if (self.coeffs is None) == (self.rho is None):
            raise StateError("exactly one of coeffs (pure) or rho (mixed) is required")
        if self.coeffs is not None:
            c = np.asarray(self.coeffs, dtype=complex)
            if c.shape != (n,):
                raise StateError(f"coeffs must have shape ({n},), got {c.shape}")
            norm2 = float(np.sum(np.abs(c) ** 2))
            if abs(norm2 - 1.0) > NORM_TOL:
                raise StateError(f"pure state not normalized: sum|psi|^2 = {norm2!r}")
            object.__setattr__(self, "coeffs", c)
        else:
            rho = np.asarray(self.rho, dtype=complex)
            if rho.shape != (n, n):
                raise StateError(f"rho must have shape ({n},{n}), got {rho.shape}")
            if not np.allclose(rho, rho.conj().T, atol=1e-12):
                raise StateError("rho is not Hermitian")
            tr = float(np.real(np.trace(rho)))
            if abs(tr - 1.0) > NORM_TOL:
                raise StateError(f"rho trace must be 1, got {tr!r}")
            # full eigencheck only at sizes where it is cheap
            if n <= 2049:
                lo = float(np.linalg.eigvalsh(rho)[0])
                if lo < -1e-10:
                    raise StateError(f"rho not positive semidefinite (min eig {lo:.3e})")
            object.__setattr__(self, "rho", rho)
        if self.source_localized:
            k0 = self.modespace.m_max
            occ0 = (
                abs(self.coeffs[k0]) ** 2
                if self.coeffs is not None
                else abs(self.rho[k0, k0])
            )
            if occ0 > 1e-12:
                raise StateError("source-localized state must have no zero-mode occupation")

    @property
    def is_pure(self) -> bool:
        return self.coeffs is not None

    def density_matrix(self) -> np.ndarray:
        """Dense rho(m, m'); outer product for pure states."""
        if self.rho is not None:
            return self.rho
        return np.outer(self.coeffs, self.coeffs.conj())

    def occupation(self) -> np.ndarray:
        """Diagonal rho(m, m) as a real array over the lattice."""
        if self.coeffs is not None:
            return np.abs(self.coeffs) ** 2
        return np.real(np.diag(self.rho))

    def overlap(self, other: "RingState") -> complex:
        """<self|other> for pure states."""
        if not (self.is_pure and other.is_pure):
            raise StateError("overlap requires pure states")
        return complex(np.vdot(self.coeffs, other.coeffs))


def coherent_state(ms: ModeSpace, cp: CoherentParams) -> RingState:
    """Ring coherent state psi_m = C_xi exp(-(m-xi)^2/(2 alpha^2) - i m theta).

    The cutoff must contain the Gaussian tail: lattice mass beyond m_max
    above 1e-12 raises CutoffError (rule of thumb: m_max >= xi + 8 alpha).
    """
    m = ms.modes().astype(float)
    c = coherent_norm(cp.xi, cp.alpha)
    gauss = np.exp(-((m - cp.xi) ** 2) / (2.0 * cp.alpha**2))
    tail = _gaussian_tail_mass(ms.m_max, cp.xi, cp.alpha)
    if tail > TAIL_TOL:
        raise CutoffError(
            f"m_max={ms.m_max} too small for coherent state (xi={cp.xi}, "
            f"alpha={cp.alpha}): tail mass {tail:.3e} > {TAIL_TOL}"
        )
    coeffs = c * gauss * np.exp(-1j * m * cp.theta)
    return RingState(ms, coeffs=coeffs, profiles=((1.0 + 0j, cp),))


def coherent_tail_mass(ms: ModeSpace, cp: CoherentParams) -> float:
    """Probability mass of the coherent lattice Gaussian beyond |m| = m_max.

    This is the truncation remainder of every series built on the state.
    """
    return _gaussian_tail_mass(ms.m_max, cp.xi, cp.alpha)


def _gaussian_tail_mass(m_max: int, xi: float, alpha: float) -> float:
    c2 = coherent_norm(xi, alpha) ** 2
    ext = np.arange(m_max + 1, m_max + 1 + max(10, int(12 * alpha)))
    up = np.exp(-((ext - xi) ** 2) / alpha**2)
    dn = np.exp(-((-ext - xi) ** 2) / alpha**2)
    return float(c2 * (up.sum() + dn.sum()))


def from_modes(ms: ModeSpace, amplitudes: dict[int, complex]) -> RingState:
    """Pure state from an explicit {m: amplitude} map, normalized here."""
    coeffs = np.zeros(2 * ms.m_max + 1, dtype=complex)
    for m, a in amplitudes.items():
        if abs(m) > ms.m_max:
            raise CutoffError(f"mode m={m} outside lattice |m| <= {ms.m_max}")
        coeffs[m + ms.m_max] = a
    norm = np.linalg.norm(coeffs)
    if norm == 0:
        raise StateError("mode map has no support")
    return RingState(ms, coeffs=coeffs / norm)


def line_to_ring(ms: ModeSpace, ls: LineState, theta0: float = 0.0) -> RingState:
    """Sample a line momentum profile onto the lattice: psi_m ∝ e^(-im theta0) psi~(m/r).

    Valid when the profile width is well inside the cutoff; the edge
    coefficients must be negligible (CutoffError otherwise).
    """
    m = ms.modes().astype(float)
    prof = ls.momentum_profile(m / ms.r)
    amp = np.abs(prof)
    if amp.max() == 0:
        raise StateError("line profile vanishes on the lattice")
    edge = max(amp[0], amp[-1]) / amp.max()
    if edge > 1e-12:
        raise CutoffError(
            f"m_max={ms.m_max} truncates the line profile (edge/max = {edge:.3e})"
        )
    norm = float(np.linalg.norm(prof))
    coeffs = prof / norm * np.exp(-1j * m * theta0)
    return RingState(
        ms,
        coeffs=coeffs,
        profiles=((1.0 + 0j, LineProfileOnRing(ls, theta0, norm)),),
    )


def gaussian_line(
    ls: LineState,
    x: float,
    t: float | None = None,
    mu: float = 0.0,
    rel_tol: float = 1e-9,
) -> complex:
    """Line wavefunction at position x; freely evolved when t is given.

    The evolved value is the quadrature of (2 pi)^(-1/2) ∫ dk psi~(k)
    exp(ikx - i omega_k t) with omega_k = sqrt(mu^2 + k^2).  This is the
    line-theory oracle: no stationary-phase or spreading approximation.
    """
    if t is None:
        return complex(ls.position_profile(x))
    half_width = 8.0 / ls.sigma
    lo, hi = ls.p - half_width, ls.p + half_width

    def integrand(k, part):
        val = ls.momentum_profile(k) * np.exp(1j * (k * x - math.sqrt(mu**2 + k**2) * t))
        return val.real if part == 0 else val.imag

    re, re_err = quad(integrand, lo, hi, args=(0,), limit=400, epsabs=1e-13, epsrel=rel_tol)
    im, im_err = quad(integrand, lo, hi, args=(1,), limit=400, epsabs=1e-13, epsrel=rel_tol)
    val = complex(re, im) / math.sqrt(2.0 * math.pi)
    err = (re_err + im_err) / math.sqrt(2.0 * math.pi)
    if err > max(1e-12, 10.0 * rel_tol * abs(val)):
        raise QuadratureError(
            f"free evolution quadrature did not converge: value {val!r}, "
            f"error estimate {err:.3e}"
        )
    return val


def spread_at_time(ls: LineState, ms: ModeSpace, t: float) -> float:
    """Dispersed packet width sigma(t) = sqrt(sigma^2 + mu^4 t^2 / (4 eps_p^6 sigma^2)).

    eps_p = sqrt(mu^2 + p^2) is the line dispersion energy.  Leading order in
    1/(p sigma); a warning is emitted outside that regime.  The dispersion
    constant is (dv)^2 = (mu^2/eps_p^3)^2 / (4 sigma^2), i.e. the curvature
    of the dispersion relation times the momentum variance 1/(4 sigma^2) of
    the packet; direct quadrature of the evolved packet confirms it.
    """
    if ls.p * ls.sigma < 5.0:
        warnings.warn(
            f"spread_at_time assumes p*sigma >> 1, got {ls.p * ls.sigma:.3g}",
            stacklevel=2,
        )
    eps_p = math.sqrt(ms.mu**2 + ls.p**2)
    return math.sqrt(ls.sigma**2 + ms.mu**4 * t**2 / (4.0 * eps_p**6 * ls.sigma**2))


def post_select(state: RingState, weights) -> RingState:
    """Reweight by the detector absorption and renormalize to unit trace.

    weights: absorption a(m) as an array aligned with the mode lattice, or
    any object with an ``of_lattice(ms)`` method (an AbsorptionProfile).
    rho_ps(m, m') = rho(m, m') sqrt(a(m) a(m')) / trace.
    """
    ms = state.modespace
    if hasattr(weights, "of_lattice"):
        a = weights.of_lattice(ms)
    else:
        a = np.asarray(weights, dtype=float)
    if a.shape != (2 * ms.m_max + 1,):
        raise StateError(f"absorption weights must match the lattice, got {a.shape}")
    if np.any(a < 0):
        raise StateError("absorption weights must be nonnegative")
    sq = np.sqrt(a)
    if state.is_pure:
        new = state.coeffs * sq
        nrm2 = float(np.sum(np.abs(new) ** 2))
        if nrm2 <= 0:
            raise StateError("post-selection annihilates the state (zero detection)")
        return RingState(ms, coeffs=new / math.sqrt(nrm2))
    rho = state.rho * np.outer(sq, sq)
    tr = float(np.real(np.trace(rho)))
    if tr <= 0:
        raise StateError("post-selection annihilates the state (zero detection)")
    return RingState(ms, rho=rho / tr)


def state_from_spec(ms: ModeSpace, spec: dict) -> RingState:
    """Build a state from the JSON schema {kind: ..., ...params}.

    kinds: coherent {theta, xi, alpha}; gaussian-line {p, sigma, family?,
    theta0?}; mode-list {modes: {m: amp | [re, im]}}; symmetric {base: spec}.
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise StateError("state spec must be an object with a 'kind' field")
    kind = spec["kind"]
    if kind == "coherent":
        cp = CoherentParams(
            theta=float(spec.get("theta", 0.0)),
            xi=float(spec["xi"]),
            alpha=float(spec["alpha"]),
        )
        return coherent_state(ms, cp)
    if kind == "gaussian-line":
        ls = LineState(
            p=float(spec["p"]),
            sigma=float(spec["sigma"]),
            family=spec.get("family", "gaussian"),
        )
        return line_to_ring(ms, ls, theta0=float(spec.get("theta0", 0.0)))
    if kind == "mode-list":
        amps = {}
        for key, val in spec["modes"].items():
            amps[int(key)] = complex(val[0], val[1]) if isinstance(val, list) else complex(val)
        return from_modes(ms, amps)
    if kind == "symmetric":
        return symmetric_superposition(ms, state_from_spec(ms, spec["base"]))
    raise StateError(f"unknown state kind {kind!r}")


def symmetric_superposition(ms: ModeSpace, base: RingState) -> RingState:
    """Normalized state with psi_(-m) = psi_m, as used in the Sagnac analysis."""
    if not base.is_pure:
        raise StateError("symmetric superposition needs a pure base state")
    pos = base.coeffs[ms.m_max + 1 :]
    if float(np.sum(np.abs(pos) ** 2)) == 0.0:
        raise StateError("base state has no support at m > 0")
    sym = base.coeffs + base.coeffs[::-1]
    norm = np.linalg.norm(sym)
    profiles = ()
    if base.profiles and all(isinstance(p, CoherentParams) for _, p in base.profiles):
        scaled = [(w / norm, p) for w, p in base.profiles]
        mirrored = [(w / norm, p.mirrored()) for w, p in base.profiles]
        profiles = tuple(scaled + mirrored)
    return RingState(ms, coeffs=sym / norm, profiles=profiles)

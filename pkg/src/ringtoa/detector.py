"""Detector kernels, localization matrices, and absorption profiles.

A detector is summarized by a nonnegative kernel R(omega, m) supported on
timelike, positive-energy arguments.  Two analytic families are built in:

* ``max-localization``: A exp(-gamma1 |m|/r - gamma0 omega), the family whose
  localization matrix is identically 1 (sharpest possible record);
* ``ring-exponential``: A exp(-a r omega) restricted to m > 0, which on shell
  (mu = 0) reduces to the one-sided profile exp(-a m) used for the rotation
  noise analysis.

Arbitrary detectors enter as tabulated kernels with bilinear interpolation.
The localization matrix is the midpoint ratio
L(m, m') = R((w+w')/2, (m+m')/2) / sqrt(R(w, m) R(w', m')); physical kernels
must keep it in [0, 1], and the builder rejects anything above 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import DomainError, SupportError, UnphysicalKernelError
from .modes import ModeSpace, RotationFrame, omega, rotating_omega
from .specfun import sinc

__all__ = [
    "DetectorKernel",
    "AbsorptionProfile",
    "LocalizationMatrix",
    "WignerWeylField",
    "kernel_eval",
    "kernel_from_spec",
    "localization_matrix",
    "absorption",
    "wigner_weyl",
]

L_UPPER_TOL = 1e-12


@dataclass(frozen=True)
class DetectorKernel:
    """Detector response kernel R(omega, m).

    Use the classmethod constructors; ``params`` holds the family constants.
    The overall scale A cancels in localization matrices and in
    trace-normalized probabilities, so only ratios of kernel values matter.
    """

    family: str
    params: dict = field(default_factory=dict)

    @classmethod
    def max_localization(cls, A: float = 1.0, gamma0: float = 0.0, gamma1: float = 0.0,
                         chiral: bool = False) -> "DetectorKernel":
        """Exponential family A exp(-gamma1 |m|/r - gamma0 omega).

        chiral=True additionally restricts support to m > 0 (detector coupled
        to right-movers only), which keeps gamma1 > 0 kernels physical on the
        full lattice.
        """
        if A <= 0 or gamma0 < 0 or gamma1 < 0:
            raise DomainError("need A > 0 and gamma0, gamma1 >= 0")
        return cls("max-localization",
                   {"A": A, "gamma0": gamma0, "gamma1": gamma1, "chiral": chiral})

    @classmethod
    def ring_exponential(cls, a: float, A: float = 1.0) -> "DetectorKernel":
        """One-sided kernel A exp(-a r omega) theta(m); on shell at mu=0 it is A e^(-a m)."""
        if a <= 0 or A <= 0:
            raise DomainError("need a > 0 and A > 0")
        return cls("ring-exponential", {"A": A, "a": a})

    # log-value floor marking zero/off-support table cells
    _LOG_FLOOR = -1e6

    @classmethod
    def tabulated(cls, omega_grid, m_grid, values,
                  log_values: bool = False) -> "DetectorKernel":
        """Custom kernel from a table over (omega, m), interpolated bilinearly
        in log space (exact for exponential-family kernels, and free of the
        convexity overshoot that would spuriously push midpoint ratios above
        1 for smooth positive kernels).  Zero cells and points outside the
        table evaluate to zero.  With log_values=True the table entries are
        log R directly, which permits kernels whose linear values overflow.
        """
        og = np.asarray(omega_grid, dtype=float)
        mg = np.asarray(m_grid, dtype=float)
        vals = np.asarray(values, dtype=float)
        if vals.shape != (og.size, mg.size):
            raise DomainError(
                f"table shape {vals.shape} does not match grids ({og.size},{mg.size})"
            )
        if log_values:
            logs = vals
        else:
            if np.any(vals < 0):
                raise DomainError("kernel table must be nonnegative")
            with np.errstate(divide="ignore"):
                logs = np.where(vals > 0, np.log(np.where(vals > 0, vals, 1.0)),
                                cls._LOG_FLOOR)
        interp = RegularGridInterpolator(
            (og, mg), logs, bounds_error=False, fill_value=cls._LOG_FLOOR
        )
        return cls("custom", {"interp": interp})

    def raw_value(self, omega_val, m, r: float = 1.0) -> np.ndarray:
        """Kernel functional form at literal arguments, no support clipping.

        This is the evaluation used for rotating-frame energies, where the
        literal argument may lie outside the static support cone.
        """
        w = np.asarray(omega_val, dtype=float)
        m = np.asarray(m, dtype=float)
        if self.family == "max-localization":
            p = self.params
            out = p["A"] * np.exp(-p["gamma1"] * np.abs(m) / r - p["gamma0"] * w)
            if p["chiral"]:
                out = np.where(m > 0, out, 0.0)
        elif self.family == "ring-exponential":
            p = self.params
            out = np.where(m > 0, p["A"] * np.exp(-p["a"] * r * w), 0.0)
        else:
            pts = np.stack(np.broadcast_arrays(w, m), axis=-1)
            logs = self.params["interp"](pts)
            # half a floor contribution still underflows exp to zero
            out = np.where(logs > 0.25 * self._LOG_FLOOR, np.exp(logs), 0.0)
        return out

    def log_raw(self, omega_val, m, r: float = 1.0):
        """log of raw_value (literal arguments, no support clipping).

        Lets the localization builder form midpoint ratios in the exponent,
        avoiding over/underflow; off-support points come back below
        _LOG_FLOOR / 2.
        """
        w = np.asarray(omega_val, dtype=float)
        m = np.asarray(m, dtype=float)
        if self.family == "max-localization":
            p = self.params
            logv = math.log(p["A"]) - p["gamma1"] * np.abs(m) / r - p["gamma0"] * w
            if p["chiral"]:
                logv = np.where(m > 0, logv, -np.inf)
            return logv
        if self.family == "ring-exponential":
            p = self.params
            return np.where(m > 0, math.log(p["A"]) - p["a"] * r * w, -np.inf)
        pts = np.stack(np.broadcast_arrays(w, m), axis=-1)
        return self.params["interp"](pts)


def kernel_from_spec(spec: dict) -> DetectorKernel:
    """Build a kernel from the JSON schema {family: ..., ...params}.

    families: max-localization {A?, gamma0?, gamma1?, chiral?};
    ring-exponential {a, A?}; custom {table: [[omega, m, value], ...]} with
    the table points forming a rectangular (omega, m) grid.
    """
    if not isinstance(spec, dict) or "family" not in spec:
        raise DomainError("kernel spec must be an object with a 'family' field")
    family = spec["family"]
    if family == "max-localization":
        return DetectorKernel.max_localization(
            A=float(spec.get("A", 1.0)),
            gamma0=float(spec.get("gamma0", 0.0)),
            gamma1=float(spec.get("gamma1", 0.0)),
            chiral=bool(spec.get("chiral", False)),
        )
    if family == "ring-exponential":
        return DetectorKernel.ring_exponential(
            a=float(spec["a"]), A=float(spec.get("A", 1.0))
        )
    if family == "custom":
        rows = np.asarray(spec["table"], dtype=float)
        if rows.ndim != 2 or rows.shape[1] != 3:
            raise DomainError("custom kernel table must be rows of [omega, m, value]")
        og = np.unique(rows[:, 0])
        mg = np.unique(rows[:, 1])
        if og.size * mg.size != rows.shape[0]:
            raise DomainError("custom kernel table must cover a full (omega, m) grid")
        vals = np.zeros((og.size, mg.size))
        oi = np.searchsorted(og, rows[:, 0])
        mi = np.searchsorted(mg, rows[:, 1])
        vals[oi, mi] = rows[:, 2]
        return DetectorKernel.tabulated(og, mg, vals)
    raise DomainError(f"unknown kernel family {family!r}")


def kernel_eval(dk: DetectorKernel, omega_val, m, r: float = 1.0,
                enforce_support: bool = True) -> np.ndarray | float:
    """Evaluate R(omega, m); zero for omega < 0 or spacelike |m|/r > omega.

    enforce_support=False skips the cone test (rotating-frame convention:
    the noise ratio evaluates the kernel at omega_m - m Omega_D literally).
    """
    w = np.asarray(omega_val, dtype=float)
    m_arr = np.asarray(m, dtype=float)
    out = dk.raw_value(w, m_arr, r=r)
    if enforce_support:
        ok = (w >= 0) & (np.abs(m_arr) / r <= w * (1.0 + 1e-12))
        out = np.where(ok, out, 0.0)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class AbsorptionProfile:
    """Per-mode absorption a(m) ∝ R(omega_m, m) / (2|m|), a(0) = 0.

    The overall coupling constant is set to 1; post-selection renormalizes,
    so only the m-dependence is physical.
    """

    modespace: ModeSpace
    values: np.ndarray

    def of_lattice(self, ms: ModeSpace) -> np.ndarray:
        if ms != self.modespace:
            raise DomainError("absorption profile built for a different mode space")
        return self.values

    def at(self, m: int) -> float:
        return float(self.values[m + self.modespace.m_max])


def absorption(dk: DetectorKernel, ms: ModeSpace) -> AbsorptionProfile:
    """Absorption coefficients on the lattice; zero mode excluded."""
    m = ms.modes()
    w = omega(ms, m)
    vals = kernel_eval(dk, w, m, r=ms.r)
    safe = np.where(m == 0, 1, np.abs(m)).astype(float)
    a = np.where(m == 0, 0.0, vals / (2.0 * safe))
    return AbsorptionProfile(ms, a)


@dataclass(frozen=True)
class LocalizationMatrix:
    """Localization operator matrix over the mode lattice.

    ``on_support`` marks modes where the on-shell kernel is positive; rows
    and columns outside support are zero.  ``is_max_localization`` is set
    when every supported entry equals 1, enabling factorized fast paths.
    """

    modespace: ModeSpace
    matrix: np.ndarray
    on_support: np.ndarray
    frame: RotationFrame | None = None

    @property
    def is_max_localization(self) -> bool:
        sup = self.on_support
        block = self.matrix[np.ix_(sup, sup)]
        return bool(block.size) and bool(np.all(block == 1.0))

    def require_support(self, occupation: np.ndarray, tol: float = 1e-14):
        """Raise SupportError if the state occupies unsupported modes."""
        bad = (~self.on_support) & (occupation > tol)
        if np.any(bad):
            ms = self.modespace
            offenders = ms.modes()[bad]
            raise SupportError(
                f"state occupies modes outside detector support: {offenders[:10].tolist()}"
                + ("..." if offenders.size > 10 else "")
            )


def localization_matrix(dk: DetectorKernel, ms: ModeSpace,
                        frame: RotationFrame | None = None) -> LocalizationMatrix:
    """Midpoint-ratio localization matrix, static or rotating.

    Static energies are on shell; with a frame the rotating energies
    omega_m - m Omega_D replace them (and the kernel is evaluated literally,
    without re-imposing the static support cone).  Kernels whose ratio
    exceeds 1 anywhere on support are rejected as unphysical.

    For the analytic families the energy dependence of the ratio cancels in
    the exponent before any arithmetic, so maximum localization comes out as
    exactly 1.0 (statically and in rotation).
    """
    m = ms.modes().astype(float)
    if frame is not None and frame.modespace != ms:
        raise DomainError("frame built over a different mode space")

    if dk.family == "max-localization":
        # ratio = exp(-gamma1 (|m+m'|/2 - (|m|+|m'|)/2)/r); gamma0 cancels
        p = dk.params
        sup = (m > 0) if p["chiral"] else np.ones_like(m, dtype=bool)
        gap = np.abs(0.5 * (m[:, None] + m[None, :])) - 0.5 * (
            np.abs(m)[:, None] + np.abs(m)[None, :]
        )
        L = np.where(sup[:, None] & sup[None, :],
                     np.exp(-(p["gamma1"] / ms.r) * gap), 0.0)
    elif dk.family == "ring-exponential":
        # exp(-a r omega) cancels exactly; support is the m > 0 sector
        sup = m > 0
        L = np.where(sup[:, None] & sup[None, :], 1.0, 0.0)
    else:
        if frame is None:
            energies = omega(ms, m)
        else:
            energies = rotating_omega(frame, m)
        mid_m = 0.5 * (m[:, None] + m[None, :])
        mid_w = 0.5 * (energies[:, None] + energies[None, :])
        logs = np.asarray(dk.log_raw(energies, m, r=ms.r))
        sup = logs > 0.25 * DetectorKernel._LOG_FLOOR
        if frame is None:
            sup &= (energies >= 0) & (np.abs(m) / ms.r <= energies * (1.0 + 1e-12))
        log_mid = np.asarray(dk.log_raw(mid_w, mid_m, r=ms.r))
        expo = log_mid - 0.5 * (logs[:, None] + logs[None, :])
        pair = sup[:, None] & sup[None, :]
        with np.errstate(over="ignore"):
            L = np.where(pair & (expo > 0.25 * DetectorKernel._LOG_FLOOR),
                         np.exp(np.where(pair, expo, 0.0)), 0.0)

    np.fill_diagonal(L, np.where(sup, 1.0, 0.0))
    worst = float(L.max(initial=0.0))
    if worst > 1.0 + L_UPPER_TOL:
        raise UnphysicalKernelError(
            f"localization matrix exceeds 1 (max {worst!r}): kernel violates "
            "positivity of probabilities"
        )
    np.clip(L, 0.0, 1.0, out=L)
    return LocalizationMatrix(ms, L, sup, frame=frame)


@dataclass(frozen=True)
class WignerWeylField:
    """Phase-space transform samples with the diagonal truncation estimate.

    marginal_truncation[i] is 1 - sum_m sinc(pi (p_i - m)) over the retained
    lattice: the exact deficit of the theta-marginal caused by truncation.
    It vanishes identically at integer p and decays like p/m_max^2 otherwise.
    """

    values: np.ndarray
    theta_grid: np.ndarray
    p_grid: np.ndarray
    marginal_truncation: np.ndarray


def wigner_weyl(op: LocalizationMatrix, theta_grid, p_grid) -> WignerWeylField:
    """Wigner-Weyl transform of the localization operator on a (p, theta) grid.

    L~(theta, p) = (1/2pi) sum_{m,m'} L(m,m') e^{i(m'-m)theta}
                   sinc(pi (p - (m+m')/2)).
    Returned values have shape (len(p_grid), len(theta_grid)); they are real
    because L is real-symmetric.
    """
    theta_grid = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    p_grid = np.atleast_1d(np.asarray(p_grid, dtype=float))
    ms = op.modespace
    m = ms.modes().astype(float)
    n = m.size
    out = np.zeros((p_grid.size, theta_grid.size))
    for d in range(0, n):
        band = np.diagonal(op.matrix, offset=d)
        if not np.any(band != 0.0):
            continue
        centers = m[: n - d] + 0.5 * d
        s = sinc(math.pi * (p_grid[:, None] - centers[None, :]))
        coeff = s @ band
        if d == 0:
            out += coeff[:, None]
        else:
            out += 2.0 * np.outer(coeff, np.cos(d * theta_grid))
    out /= 2.0 * math.pi
    trunc = 1.0 - np.asarray(
        [float(np.sum(sinc(math.pi * (p - m)))) for p in p_grid]
    )
    return WignerWeylField(out, theta_grid, p_grid, trunc)

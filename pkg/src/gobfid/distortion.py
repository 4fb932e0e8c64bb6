"""Frequency-distortion analysis of a basis pole set.

The basis maps the unit circle onto itself through the phase of its
generating all-pass.  The density of that map,

    beta(w) = sum_k (1 - |p_k|^2) / |1 - conj(p_k) e^{iw}|^2  > 0,

equals the squared norm of the first basis block on the circle, and the
*distortion rate*

    chi(w) = w * beta(w) / pi

measures how strongly the identification criterion weights (log-scaled)
frequency w.  Integrating beta/pi over [0, pi] gives exactly the pole
count, i.e. one unit of weight per pole.

Extremum structure of chi for a single pole p = rho * e^{i sigma} in modal
form (rho = exp(-zeta*w0), sigma = sqrt(1-zeta^2)*w0):

    chi is increasing at w iff g(w) >= 0,
    g(w) = (1+rho^2)/(2 rho) - cos(w - sigma) - w sin(w - sigma),

and since (1+rho^2)/(2 rho) = cosh(zeta*w0), chi increases on all of
[0, pi] iff cosh(zeta*w0) - sqrt(1-zeta^2)*w0 >= pi/2.  The cosh here is
essential: replacing it with cos (an easy slip, since sigma appears inside
cosines elsewhere) misclassifies every real pole; the dense-grid tests pin
the cosh form.  For real poles the predicate reduces to an interior
maximum (and then a minimum) existing iff p > (pi - sqrt(pi^2 - 4))/2.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.integrate
import scipy.optimize

from .basis import BasisSpec

REAL_POLE_THRESHOLD = (np.pi - np.sqrt(np.pi**2 - 4.0)) / 2.0


# ---------------------------------------------------------------------------
# modal parametrization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModalPole:
    """Continuous-style modal parameters of a discrete pole.

    omega_o is the natural frequency (rad/sample), zeta in (0, 1] the
    damping; the pole is exp(-zeta*omega_o) * exp(i*sqrt(1-zeta^2)*omega_o).
    """

    omega_o: float
    zeta: float

    def __post_init__(self):
        if self.omega_o <= 0:
            raise ValueError("natural frequency must be positive")
        if not 0 < self.zeta <= 1:
            raise ValueError("damping must lie in (0, 1]")

    @property
    def pole(self) -> complex:
        rho = np.exp(-self.zeta * self.omega_o)
        sigma = np.sqrt(1.0 - self.zeta**2) * self.omega_o
        return rho * np.exp(1j * sigma)

    @classmethod
    def from_pole(cls, p: complex) -> "ModalPole":
        p = complex(p)
        r = abs(p)
        if r == 0.0:
            raise ValueError("the origin pole has no modal form")
        if r >= 1.0:
            raise ValueError("pole must lie strictly inside the unit circle")
        sigma = abs(np.angle(p))
        lr = np.log(r)
        omega_o = float(np.hypot(lr, sigma))
        zeta = float(-lr / omega_o)
        return cls(omega_o=omega_o, zeta=zeta)


# ---------------------------------------------------------------------------
# density and distortion rate
# ---------------------------------------------------------------------------

def phase_density(spec: BasisSpec, omega, per_pole: bool = False):
    """beta(w): derivative of the all-pass phase map; strictly positive.

    With per_pole=True returns shape (..., n_poles) with one addend per
    pole (in spec order).
    """
    w = np.asarray(omega, dtype=float)
    ej = np.exp(1j * w)
    terms = []
    for p in spec.poles:
        r2 = abs(p) ** 2
        terms.append((1.0 - r2) / np.abs(1.0 - np.conj(p) * ej) ** 2)
    stacked = np.stack(terms, axis=-1)
    return stacked if per_pole else stacked.sum(axis=-1)


def distortion_rate(spec: BasisSpec, omega):
    """chi(w) = w * beta(w) / pi (zero at w = 0, even extension)."""
    w = np.asarray(omega, dtype=float)
    return w * phase_density(spec, w) / np.pi


def chi_conservation(spec: BasisSpec, per_pole: bool = True) -> float:
    """Integral of chi over log-frequency, i.e. (1/pi) * int_0^pi beta dw.

    The raw value is exactly the pole count; with per_pole=True (default)
    the result is divided by n_poles so the expected value is 1.
    """
    angles = sorted({abs(np.angle(p)) for p in spec.poles if abs(p) > 0})
    points = [a for a in angles if 1e-12 < a < np.pi - 1e-12]

    def f(w):
        return phase_density(spec, w) / np.pi

    val, _ = scipy.integrate.quad(f, 0.0, np.pi, points=points or None,
                                  limit=400, epsabs=1e-12, epsrel=1e-10)
    return float(val / spec.n_poles) if per_pole else float(val)


def chi_curve(spec: BasisSpec, n_points: int = 2000, omega_min: float = 1e-5,
              ) -> tuple[np.ndarray, np.ndarray]:
    """Log-spaced frequency grid and chi values, for plotting/CSV export."""
    w = np.geomspace(omega_min, np.pi, int(n_points))
    return w, distortion_rate(spec, w)


# ---------------------------------------------------------------------------
# extremum structure for a single pole
# ---------------------------------------------------------------------------

@dataclass
class ChiExtremaReport:
    pole: complex
    omega_o: float
    zeta: float
    hypothesis_ok: bool
    threshold_value: float  # cosh(zeta*w0) - sqrt(1-zeta^2)*w0, vs pi/2
    classification: str  # "max-at-pi" | "interior-max" | "interior-max-min"
    omega_max: float
    chi_max: float
    omega_min: Optional[float] = None
    chi_min: Optional[float] = None


def _growth_indicator(rho: float, sigma: float):
    lead = (1.0 + rho * rho) / (2.0 * rho)

    def g(w):
        return lead - np.cos(w - sigma) - w * np.sin(w - sigma)

    return g


def chi_extrema(p: complex, bisect_tol: float = 1e-10) -> ChiExtremaReport:
    """Locate and classify the extrema of chi on (0, pi] for one pole."""
    modal = ModalPole.from_pole(p)
    rho = abs(complex(p))
    sigma = abs(np.angle(complex(p)))
    spec1 = BasisSpec((complex(p),))

    hypothesis_ok = modal.zeta**2 >= 1.0 - np.pi**2 / (4.0 * modal.omega_o**2)
    threshold = float(np.cosh(modal.zeta * modal.omega_o)
                      - np.sqrt(max(0.0, 1.0 - modal.zeta**2)) * modal.omega_o)

    g = _growth_indicator(rho, sigma)
    # grid dense both in log (near 0) and linearly (across [0, pi])
    grid = np.unique(np.concatenate([
        np.geomspace(1e-9, np.pi, 2048),
        np.linspace(0.0, np.pi, 4097)[1:],
    ]))
    vals = g(grid)

    roots = []
    for i in range(len(grid) - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            roots.append(grid[i])
        elif a * b < 0.0:
            roots.append(scipy.optimize.brentq(g, grid[i], grid[i + 1],
                                               xtol=bisect_tol))
    # keep alternating sign-change roots: first down-crossing is the max
    down = [r for r in roots if g(r - 1e-12) > 0 > g(r + 1e-12)
            or (g(max(r - 1e-9, 1e-12)) > 0 and g(min(r + 1e-9, np.pi)) < 0)]
    up = [r for r in roots if r not in down]

    if not down:
        chi_pi = float(distortion_rate(spec1, np.pi))
        return ChiExtremaReport(pole=complex(p), omega_o=modal.omega_o,
                                zeta=modal.zeta, hypothesis_ok=hypothesis_ok,
                                threshold_value=threshold,
                                classification="max-at-pi",
                                omega_max=float(np.pi), chi_max=chi_pi)

    w_max = float(down[0])
    chi_max = float(distortion_rate(spec1, w_max))
    later_up = [r for r in up if r > w_max]
    if later_up:
        w_min = float(later_up[0])
        return ChiExtremaReport(pole=complex(p), omega_o=modal.omega_o,
                                zeta=modal.zeta, hypothesis_ok=hypothesis_ok,
                                threshold_value=threshold,
                                classification="interior-max-min",
                                omega_max=w_max, chi_max=chi_max,
                                omega_min=w_min,
                                chi_min=float(distortion_rate(spec1, w_min)))
    return ChiExtremaReport(pole=complex(p), omega_o=modal.omega_o,
                            zeta=modal.zeta, hypothesis_ok=hypothesis_ok,
                            threshold_value=threshold,
                            classification="interior-max",
                            omega_max=w_max, chi_max=chi_max)

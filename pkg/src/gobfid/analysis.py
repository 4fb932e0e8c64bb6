"""Asymptotic-bias analysis: spectra, equivalent errors, limit criterion.

Every scheme's prediction error can be rewritten against the truth
(y = G u + W e, or y = G u + v for a lumped disturbance) as

    eps_eq = R [(G - Ghat) u + (W - What) e] + e     (hrls / herls)
    eps_eq = R (G - Ghat) u + v                      (holoe)

with R = den_hat / charpoly the denominator ratio of the estimate and
What the scheme's implied noise model (charpoly/den_hat for hrls, the
estimated noise filter for herls).  For hrls this expression is not an
approximation: at fixed parameters it is algebraically identical to the
one-step prediction error, so it is computed here by replaying the
frozen identification kernel (same code path, bitwise identical).

The stationary points of the mean adaptation direction minimize

    J = int_{-pi}^{pi} |R|^2 |G - Ghat|^2 S_u
                      + |R W - R What|^2 S_e   dw          (noise-feeding
                                                            schemes)

and var(eps_eq) = J/(2 pi) + var(e) when e is white, because the cross
term R W - R What is strictly proper.  Spectral densities S follow the
convention var(x) = (1/2 pi) int_{-pi}^{pi} S(w) dw, so unit-variance
white noise has S = 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
import scipy.signal

from . import _kernels
from .adaptation import scheme_structure
from .basis import filter_bank_run, realization_for
from .lti import RationalModel, signal_samples, simulate
from .predictor import (GobfResponse, ParameterVector,
                        denominator_ratio_filter, simulate_model_output,
                        simulate_noise_output)


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------

@dataclass
class SpectralDensity:
    """Tabulated power density on [0, pi], symmetric by convention."""

    omega: np.ndarray
    density: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        self.density = np.asarray(self.density, dtype=float)
        if self.omega.shape != self.density.shape or self.omega.ndim != 1:
            raise ValueError("omega and density must be equal-length vectors")

    def at(self, omegas) -> np.ndarray:
        return np.interp(np.abs(np.asarray(omegas, dtype=float)),
                         self.omega, self.density)

    def variance(self) -> float:
        """(1/pi) * trapezoid over [0, pi] (the two-sided variance)."""
        return float(np.trapezoid(self.density, self.omega) / np.pi)


SpectrumLike = Union[float, SpectralDensity, Callable[[np.ndarray], np.ndarray]]


def _density_at(s: SpectrumLike, omegas: np.ndarray) -> np.ndarray:
    if isinstance(s, SpectralDensity):
        return s.at(omegas)
    if callable(s):
        return np.asarray(s(omegas), dtype=float)
    return float(s) * np.ones_like(omegas)


def estimate_spectrum(x, nperseg: Optional[int] = None,
                      window: str = "hann") -> SpectralDensity:
    """Welch estimate scaled so unit white noise gives density 1."""
    x = signal_samples(x)
    if nperseg is None:
        nperseg = int(min(4096, max(64, x.size // 8)))
    f, pxx = scipy.signal.welch(x, fs=2.0 * np.pi, window=window,
                                nperseg=min(nperseg, x.size))
    return SpectralDensity(omega=f, density=np.pi * pxx,
                           meta={"nperseg": int(min(nperseg, x.size)),
                                 "window": window, "n_samples": int(x.size)})


# ---------------------------------------------------------------------------
# equivalent prediction error
# ---------------------------------------------------------------------------

def equivalent_prediction_error(scheme: str, estimate: ParameterVector,
                                truth: Optional[RationalModel] = None,
                                u=None, y=None, e=None, v=None,
                                backend: Optional[str] = None) -> np.ndarray:
    """Equivalent error sequence of a fixed estimate over a record.

    hrls needs (u, y) and replays the frozen kernel (exact identity);
    herls needs (u, e) plus the truth; holoe needs (u, v) plus the truth.
    A truth with ``noise_num`` None is taken as unit noise shaping W = 1.
    Returns an array aligned with the record (index 0 included).
    """
    structure = scheme_structure(scheme)
    if estimate.config.structure != structure:
        raise ValueError(f"estimate has structure "
                         f"{estimate.config.structure!r}, scheme {scheme!r} "
                         f"needs {structure!r}")
    if u is None:
        raise ValueError("the input record is required")
    u = signal_samples(u)

    if scheme == "hrls":
        if y is None:
            raise ValueError("hrls needs the output record")
        y = signal_samples(y)
        if y.size != u.size:
            raise ValueError("records must have equal length")
        cfg = estimate.config
        real = realization_for(cfg.spec)
        out = _kernels.run_loop(
            _kernels.ARX, real.A, real.B, real.C, real.D, cfg.n_sections,
            u, y, estimate.theta, np.eye(cfg.n_params), 1.0, 1.0,
            True, False, np.inf, 0, backend=backend)
        full = np.empty(u.size)
        full[0] = y[0]
        full[1:] = out["eps"]
        return full

    if truth is None:
        raise ValueError(f"{scheme} needs the true model")
    gu = simulate(truth, u).samples
    gu_hat = simulate_model_output(estimate, u)

    if scheme == "herls":
        if e is None:
            raise ValueError("herls needs the white noise record")
        e = signal_samples(e)
        if e.size != u.size:
            raise ValueError("records must have equal length")
        we = e if truth.noise_num is None else \
            scipy.signal.lfilter(truth.noise_num, truth.den, e)
        we_hat = simulate_noise_output(estimate, e)
        return denominator_ratio_filter(
            estimate, (gu - gu_hat) + (we - we_hat)) + e

    # holoe
    if v is None:
        raise ValueError("holoe needs the output disturbance record")
    v = signal_samples(v)
    if v.size != u.size:
        raise ValueError("records must have equal length")
    return denominator_ratio_filter(estimate, gu - gu_hat) + v


def regressor_filter_error(estimate: ParameterVector, u, y) -> np.ndarray:
    """Filtering form of the hrls error: (den/charpoly)y - (num/charpoly)u.

    Independent of the kernel code path; used to cross-check the replay
    identity.
    """
    u = signal_samples(u)
    y = signal_samples(y)
    cfg = estimate.config
    yb = filter_bank_run(cfg.spec, cfg.n_sections, y)
    ub = filter_bank_run(cfg.spec, cfg.n_sections, u)
    return (y + yb @ estimate.y_blocks.reshape(-1)
            - ub @ estimate.u_blocks.reshape(-1))


# ---------------------------------------------------------------------------
# limit criterion and band fit
# ---------------------------------------------------------------------------

def limit_criterion(scheme: str, truth: RationalModel,
                    estimate: ParameterVector,
                    input_spectrum: SpectrumLike,
                    noise_spectrum: Optional[SpectrumLike] = None,
                    grid: int = 4096) -> float:
    """Frequency-domain criterion the scheme minimizes in the limit.

    Returns the two-sided integral over (-pi, pi) by the midpoint rule on
    ``grid`` points of the half-axis; the asymptotic variance of the
    equivalent error is criterion/(2 pi) + var(e) for white e.
    """
    structure = scheme_structure(scheme)
    if estimate.config.structure != structure:
        raise ValueError("estimate structure does not match the scheme")
    w = (np.arange(int(grid)) + 0.5) * (np.pi / int(grid))

    g_err = truth.freq_response(w) - GobfResponse(estimate, "io").freq_response(w)
    ratio = GobfResponse(estimate, "den_ratio").freq_response(w)
    su = _density_at(input_spectrum, w)
    integrand = np.abs(ratio * g_err) ** 2 * su

    if scheme != "holoe":
        if noise_spectrum is None:
            raise ValueError(f"{scheme} needs the noise spectrum")
        wtrue = np.ones_like(w, dtype=complex) if truth.noise_num is None \
            else truth.noise_response(w)
        if scheme == "hrls":
            shaped = ratio * wtrue - 1.0
        else:
            # ratio * noise/den collapses to noise/charpoly: evaluate that
            # directly instead of multiplying two near-singular factors
            shaped = ratio * wtrue \
                - GobfResponse(estimate, "noise_numer").freq_response(w)
        integrand = integrand + np.abs(shaped) ** 2 * _density_at(
            noise_spectrum, w)

    return float(2.0 * np.sum(integrand) * (np.pi / int(grid)))


@dataclass
class BandFitReport:
    bands: dict
    mean_abs_log10: dict
    n_points: int

    def as_dict(self) -> dict:
        return {
            "bands": {k: [float(a), float(b)]
                      for k, (a, b) in self.bands.items()},
            "mean_abs_log10": {k: float(v)
                               for k, v in self.mean_abs_log10.items()},
            "n_points": int(self.n_points),
        }


def band_fit(truth: RationalModel,
             estimate: Union[RationalModel, ParameterVector],
             bands: dict, n_points: int = 200) -> BandFitReport:
    """Mean |log10| magnitude mismatch per frequency band (log-spaced)."""
    if isinstance(estimate, ParameterVector):
        est_resp = GobfResponse(estimate, "io").freq_response
    else:
        est_resp = estimate.freq_response
    out = {}
    for name, (lo, hi) in bands.items():
        if not 0 < lo < hi <= np.pi + 1e-12:
            raise ValueError(f"band {name!r} must satisfy 0 < lo < hi <= pi")
        w = np.geomspace(lo, min(hi, np.pi), int(n_points))
        mt = np.maximum(np.abs(truth.freq_response(w)), 1e-300)
        me = np.maximum(np.abs(est_resp(w)), 1e-300)
        out[name] = float(np.mean(np.abs(np.log10(mt) - np.log10(me))))
    return BandFitReport(bands=dict(bands), mean_abs_log10=out,
                         n_points=int(n_points))

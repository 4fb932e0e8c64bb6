"""Recursive identification: gain recursion and full data-pass driver.

One parameter adaptation rule serves all three schemes; they differ only
in how the regressor is fed (see predictor.RegressorState and the kernel
contract).  The update is the posterior-residual form

    eps      = y(t+1) - theta(t) . phi(t)            (returned)
    eps_p    = eps / (1 + phi . F(t) phi)
    theta(t+1) = theta(t) + F(t) phi eps_p
    F(t+1)   = (F(t) - F phi phi' F / (lam1/lam2 + phi.F.phi)) / lam1

so with lam1 = lam2 = 1 the trajectory solves the growing regularized
least-squares problem exactly at every step: theta(t) minimizes
sum eps^2 + (theta - theta0)' F0^-1 (theta - theta0).  lam1 < 1 gives
exponential forgetting, lam2 = 0 freezes F.

Scheme tokens name the closed-loop algorithms:
  hrls   output feedback from measured y, no residual channel
  herls  adds the residual channel (posterior residuals by default)
  holoe  output feedback from the model's own posterior prediction
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .convergence import SprReport, spr_check
from .basis import basis_char_poly, realization_for
from .lti import RationalModel
from .predictor import ParameterVector, PredictorConfig, gobf_to_rational

SCHEMES = ("hrls", "herls", "holoe")
_SCHEME_STRUCTURE = {"hrls": "arx", "herls": "armax", "holoe": "oe"}
_STRUCTURE_SCHEME = {v: k for k, v in _SCHEME_STRUCTURE.items()}
_STRUCTURE_CODE = {"arx": _kernels.ARX, "armax": _kernels.ARMAX,
                   "oe": _kernels.OE}


def scheme_structure(scheme: str) -> str:
    try:
        return _SCHEME_STRUCTURE[scheme]
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of "
                         f"{SCHEMES}") from None


class DivergenceError(RuntimeError):
    """Parameter estimates left the admissible range during adaptation."""


# ---------------------------------------------------------------------------
# single-step interface
# ---------------------------------------------------------------------------

@dataclass
class AdaptationState:
    theta: np.ndarray
    F: np.ndarray
    lam1: float = 1.0
    lam2: float = 1.0

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float).reshape(-1)
        self.F = np.asarray(self.F, dtype=float)
        d = self.theta.size
        if self.F.shape != (d, d):
            raise ValueError("gain matrix shape must match theta")
        if not 0.0 < self.lam1 <= 1.0:
            raise ValueError("lam1 must lie in (0, 1]")
        if not 0.0 <= self.lam2 < 2.0:
            raise ValueError("lam2 must lie in [0, 2)")

    @classmethod
    def fresh(cls, n_params: int, f0_scale: float = 1000.0,
              theta0=None, lam1: float = 1.0, lam2: float = 1.0
              ) -> "AdaptationState":
        theta = np.zeros(n_params) if theta0 is None else theta0
        return cls(theta=theta, F=f0_scale * np.eye(n_params),
                   lam1=lam1, lam2=lam2)

    def copy(self) -> "AdaptationState":
        return AdaptationState(self.theta.copy(), self.F.copy(),
                               self.lam1, self.lam2)


def adaptation_step(state: AdaptationState, phi, y_next: float) -> float:
    """Advance the state by one sample; returns the prior error."""
    phi = np.asarray(phi, dtype=float).reshape(-1)
    eps = float(y_next) - float(state.theta @ phi)
    g = state.F @ phi
    s = float(phi @ g)
    eps_p = eps / (1.0 + s)
    state.theta += g * eps_p
    if state.lam2 > 0.0:
        state.F -= np.outer(g, g) / (state.lam1 / state.lam2 + s)
        state.F /= state.lam1
    elif state.lam1 != 1.0:
        state.F /= state.lam1
    return eps


# ---------------------------------------------------------------------------
# full-pass driver
# ---------------------------------------------------------------------------

@dataclass
class AdaptationOptions:
    f0_scale: float = 1000.0
    lambda1: float = 1.0
    lambda2: float = 1.0
    theta0: Optional[np.ndarray] = None
    freeze: bool = False
    residual_feed: str = "posterior"  # "posterior" | "prior"
    divergence_limit: float = 1e8
    trajectory_stride: int = 0
    raise_on_divergence: bool = True
    backend: Optional[str] = None

    def __post_init__(self):
        if self.residual_feed not in ("posterior", "prior"):
            raise ValueError("residual_feed must be 'posterior' or 'prior'")
        if not 0.0 < self.lambda1 <= 1.0:
            raise ValueError("lambda1 must lie in (0, 1]")
        if not 0.0 <= self.lambda2 < 2.0:
            raise ValueError("lambda2 must lie in [0, 2)")
        if self.f0_scale <= 0:
            raise ValueError("f0_scale must be positive")


@dataclass
class IdentResult:
    theta: ParameterVector
    model: Optional[RationalModel]
    eps: np.ndarray
    eps_post: np.ndarray
    F: np.ndarray
    stationarity: np.ndarray
    trajectory: Optional[np.ndarray]
    trajectory_idx: Optional[np.ndarray]
    diverged: bool
    steps: int
    scheme: str
    backend: str
    spr: Optional[SprReport]
    meta: dict = field(default_factory=dict)


def _post_run_spr(pv: ParameterVector, model: Optional[RationalModel],
                  scheme: str, lam2: float) -> Optional[SprReport]:
    """Positivity certificate of the scheme's error-propagation filter."""
    if model is None or scheme == "hrls":
        return None
    charpoly = basis_char_poly(pv.config.spec, pv.config.order)
    den = model.noise_num if scheme == "herls" else model.den
    if den is None:
        return None
    return spr_check(charpoly, den, lam2=lam2)


def run_identification(config: PredictorConfig, u, y,
                       options: Optional[AdaptationOptions] = None
                       ) -> IdentResult:
    """Run one scheme over a full record; see module docstring."""
    options = options or AdaptationOptions()
    u = np.asarray(u, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if u.size != y.size:
        raise ValueError("input and output records must have equal length")
    if y.size < 2:
        raise ValueError("need at least two samples")
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(y))):
        raise ValueError("records must be finite")

    d = config.n_params
    theta0 = np.zeros(d) if options.theta0 is None else \
        np.asarray(options.theta0, dtype=float).reshape(-1)
    if theta0.size != d:
        raise ValueError(f"theta0 must have {d} entries")
    F0 = options.f0_scale * np.eye(d)

    real = realization_for(config.spec)
    backend = _kernels.active_backend(options.backend)
    out = _kernels.run_loop(
        _STRUCTURE_CODE[config.structure], real.A, real.B, real.C, real.D,
        config.n_sections, u, y, theta0, F0,
        options.lambda1, options.lambda2, options.freeze,
        options.residual_feed == "prior", options.divergence_limit,
        options.trajectory_stride, backend=backend)

    if out["diverged"] and options.raise_on_divergence:
        raise DivergenceError(
            f"estimates diverged after {out['steps']} steps; relax the "
            "adaptation settings or check the excitation")

    pv = ParameterVector(config, out["theta"])
    meta: dict = {}
    model: Optional[RationalModel] = None
    if not out["diverged"]:
        try:
            model = gobf_to_rational(pv)
        except ArithmeticError as ex:
            meta["model_expansion_error"] = str(ex)

    scheme = _STRUCTURE_SCHEME[config.structure]
    spr = None
    if not out["diverged"]:
        try:
            spr = _post_run_spr(pv, model, scheme, options.lambda2)
        except Exception as ex:  # diagnostic only, never fatal
            meta["spr_error"] = str(ex)

    steps = int(out["steps"])
    return IdentResult(
        theta=pv, model=model, eps=out["eps"], eps_post=out["eps_post"],
        F=out["F"],
        stationarity=out["sum_eps_phi"] / max(steps, 1),
        trajectory=out["traj"], trajectory_idx=out["traj_idx"],
        diverged=bool(out["diverged"]), steps=steps, scheme=scheme,
        backend=backend, spr=spr, meta=meta)

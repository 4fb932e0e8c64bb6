"""Pseudo-linear predictor structures over an orthonormal filter bank.

Three regression structures share one regressor layout.  Each signal
channel (output feedback, input, and for the "armax" structure the
residual) is passed through the same orthonormal bank of ``n_sections``
all-pass-chained state blocks, and the predictor is the inner product

    yhat(t+1) = theta . phi(t),
    phi(t) = [-ybank(t) | ubank(t) | ebank(t)],

where each bank contributes n_sections * n_poles states.  The minus sign
on the output-feedback states makes the parameter blocks enter the
transfer function denominator with a plus sign:

    den(q)   = charpoly(q) + sum_k y_k . V_k-numerators
    num(q)   = sum_k u_k . V_k-numerators
    noise(q) = charpoly(q) + sum_k e_k . V_k-numerators   ("armax")

over the common stable denominator charpoly = (section denominator)^k.

Structures:
  "arx"    output feedback uses measured y, noise model charpoly/den
  "armax"  adds residual blocks, noise model noise/den
  "oe"     output feedback uses the model's own one-step prediction

Coefficient expansion (``gobf_to_rational``) is exact linear algebra but
the resulting coefficient arrays are useless for frequency evaluation when
basis poles sit very close to the unit circle: |den(e^{iw})| can be ~1e-20
at low frequency while coefficient round-off contributes ~1e-15.  All
evaluators here therefore work directly in the orthonormal coordinates
(resolvent solves and streamed feedback), which stay conditioned, and the
returned RationalModel carries a ``gobf`` attachment so generic code picks
the stable path automatically.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .basis import (BasisSpec, FilterBank, allpass_numerator, basis_char_poly,
                    blaschke_eval, realization_for, resolvent_polynomials,
                    stable_denominator)
from .lti import RationalModel, as_poly, poly_mul, poly_trim

STRUCTURES = ("arx", "armax", "oe")


@dataclass(frozen=True)
class PredictorConfig:
    """Structure token, basis pole set, and total order per channel."""

    structure: str
    spec: BasisSpec
    order: int

    def __post_init__(self):
        if self.structure not in STRUCTURES:
            raise ValueError(f"unknown structure {self.structure!r}")
        if self.order <= 0 or self.order % self.spec.n_poles != 0:
            raise ValueError("order must be a positive multiple of the "
                             "number of basis poles")

    @property
    def n_sections(self) -> int:
        return self.order // self.spec.n_poles

    @property
    def n_channels(self) -> int:
        return 3 if self.structure == "armax" else 2

    @property
    def n_params(self) -> int:
        return self.n_channels * self.order


@dataclass
class ParameterVector:
    """Flat parameter vector with named views onto the channel blocks.

    Layout: output-feedback blocks, then input blocks, then (armax only)
    residual blocks; within a channel, section-major with n_poles entries
    per section.
    """

    config: PredictorConfig
    theta: np.ndarray = field(default=None)

    def __post_init__(self):
        d = self.config.n_params
        if self.theta is None:
            self.theta = np.zeros(d)
        else:
            self.theta = np.asarray(self.theta, dtype=float).reshape(-1)
            if self.theta.size != d:
                raise ValueError(f"theta must have {d} entries, "
                                 f"got {self.theta.size}")

    # -- block views (shape (n_sections, n_poles), sharing theta storage) ---
    def _chan(self, i: int) -> np.ndarray:
        m = self.config.order
        ns, npl = self.config.n_sections, self.config.spec.n_poles
        return self.theta[i * m:(i + 1) * m].reshape(ns, npl)

    @property
    def y_blocks(self) -> np.ndarray:
        return self._chan(0)

    @property
    def u_blocks(self) -> np.ndarray:
        return self._chan(1)

    @property
    def e_blocks(self) -> Optional[np.ndarray]:
        return self._chan(2) if self.config.structure == "armax" else None

    @classmethod
    def from_blocks(cls, config: PredictorConfig, y_blocks, u_blocks,
                    e_blocks=None) -> "ParameterVector":
        pv = cls(config)
        pv.y_blocks[:] = np.asarray(y_blocks, dtype=float)
        pv.u_blocks[:] = np.asarray(u_blocks, dtype=float)
        if config.structure == "armax":
            if e_blocks is None:
                raise ValueError("armax structure needs residual blocks")
            pv.e_blocks[:] = np.asarray(e_blocks, dtype=float)
        elif e_blocks is not None:
            raise ValueError(f"{config.structure} has no residual blocks")
        return pv

    def copy(self) -> "ParameterVector":
        return ParameterVector(self.config, self.theta.copy())


def predict(pv: ParameterVector, phi: np.ndarray) -> float:
    return float(pv.theta @ np.asarray(phi, dtype=float).reshape(-1))


class RegressorState:
    """Streaming regressor builder: push sample t, get phi(t).

    The returned phi(t) contains bank states *after* absorbing the
    arguments, so it feeds the one-step-ahead prediction of y(t+1).
    """

    def __init__(self, config: PredictorConfig):
        self.config = config
        real = realization_for(config.spec)
        ns = config.n_sections
        self._bank_y = FilterBank(real, ns)
        self._bank_u = FilterBank(real, ns)
        self._bank_e = FilterBank(real, ns) if config.structure == "armax" \
            else None

    def reset(self):
        self._bank_y.reset()
        self._bank_u.reset()
        if self._bank_e is not None:
            self._bank_e.reset()

    def step(self, u_t: float, y_feedback_t: float,
             residual_t: Optional[float] = None) -> np.ndarray:
        if self._bank_e is None:
            if residual_t is not None:
                raise ValueError(f"structure {self.config.structure!r} "
                                 "takes no residual sample")
            return np.concatenate([
                -self._bank_y.push(y_feedback_t).ravel(),
                self._bank_u.push(u_t).ravel(),
            ])
        if residual_t is None:
            raise ValueError("armax structure needs a residual sample")
        return np.concatenate([
            -self._bank_y.push(y_feedback_t).ravel(),
            self._bank_u.push(u_t).ravel(),
            self._bank_e.push(residual_t).ravel(),
        ])


# ---------------------------------------------------------------------------
# streamed evaluators (stable for basis poles near the unit circle)
# ---------------------------------------------------------------------------

def _bank_feedback_sim(cfg: PredictorConfig, y_weights: np.ndarray,
                       u_weights: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Output-feedback recursion in bank coordinates, kernel-accelerated.

    Computes out[t] = (u_weights)Xu(t) - (y_weights)Xy(t) where the Xu bank
    is fed by x and the Xy bank by out itself; out[0] is always zero.  This
    is the frozen output-feedback identification loop run against a zero
    record, so the compiled kernel does the per-sample work.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size == 0:
        return np.zeros(0)
    real = realization_for(cfg.spec)
    theta = np.concatenate([np.asarray(y_weights, dtype=float).reshape(-1),
                            np.asarray(u_weights, dtype=float).reshape(-1)])
    res = _kernels.run_loop(
        _kernels.OE, real.A, real.B, real.C, real.D, cfg.n_sections,
        x, np.zeros(x.size), theta, np.zeros((theta.size, theta.size)),
        1.0, 1.0, True, False, np.inf, 0)
    eps = res["eps"]
    out = np.full(x.size, np.nan)
    out[0] = 0.0
    out[1:eps.size + 1] = -eps
    return out


def simulate_model_output(pv: ParameterVector, u: np.ndarray) -> np.ndarray:
    """Deterministic response of the identified transfer num/den to u.

    Runs the output-feedback recursion yhat = (u-blocks)u - (y-blocks)yhat
    in bank coordinates; never forms the expanded denominator.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    return _bank_feedback_sim(pv.config, pv.y_blocks.ravel(),
                              pv.u_blocks.ravel(), u)


def simulate_noise_output(pv: ParameterVector, e: np.ndarray) -> np.ndarray:
    """Response of the identified noise shaping filter to e.

    "armax": noise/den driven by residual blocks; "arx": charpoly/den
    (residual blocks absent, numerator reduces to the bare char poly);
    "oe" has unit noise shaping and is rejected.
    """
    if pv.config.structure == "oe":
        raise ValueError("oe structure has unit noise shaping")
    e = np.asarray(e, dtype=float).reshape(-1)
    yw = pv.y_blocks.ravel()
    ew = pv.e_blocks.ravel() if pv.e_blocks is not None else np.zeros_like(yw)
    # noise/den = 1 + ((residual blocks) - (y blocks))V / (1 + (y blocks)V),
    # so the shaping filter is the direct term plus one feedback pass.
    return e + _bank_feedback_sim(pv.config, yw, ew - yw, e)


def denominator_ratio_filter(pv: ParameterVector, s: np.ndarray) -> np.ndarray:
    """Apply den/charpoly (a stable, biproper all-zero-in-bank filter) to s."""
    s = np.asarray(s, dtype=float).reshape(-1)
    yw = pv.y_blocks.ravel()
    return s + _bank_feedback_sim(pv.config, np.zeros_like(yw), yw, s)


def _block_responses(spec: BasisSpec, n_sections: int, omegas: np.ndarray
                     ) -> np.ndarray:
    """V_k(e^{iw}) for k = 1..n_sections, shape (n_omega, n_sections, n_poles)."""
    real = realization_for(spec)
    n = real.order
    w = np.asarray(omegas, dtype=float).reshape(-1)
    z = np.exp(1j * w)
    lhs = z[:, None, None] * np.eye(n) - real.A
    rhs = np.broadcast_to(real.B.astype(complex), (w.size, n))[..., None]
    v1 = np.linalg.solve(lhs, rhs)[..., 0]
    powers = np.power.outer(blaschke_eval(spec, 1.0 / z),
                            np.arange(n_sections))
    return v1[:, None, :] * powers[:, :, None]


class GobfResponse:
    """Frequency evaluator bound to a parameter vector.

    which: "io" for num/den, "noise" for the noise shaping filter,
    "den_ratio" for den/charpoly, and "noise_numer" for the noise
    numerator over charpoly (the product den_ratio * noise collapsed into
    one well-conditioned factor).  Computed from resolvent solves in bank
    coordinates, so it stays accurate where expanded coefficients cancel.
    """

    def __init__(self, pv: ParameterVector, which: str = "io"):
        if which not in ("io", "noise", "den_ratio", "noise_numer"):
            raise ValueError(f"unknown response kind {which!r}")
        if which in ("noise", "noise_numer") and pv.config.structure == "oe":
            raise ValueError("oe structure has unit noise shaping")
        self.pv = pv.copy()
        self.which = which

    def freq_response(self, omegas) -> np.ndarray:
        w = np.asarray(omegas, dtype=float).reshape(-1)
        cfg = self.pv.config
        blocks = _block_responses(cfg.spec, cfg.n_sections, w)
        if self.which in ("den_ratio", "io"):
            den = 1.0 + np.einsum("oki,ki->o", blocks, self.pv.y_blocks)
            if self.which == "den_ratio":
                return den
            return np.einsum("oki,ki->o", blocks, self.pv.u_blocks) / den
        num = np.ones(w.size, dtype=complex)
        if self.pv.e_blocks is not None:
            num += np.einsum("oki,ki->o", blocks, self.pv.e_blocks)
        if self.which == "noise_numer":
            return num
        den = 1.0 + np.einsum("oki,ki->o", blocks, self.pv.y_blocks)
        return num / den


# ---------------------------------------------------------------------------
# coefficient expansion and its inverse
# ---------------------------------------------------------------------------

def _section_numerators(spec: BasisSpec, n_sections: int) -> np.ndarray:
    """Numerator polynomials of all basis entries over charpoly.

    Returns shape (n_sections, n_poles, order+1): entry (k, i) holds the
    coefficients of component i of section k+1, brought over the common
    denominator charpoly = abar^{n_sections}.
    """
    nv, abar = resolvent_polynomials(realization_for(spec))
    gnum = allpass_numerator(spec)
    npl = spec.n_poles
    order = n_sections * npl
    out = np.zeros((n_sections, npl, order + 1))
    for k in range(n_sections):
        lead = as_poly([1.0])
        for _ in range(k):
            lead = poly_mul(lead, gnum)
        for _ in range(n_sections - 1 - k):
            lead = poly_mul(lead, abar)
        for i in range(npl):
            prod = poly_mul(nv[:, i], lead)
            out[k, i, :prod.size] = prod
    return out


def gobf_to_rational(pv: ParameterVector,
                     check_points: int = 32,
                     check_tol: float = 1e-8) -> RationalModel:
    """Expand a parameter vector into explicit transfer coefficients.

    The result carries a ``gobf`` attachment for stable evaluation.  A
    pointwise cross-check of the expanded ratio against direct bank
    evaluation guards the expansion; failure raises ArithmeticError.
    """
    cfg = pv.config
    ns = cfg.n_sections
    base = _section_numerators(cfg.spec, ns)
    charpoly = basis_char_poly(cfg.spec, cfg.order)

    den = charpoly + np.einsum("ki,kij->j", pv.y_blocks, base)
    num = np.einsum("ki,kij->j", pv.u_blocks, base)
    if cfg.structure == "armax":
        noise = charpoly + np.einsum("ki,kij->j", pv.e_blocks, base)
    elif cfg.structure == "arx":
        noise = charpoly.copy()
    else:
        noise = None

    model = RationalModel(num=poly_trim(num), den=den,
                          noise_num=noise, gobf=GobfResponse(pv, "io"))

    # consistency: expanded ratio vs direct evaluation away from den roots
    if check_points > 0:
        cand = np.linspace(0.05 * np.pi, 0.999 * np.pi, 8 * check_points)
        roots = np.roots(den[::-1]) if den.size > 1 else np.array([])
        if roots.size:
            dist = np.min(np.abs(np.exp(1j * cand)[:, None] - roots[None, :]),
                          axis=1)
        else:
            dist = np.ones_like(cand)
        sel = cand[np.argsort(dist)[-check_points:]]
        direct = model.gobf.freq_response(sel)
        zinv = np.exp(-1j * sel)
        coeff = (np.polyval(num[::-1], zinv) / np.polyval(den[::-1], zinv))
        scale = np.maximum(1.0, np.abs(direct))
        if np.max(np.abs(direct - coeff) / scale) > check_tol:
            raise ArithmeticError(
                "coefficient expansion disagrees with bank evaluation; "
                "basis poles are too close to the unit circle for "
                "expanded-coefficient arithmetic")
    return model


def rational_to_gobf(model: RationalModel, config: PredictorConfig,
                     residual_tol: float = 1e-6) -> ParameterVector:
    """Project explicit transfer coefficients onto the bank parametrization.

    Exact (a square linear solve) whenever the model denominator has
    degree <= order and the model is strictly proper.  The noise numerator
    is mapped onto residual blocks for the "armax" structure and must
    equal charpoly for "arx" (that structure cannot represent anything
    else).
    """
    cfg = config
    base = _section_numerators(cfg.spec, cfg.n_sections)
    order = cfg.order
    charpoly = basis_char_poly(cfg.spec, order)

    cols = base.reshape(cfg.n_sections * cfg.spec.n_poles, order + 1)
    P = cols[:, 1:].T  # strictly-proper coefficient rows q^-1 .. q^-order

    def pad(p: np.ndarray) -> np.ndarray:
        p = as_poly(p)
        if p.size > order + 1:
            raise ValueError("model degree exceeds the predictor order")
        return np.pad(p, (0, order + 1 - p.size))

    den = pad(model.den)
    num = pad(model.num)
    if abs(num[0]) > 1e-12:
        raise ValueError("model must be strictly proper (no direct term)")

    def solve(rhs: np.ndarray, what: str) -> np.ndarray:
        sol = np.linalg.solve(P, rhs)
        if np.max(np.abs(P @ sol - rhs)) > residual_tol * max(
                1.0, float(np.max(np.abs(rhs)))):
            raise ArithmeticError(f"projection of the {what} polynomial "
                                  "onto the bank parametrization failed")
        return sol.reshape(cfg.n_sections, cfg.spec.n_poles)

    yb = solve((den - charpoly)[1:], "denominator")
    ub = solve(num[1:], "numerator")
    eb = None
    if cfg.structure == "armax":
        noise = pad(model.noise_num if model.noise_num is not None
                    else np.array([1.0]))
        eb = solve((noise - charpoly)[1:], "noise")
    elif cfg.structure == "arx" and model.noise_num is not None:
        if np.max(np.abs(pad(model.noise_num) - charpoly)) > 1e-9:
            raise ValueError('"arx" fixes the noise numerator to charpoly')
    return ParameterVector.from_blocks(cfg, yb, ub, eb)

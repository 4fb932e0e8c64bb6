"""Passivity certificate for the adaptation error loop.

Convergence of the pseudo-linear schemes hinges on the transfer function
num/den - lam2/2 being strictly positive real: den stable and

    Re[num(e^{-iw}) / den(e^{-iw})] - lam2/2 > 0   for all w.

``spr_check`` certifies this on a dense uniform frequency grid.  A grid
check is a necessary-condition test; the default 8192 points is ample for
the low-order smooth ratios produced here, and the report carries the
minimizing frequency so a failure can be inspected.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lti import as_poly, poly_eval_zinv, poly_is_stable

SPR_MARGIN = 1e-9


@dataclass
class SprReport:
    is_spr: bool
    margin: float        # min over the grid of Re[num/den] - lam2/2
    argmin_omega: float
    stable: bool
    lam2: float
    grid: int

    def as_dict(self) -> dict:
        return {
            "is_spr": bool(self.is_spr),
            "margin": float(self.margin),
            "argmin_omega": float(self.argmin_omega),
            "stable": bool(self.stable),
            "lam2": float(self.lam2),
            "grid": int(self.grid),
        }


def spr_check(num, den, lam2: float = 1.0, grid: int = 8192) -> SprReport:
    """Grid test of the strict-positive-real condition for num/den."""
    num = as_poly(num)
    den = as_poly(den)
    if grid < 16:
        raise ValueError("grid is too coarse to certify anything")
    stable = poly_is_stable(den)
    w = np.linspace(-np.pi, np.pi, int(grid), endpoint=False)
    zinv = np.exp(-1j * w)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = (poly_eval_zinv(num, zinv) / poly_eval_zinv(den, zinv)).real \
            - lam2 / 2.0
    vals = np.where(np.isfinite(vals), vals, -np.inf)  # circle root: fails
    k = int(np.argmin(vals))
    margin = float(vals[k])
    return SprReport(is_spr=bool(stable and margin > SPR_MARGIN),
                     margin=margin, argmin_omega=float(abs(w[k])),
                     stable=stable, lam2=float(lam2), grid=int(grid))

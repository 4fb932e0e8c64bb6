"""Transform-domain representations induced by the orthonormal basis.

Expanding a signal y on the basis gives transform coefficients

    ytil(k) = sum_t v_k(t) y(t)          (one n_poles-vector per section)

and a causal scalar LTI operator H acting on signals turns into an
operator on coefficient sequences whose symbol

    Htil(lam) = sum_k H(1/z_k(lam)) * V1(z_k) V1(1/z_k)^T / (V1(z_k) . V1(1/z_k))

is evaluated from the n_poles roots z_k of  allpass(z) = lam.  The root
set is the preimage of lam under the all-pass map; on |lam| = 1 all roots
lie on the unit circle and the normalizer equals the (strictly positive)
phase density there, so the formula is well posed everywhere it is used
for frequency-domain analysis.  For the identity operator the projectors
sum to I, so constants map to constant * I; for the single-pole basis at
the origin the transform reduces to the classical shift substitution.

Key structural fact used downstream: multiplying a signal by a filter of
the form  1 + sum_k c_k . V_k  (a denominator over the basis char poly)
acts on the coefficient sequence as a *finite impulse response* operator
of length n_sections + 1.  ``fir_operator_coefficients`` extracts those
matrix taps by time-domain inner products and cross-checks them against
the symbol formula above.
"""
from __future__ import annotations

from typing import Callable, Union

import numpy as np

from .basis import (BasisSpec, basis_response, filter_bank_run,
                    impulse_responses, realization_for, tail_length)
from .lti import RationalModel

OperatorLike = Union[RationalModel, Callable[[complex], complex]]


# ---------------------------------------------------------------------------
# signal transform
# ---------------------------------------------------------------------------

def hambo_signal_transform(spec: BasisSpec, y, n_sections: int) -> np.ndarray:
    """Basis expansion coefficients, shape (n_sections, n_poles).

    Exact inner products over the support of y; section k row holds the
    coefficients of the k-th block (k = 1 maps to row 0).

    The basis responses are strictly proper, so expansions live on the
    subspace of sequences vanishing at t = 0; any mass at t = 0 is
    annihilated.  Operator identities (ytil = Htil util) therefore hold
    for inputs supported on t >= 1.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    imp = impulse_responses(spec, n_sections, y.size)
    return (imp.T @ y).reshape(n_sections, spec.n_poles)


def hambo_signal_reconstruct(spec: BasisSpec, coeffs: np.ndarray,
                             length: int) -> np.ndarray:
    """Synthesize sum_k coeffs[k] . v_{k+1}(t) on t = 0..length-1."""
    coeffs = np.asarray(coeffs, dtype=float)
    n_sections = coeffs.shape[0]
    imp = impulse_responses(spec, n_sections, length)
    return imp @ coeffs.reshape(-1)


def hambo_signal_eval(coeffs: np.ndarray, lam) -> np.ndarray:
    """Transform-domain series sum_k coeffs[k-1] lam^{-k} (vector valued)."""
    coeffs = np.asarray(coeffs, dtype=float)
    lam = complex(lam)
    acc = np.zeros(coeffs.shape[1], dtype=complex)
    for k in range(coeffs.shape[0] - 1, -1, -1):
        acc = (acc + coeffs[k]) / lam
    return acc


# ---------------------------------------------------------------------------
# operator transform
# ---------------------------------------------------------------------------

def _eval_operator(h: OperatorLike, z: complex) -> complex:
    """H evaluated at the point z of the complex plane."""
    if isinstance(h, RationalModel):
        return complex(h.eval_zinv(1.0 / z))
    return complex(h(z))


def hambo_operator_transform(spec: BasisSpec, h: OperatorLike, lam,
                             _retries: int = 3) -> np.ndarray:
    """Matrix symbol of the transformed operator at the point lam.

    ``h`` is a RationalModel or a callable z -> H(z).  For |lam| = 1 the
    construction is always well posed.  At isolated degenerate points off
    the circle (vanishing normalizer or a root hitting a basis pole) the
    argument of lam is rotated by 1e-3 and the evaluation retried; after
    three failed rotations an ArithmeticError is raised.
    """
    lam = complex(lam)
    real = realization_for(spec)
    n = real.order
    for attempt in range(_retries + 1):
        try:
            denom = lam - real.D
            if abs(denom) < 1e-12:
                raise ArithmeticError("lam equals the all-pass direct term")
            M = real.A + np.outer(real.B, real.C) / denom
            roots = np.linalg.eigvals(M)
            out = np.zeros((n, n), dtype=complex)
            for zk in roots:
                v_fwd = basis_response(spec, 1, zk)
                v_bwd = basis_response(spec, 1, 1.0 / zk)
                norm = v_fwd @ v_bwd
                if abs(norm) < 1e-10:
                    raise ArithmeticError("degenerate spectral projector")
                out += (_eval_operator(h, 1.0 / zk)
                        * np.outer(v_fwd, v_bwd) / norm)
            return out
        except (ArithmeticError, ValueError):
            if attempt == _retries:
                raise ArithmeticError(
                    f"operator transform is degenerate near lam={lam}")
            lam *= np.exp(1e-3j)
    raise AssertionError("unreachable")


def hambo_operator_grid(spec: BasisSpec, h: OperatorLike, lams) -> np.ndarray:
    """Operator symbol on a grid of lam points, shape (len, n, n)."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    n = spec.n_poles
    out = np.empty((lams.size, n, n), dtype=complex)
    for i, lam in enumerate(lams):
        out[i] = hambo_operator_transform(spec, h, lam)
    return out


# ---------------------------------------------------------------------------
# finite-impulse-response structure of denominator-over-charpoly operators
# ---------------------------------------------------------------------------

def fir_operator_coefficients(spec: BasisSpec, y_blocks,
                              validate: bool = True,
                              tol: float = 1e-12) -> np.ndarray:
    """Matrix taps of the transformed filter 1 + sum_k y_k . V_k.

    Returns shape (n_sections + 1, n_poles, n_poles); tap tau multiplies
    lam^{-tau}.  Zero blocks give the identity tap followed by zeros.
    Cross-validated against the operator symbol on a few circle points
    when ``validate`` is set.
    """
    y_blocks = np.asarray(y_blocks, dtype=float)
    if y_blocks.ndim != 2 or y_blocks.shape[1] != spec.n_poles:
        raise ValueError("y_blocks must have shape (n_sections, n_poles)")
    ns = y_blocks.shape[0]
    n = spec.n_poles
    T = tail_length(spec, ns + 2, tol=tol)
    imp = impulse_responses(spec, ns + 1, T)

    taps = np.empty((ns + 1, n, n))
    for j in range(n):
        v1j = imp[:, j]
        w = v1j.copy()
        if ns > 0:
            bank = filter_bank_run(spec, ns, v1j)
            w = w + bank @ y_blocks.reshape(-1)
        for tau in range(ns + 1):
            taps[tau, :, j] = imp[:, tau * n:(tau + 1) * n].T @ w

    if validate:
        def h(z):
            acc = 1.0 + 0.0j
            for k in range(ns):
                acc += y_blocks[k] @ basis_response(spec, k + 1, z)
            return acc

        for ang in (0.41, 1.3, 2.7):
            lam = np.exp(1j * ang)
            direct = hambo_operator_transform(spec, h, lam)
            series = np.zeros((n, n), dtype=complex)
            for tau in range(ns, -1, -1):
                series = series / lam + taps[tau]
            if np.max(np.abs(direct - series)) > 1e-8 * max(
                    1.0, float(np.max(np.abs(direct)))):
                raise ArithmeticError(
                    "finite-tap extraction disagrees with the operator "
                    "symbol; increase the tail tolerance")
    return taps

"""Orthonormal basis filters generated by an all-pass pole cascade.

A pole multiset ``{p_0..p_{np-1}}`` inside the unit disc, closed under
conjugation, defines the all-pass

    G(z) = prod_k (p_k - z**-1) / (1 - p_k z**-1)

and the basis filter blocks

    V_1(z) = (zI - A)**-1 B,      V_k(z) = V_1(z) * G(z)**(k-1),

where (A, B, C, D) is a balanced realization of G: the embedding matrix
[[A, B], [C, D]] is orthogonal.  The realization here is built as a
normalized lattice (a cascade of plane rotations derived from the Schur
recursion on the denominator), which is orthogonal to machine precision by
construction and reduces to A=[p], B=[sqrt(1-p^2)], C=[-sqrt(1-p^2)], D=p
for a single real pole.

Impulse responses of the stacked blocks form an orthonormal family; the
filters are strictly proper, so an output at time t depends on inputs
strictly before t.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.signal

from .lti import poly_pow, poly_trim

_REAL_TOL = 1e-12


@dataclass(frozen=True)
class BasisSpec:
    """Validated, ordered pole multiset defining the basis."""

    poles: tuple[complex, ...]

    @property
    def n_poles(self) -> int:
        return len(self.poles)

    @property
    def max_radius(self) -> float:
        return max(abs(p) for p in self.poles)

    def pole_array(self) -> np.ndarray:
        return np.asarray(self.poles, dtype=complex)


def validate_basis(poles: Sequence[complex], tol: float = 1e-9) -> BasisSpec:
    """Check strict stability and conjugate closure; order is preserved.

    Poles with |Im| <= tol are coerced to real.  Every genuinely complex
    pole must have a conjugate partner in the multiset (within tol).
    """
    arr = [complex(p) for p in poles]
    if len(arr) == 0:
        raise ValueError("basis needs at least one pole")
    for p in arr:
        if abs(p) >= 1.0:
            raise ValueError(f"pole {p} is not strictly inside the unit circle")

    cleaned = [p.real if abs(p.imag) <= tol else p for p in arr]
    complex_idx = [i for i, p in enumerate(cleaned) if isinstance(p, complex)]
    unmatched = set(complex_idx)
    for i in complex_idx:
        if i not in unmatched:
            continue
        partner = None
        for j in unmatched:
            if j != i and abs(np.conj(cleaned[i]) - cleaned[j]) <= tol:
                partner = j
                break
        if partner is None:
            raise ValueError(
                f"complex pole {cleaned[i]} has no conjugate partner in the set")
        unmatched.discard(i)
        unmatched.discard(partner)

    return BasisSpec(tuple(complex(p) for p in cleaned))


def blaschke_eval(spec: BasisSpec, zinv):
    """Evaluate the generating all-pass as a function of z**-1."""
    zinv = np.asarray(zinv, dtype=complex)
    out = np.ones_like(zinv)
    for p in spec.poles:
        out = out * (p - zinv) / (1.0 - p * zinv)
    return out


def _realify(c: np.ndarray, what: str) -> np.ndarray:
    if np.max(np.abs(c.imag)) > 1e-9 * max(1.0, np.max(np.abs(c.real))):
        raise ValueError(f"{what} has non-negligible imaginary part; "
                         "pole set is not conjugate-closed")
    return np.ascontiguousarray(c.real)


def stable_denominator(spec: BasisSpec) -> np.ndarray:
    """Coefficients of prod_k (1 - p_k q**-1); real for a valid spec."""
    c = np.array([1.0 + 0.0j])
    for p in spec.poles:
        c = np.convolve(c, np.array([1.0, -p]))
    return _realify(c, "basis denominator")


def allpass_numerator(spec: BasisSpec) -> np.ndarray:
    """Coefficients of prod_k (p_k - q**-1); real for a valid spec."""
    c = np.array([1.0 + 0.0j])
    for p in spec.poles:
        c = np.convolve(c, np.array([p, -1.0]))
    return _realify(c, "all-pass numerator")


# ---------------------------------------------------------------------------
# balanced realization via the normalized Schur lattice
# ---------------------------------------------------------------------------

def reflection_coefficients(den: np.ndarray) -> np.ndarray:
    """Schur recursion on a monic stable delay polynomial.

    Returns k_1..k_n with |k_m| < 1; the recursion fails loudly if the
    polynomial is not strictly stable.
    """
    d = np.asarray(den, dtype=float).copy()
    n = d.size - 1
    ks = np.empty(n)
    for m in range(n, 0, -1):
        k = d[m]
        if abs(k) >= 1.0:
            raise ValueError("denominator is not strictly stable")
        ks[m - 1] = k
        d = (d - k * d[::-1]) / (1.0 - k * k)
        d = d[:m]
    return ks


@dataclass
class BalancedAllPass:
    """State-space (A, B, C, D) of the generating all-pass with orthogonal
    embedding [[A, B], [C, D]]."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float
    spec: BasisSpec

    @property
    def order(self) -> int:
        return self.B.size

    def block_matrix(self) -> np.ndarray:
        n = self.order
        M = np.empty((n + 1, n + 1))
        M[:n, :n] = self.A
        M[:n, n] = self.B
        M[n, :n] = self.C
        M[n, n] = self.D
        return M

    def orthogonality_defect(self) -> float:
        M = self.block_matrix()
        return float(np.max(np.abs(M.T @ M - np.eye(M.shape[0]))))

    def transfer_at(self, z):
        """D + C (zI - A)**-1 B, vectorized over z."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        n = self.order
        out = np.empty(z.shape, dtype=complex)
        eye = np.eye(n)
        for i, zi in enumerate(z):
            x = np.linalg.solve(zi * eye - self.A, self.B.astype(complex))
            out[i] = self.D + self.C @ x
        return out if out.size > 1 else out[0]


def balanced_realization(spec: BasisSpec) -> BalancedAllPass:
    den = stable_denominator(spec)
    ks = reflection_coefficients(den)
    A = np.zeros((0, 0))
    B = np.zeros(0)
    C = np.zeros(0)
    D = 1.0
    for k in ks:
        c = np.sqrt(1.0 - k * k)
        m = B.size
        A_new = np.empty((m + 1, m + 1))
        A_new[0, 0] = -k * D
        A_new[0, 1:] = C
        A_new[1:, 0] = -k * B
        A_new[1:, 1:] = A
        B_new = np.empty(m + 1)
        B_new[0] = c * D
        B_new[1:] = c * B
        C_new = np.zeros(m + 1)
        C_new[0] = c
        A, B, C, D = A_new, B_new, C_new, float(k)
    if spec.n_poles % 2 == 1:
        C = -C
        D = -D
    return BalancedAllPass(A, B, C, D, spec)


@lru_cache(maxsize=128)
def _cached_realization(poles: tuple) -> BalancedAllPass:
    return balanced_realization(BasisSpec(poles))


def realization_for(spec: BasisSpec) -> BalancedAllPass:
    return _cached_realization(spec.poles)


# ---------------------------------------------------------------------------
# resolvent polynomials (Faddeev recursion)
# ---------------------------------------------------------------------------

def resolvent_polynomials(real: BalancedAllPass) -> tuple[np.ndarray, np.ndarray]:
    """Polynomial data of V_1(q**-1) = nv(q**-1) / den(q**-1).

    Returns (nv, den): ``nv`` has shape (n+1, n) with nv[j] the coefficient
    vector of q**-j (row 0 is zero: the filters are strictly proper), and
    ``den`` is the monic stable denominator of length n+1.  The Faddeev
    recursion also reproduces the characteristic polynomial, which is
    checked against the pole product as an internal consistency guard.
    """
    A, B = real.A, real.B
    n = A.shape[0]
    den = stable_denominator(real.spec)
    nv = np.zeros((n + 1, n))
    Nk = np.eye(n)
    coeffs = np.empty(n + 1)
    coeffs[0] = 1.0
    for k in range(1, n + 1):
        nv[k] = Nk @ B
        ck = -np.trace(A @ Nk) / k
        coeffs[k] = ck
        Nk = A @ Nk + ck * np.eye(n)
    if np.max(np.abs(coeffs - den)) > 1e-8 * max(1.0, np.max(np.abs(den))):
        raise ArithmeticError("resolvent recursion disagrees with pole product")
    return nv, den


# ---------------------------------------------------------------------------
# filter bank (streaming and batch)
# ---------------------------------------------------------------------------

class FilterBank:
    """Streaming cascade of ``n_sections`` all-pass stages whose internal
    states are the orthonormal basis-filter outputs.

    ``outputs()`` returns the stacked block outputs at the current time
    index (zero before any sample is pushed: the filters are strictly
    proper).  ``push(s)`` advances one step and returns the outputs at the
    *next* index, i.e. the values a one-step-ahead regressor needs.
    """

    def __init__(self, real: BalancedAllPass, n_sections: int):
        if n_sections < 1:
            raise ValueError("need at least one section")
        self.real = real
        self.n_sections = int(n_sections)
        self.x = np.zeros((self.n_sections, real.order))

    @property
    def width(self) -> int:
        return self.n_sections * self.real.order

    def reset(self) -> None:
        self.x[:] = 0.0

    def outputs(self) -> np.ndarray:
        return self.x.reshape(-1).copy()

    def push(self, s: float) -> np.ndarray:
        A, B, C, D = self.real.A, self.real.B, self.real.C, self.real.D
        w = float(s)
        for j in range(self.n_sections):
            xj = self.x[j]
            w_out = C @ xj + D * w
            self.x[j] = A @ xj + B * w
            w = w_out
        return self.x.reshape(-1).copy()


def filter_bank_run(spec: BasisSpec, n_sections: int, samples) -> np.ndarray:
    """Batch filter-bank outputs, row t = stacked block outputs at time t.

    Row 0 is exactly zero for any input.  Implemented with direct-form
    filtering section by section; agrees with the streaming FilterBank to
    rounding error.
    """
    real = realization_for(spec)
    nv, den = resolvent_polynomials(real)
    gnum = allpass_numerator(spec)
    s = np.asarray(samples, dtype=float)
    n = real.order
    out = np.empty((s.size, n_sections * n))
    w = s
    for j in range(n_sections):
        for i in range(n):
            out[:, j * n + i] = scipy.signal.lfilter(nv[:, i], den, w)
        if j + 1 < n_sections:
            w = scipy.signal.lfilter(gnum, den, w)
    return out


def impulse_responses(spec: BasisSpec, n_sections: int, length: int) -> np.ndarray:
    """Rows t = stacked basis-filter impulse responses at time t."""
    imp = np.zeros(int(length))
    imp[0] = 1.0
    return filter_bank_run(spec, n_sections, imp)


def tail_length(spec: BasisSpec, n_sections: int, tol: float = 1e-12,
                cap: int = 10**6) -> int:
    """Sample count after which stacked impulse responses fall below tol."""
    rho = spec.max_radius
    if rho == 0.0:
        return n_sections * spec.n_poles + 1
    t = int(np.ceil(np.log(tol) / np.log(rho))) + n_sections * spec.n_poles + 1
    return min(max(t, 8), cap)


def basis_response(spec: BasisSpec, k: int, z):
    """Block response V_k(z) = (zI - A)**-1 B * G(z)**(k-1).

    ``z`` may be scalar or an array; the result has shape (..., n_poles).
    Evaluation at a basis pole is rejected.
    """
    if k < 1:
        raise ValueError("block index starts at 1")
    real = realization_for(spec)
    z_in = np.asarray(z, dtype=complex)
    scalar = z_in.ndim == 0
    z = np.atleast_1d(z_in)
    for p in spec.poles:
        if np.any(np.abs(z - p) < 1e-12):
            raise ValueError("response is undefined at a basis pole")
    n = real.order
    eye = np.eye(n)
    out = np.empty(z.shape + (n,), dtype=complex)
    for idx in np.ndindex(z.shape):
        out[idx] = np.linalg.solve(z[idx] * eye - real.A, real.B.astype(complex))
    if k > 1:
        g = blaschke_eval(spec, 1.0 / z)
        out = out * (g ** (k - 1))[..., None]
    return out[0] if scalar else out


def basis_char_poly(spec: BasisSpec, order: int) -> np.ndarray:
    """Characteristic delay polynomial of an ``order``-wide model on this
    basis: prod_k (1 - p_k q**-1) raised to order/n_poles, padded to formal
    degree ``order``."""
    npoles = spec.n_poles
    if order < 1 or order % npoles != 0:
        raise ValueError("model order must be a positive multiple of the "
                         "basis pole count")
    den = stable_denominator(spec)
    out = poly_pow(den, order // npoles)
    if out.size < order + 1:
        out = np.concatenate([out, np.zeros(order + 1 - out.size)])
    return out


def gram_matrix(spec: BasisSpec, n_sections: int, tol: float = 1e-12,
                cap: int = 10**6) -> np.ndarray:
    """Inner-product matrix of the stacked basis impulse responses."""
    T = tail_length(spec, n_sections, tol=tol, cap=cap)
    E = impulse_responses(spec, n_sections, T)
    return E.T @ E

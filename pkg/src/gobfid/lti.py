"""Discrete-time LTI primitives: polynomials in the delay operator, rational
models, signals, excitation and noise generation, and simulation.

Conventions used across the package:

* Polynomials are coefficient arrays in ascending powers of ``q**-1`` (the
  unit delay), so ``[1.0, -0.5]`` is ``1 - 0.5 q**-1``.
* A rational model ``num/den`` is evaluated on the unit circle as
  ``num(e**-iw) / den(e**-iw)``.
* Stability means every root of the denominator (as a polynomial in ``z``)
  lies strictly inside the unit circle.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.signal


# ---------------------------------------------------------------------------
# polynomial helpers (coefficient arrays, ascending powers of q**-1)
# ---------------------------------------------------------------------------

def as_poly(c) -> np.ndarray:
    a = np.atleast_1d(np.asarray(c, dtype=float))
    if a.ndim != 1 or a.size == 0:
        raise ValueError("polynomial coefficients must be a non-empty 1-d array")
    return a


def poly_trim(c) -> np.ndarray:
    """Drop trailing (highest-delay) zero coefficients, keeping at least one."""
    a = as_poly(c)
    nz = np.nonzero(a)[0]
    if nz.size == 0:
        return a[:1]
    return a[: nz[-1] + 1]


def poly_mul(a, b) -> np.ndarray:
    return poly_trim(np.convolve(as_poly(a), as_poly(b)))


def poly_add(a, b) -> np.ndarray:
    a, b = as_poly(a), as_poly(b)
    n = max(a.size, b.size)
    out = np.zeros(n)
    out[: a.size] += a
    out[: b.size] += b
    return poly_trim(out)


def poly_sub(a, b) -> np.ndarray:
    return poly_add(a, -as_poly(b))


def poly_pow(a, k: int) -> np.ndarray:
    if k < 0:
        raise ValueError("negative polynomial powers are not defined here")
    out = np.array([1.0])
    for _ in range(int(k)):
        out = np.convolve(out, as_poly(a))
    return poly_trim(out)


def poly_eval_zinv(c, zinv):
    """Evaluate ``sum c_k * zinv**k``; ``zinv`` may be scalar or array."""
    c = np.asarray(c)
    zinv = np.asarray(zinv, dtype=complex)
    out = np.zeros_like(zinv, dtype=complex)
    for ck in c[::-1]:
        out = out * zinv + ck
    return out


def poly_roots_z(c) -> np.ndarray:
    """Roots in the z-plane of ``c`` viewed as z**n * c(z**-1)."""
    a = poly_trim(c)
    if a.size == 1:
        return np.empty(0, dtype=complex)
    return np.roots(a)


def poly_is_stable(c, margin: float = 0.0) -> bool:
    roots = poly_roots_z(c)
    if roots.size == 0:
        return True
    return bool(np.max(np.abs(roots)) < 1.0 - margin)


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------

@dataclass
class Signal:
    """A uniformly sampled scalar signal starting at sample index ``origin``."""

    samples: np.ndarray
    origin: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)

    def __len__(self) -> int:
        return self.samples.size

    def __array__(self, dtype=None):
        return np.asarray(self.samples, dtype=dtype)


def signal_samples(x) -> np.ndarray:
    """Accept a Signal or a plain array and return float64 samples."""
    if isinstance(x, Signal):
        return x.samples
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class NoiseSpec:
    """White gaussian noise description.

    Realizations use numpy's PCG64 generator seeded explicitly, so a given
    (std, seed) pair is bit-reproducible on a platform for a fixed numpy
    version.
    """

    std: float
    seed: int

    def realize(self, n: int) -> np.ndarray:
        if self.std < 0:
            raise ValueError("noise std must be non-negative")
        rng = np.random.Generator(np.random.PCG64(self.seed))
        return self.std * rng.standard_normal(int(n))


@dataclass
class ZpkForm:
    """Factored form gain * z**z_exponent * prod(z - zeros)/prod(z - poles).

    Kept alongside coefficient arrays when a model is built from factors;
    evaluation from factors stays accurate where expanded coefficients
    suffer catastrophic cancellation (clustered roots near the unit circle).
    """

    zeros: np.ndarray
    poles: np.ndarray
    gain: float
    z_exponent: int = 0

    def __post_init__(self):
        self.zeros = np.atleast_1d(np.asarray(self.zeros, dtype=complex))
        self.poles = np.atleast_1d(np.asarray(self.poles, dtype=complex))
        if self.zeros.size == 0:
            self.zeros = np.empty(0, dtype=complex)
        if self.poles.size == 0:
            self.poles = np.empty(0, dtype=complex)

    def eval_z(self, z):
        z = np.asarray(z, dtype=complex)
        num = np.ones_like(z)
        for r in self.zeros:
            num = num * (z - r)
        den = np.ones_like(z)
        for r in self.poles:
            den = den * (z - r)
        return self.gain * z**self.z_exponent * num / den

    def coeffs(self) -> tuple[np.ndarray, np.ndarray]:
        """Expand to delay-polynomial (num, den) coefficient arrays."""
        numz = np.real_if_close(np.poly(self.zeros), tol=1e4)
        denz = np.real_if_close(np.poly(self.poles), tol=1e4)
        if np.iscomplexobj(numz) or np.iscomplexobj(denz):
            raise ValueError("zeros/poles are not closed under conjugation")
        # num(z)/den(z) * z**e -> shift into non-negative powers of q**-1
        rel = self.poles.size - self.zeros.size - self.z_exponent
        if rel < 0:
            raise ValueError("factored form is not causal (z exponent too large)")
        num = np.concatenate([np.zeros(rel), self.gain * np.asarray(numz, dtype=float)])
        den = np.asarray(denz, dtype=float)
        if abs(den[0]) < 1e-300:
            raise ValueError("degenerate denominator")
        return poly_trim(num / den[0]), poly_trim(den / den[0])


@dataclass
class RationalModel:
    """Rational transfer model ``num/den`` with optional noise numerator.

    ``den`` and ``noise_num`` are monic (leading coefficient 1).  Optional
    ``zpk`` or ``gobf`` attachments provide numerically stable evaluation
    paths; coefficient arrays remain the canonical interchange format.
    """

    num: np.ndarray
    den: np.ndarray
    noise_num: Optional[np.ndarray] = None
    zpk: Optional[ZpkForm] = None
    gobf: object = None  # duck-typed: needs .freq_response(omegas)

    def __post_init__(self):
        self.num = as_poly(self.num)
        self.den = as_poly(self.den)
        if abs(self.den[0] - 1.0) > 1e-12:
            raise ValueError("denominator must be monic")
        if self.noise_num is not None:
            self.noise_num = as_poly(self.noise_num)
            if abs(self.noise_num[0] - 1.0) > 1e-12:
                raise ValueError("noise numerator must be monic")

    # -- basic queries ------------------------------------------------------
    def poles(self) -> np.ndarray:
        if self.zpk is not None:
            return self.zpk.poles
        return poly_roots_z(self.den)

    def is_stable(self) -> bool:
        p = self.poles()
        return p.size == 0 or bool(np.max(np.abs(p)) < 1.0)

    # -- evaluation ---------------------------------------------------------
    def eval_zinv(self, zinv):
        return poly_eval_zinv(self.num, zinv) / poly_eval_zinv(self.den, zinv)

    def freq_response(self, omegas) -> np.ndarray:
        """Complex response on the unit circle at the given frequencies."""
        omegas = np.asarray(omegas, dtype=float)
        if self.gobf is not None:
            return self.gobf.freq_response(omegas)
        if self.zpk is not None:
            return self.zpk.eval_z(np.exp(1j * omegas))
        return self.eval_zinv(np.exp(-1j * omegas))

    def noise_response(self, omegas) -> np.ndarray:
        if self.noise_num is None:
            raise ValueError("model has no noise numerator")
        omegas = np.asarray(omegas, dtype=float)
        zinv = np.exp(-1j * omegas)
        return poly_eval_zinv(self.noise_num, zinv) / poly_eval_zinv(self.den, zinv)


def bode(model: RationalModel, omegas) -> tuple[np.ndarray, np.ndarray]:
    """Magnitude (dB) and phase (degrees, unwrapped) on the unit circle."""
    h = model.freq_response(omegas)
    mag_db = 20.0 * np.log10(np.maximum(np.abs(h), 1e-300))
    phase_deg = np.degrees(np.unwrap(np.angle(h)))
    return mag_db, phase_deg


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

def simulate(model: RationalModel, u, noise=None, noise_mode: str = "output",
             ) -> Signal:
    """Run ``model`` on input ``u`` from zero initial conditions.

    noise_mode "output" adds the noise realization directly to the output;
    "equation" filters it through ``noise_num/den`` (equation-error form).
    An unstable denominator is flagged in ``Signal.meta`` rather than raised,
    since diverging trajectories are legitimate test subjects.
    """
    u = signal_samples(u)
    meta: dict = {}
    if not model.is_stable():
        meta["unstable_denominator"] = True

    if model.zpk is not None:
        # second-order sections keep clustered near-unit poles accurate;
        # sosfilt realizes the biproper factor, the relative degree is a delay
        sos = scipy.signal.zpk2sos(model.zpk.zeros, model.zpk.poles,
                                   model.zpk.gain)
        raw = scipy.signal.sosfilt(sos, u)
        rel = model.zpk.poles.size - model.zpk.zeros.size \
            - model.zpk.z_exponent
        if rel < 0:
            raise ValueError("factored form is not causal")
        y = np.zeros_like(raw)
        y[rel:] = raw[:raw.size - rel] if rel else raw
        meta["simulated_via"] = "sos"
    else:
        y = scipy.signal.lfilter(model.num, model.den, u)

    if noise is not None:
        if isinstance(noise, NoiseSpec):
            e = noise.realize(u.size)
            meta["noise_std"] = noise.std
            meta["noise_seed"] = noise.seed
        else:
            e = np.asarray(noise, dtype=float)
            if e.size != u.size:
                raise ValueError("noise array length must match input length")
        if noise_mode == "output":
            y = y + e
        elif noise_mode == "equation":
            c = model.noise_num if model.noise_num is not None else np.array([1.0])
            y = y + scipy.signal.lfilter(c, model.den, e)
        else:
            raise ValueError(f"unknown noise_mode {noise_mode!r}")
        meta["noise_mode"] = noise_mode

    return Signal(y, origin=0, meta=meta)


# ---------------------------------------------------------------------------
# pseudo-random binary excitation
# ---------------------------------------------------------------------------

# Feedback tap positions (1-indexed into the shift register) giving
# maximal-length sequences for a Fibonacci XOR register of each width.
# One fixed, documented entry per width; period is 2**n - 1.
PRBS_TAPS: dict[int, tuple[int, ...]] = {
    2: (2, 1), 3: (3, 2), 4: (4, 3), 5: (5, 3), 6: (6, 5), 7: (7, 6),
    8: (8, 6, 5, 4), 9: (9, 5), 10: (10, 7), 11: (11, 9), 12: (12, 6, 4, 1),
    13: (13, 4, 3, 1), 14: (14, 5, 3, 1), 15: (15, 14), 16: (16, 15, 13, 4),
    17: (17, 14), 18: (18, 11), 19: (19, 6, 2, 1), 20: (20, 17), 21: (21, 19),
    22: (22, 21), 23: (23, 18), 24: (24, 23, 22, 17), 25: (25, 22),
    26: (26, 6, 2, 1), 27: (27, 5, 2, 1), 28: (28, 25), 29: (29, 27),
    30: (30, 6, 4, 1), 31: (31, 28), 32: (32, 22, 2, 1),
}


def prbs_period(registers: int) -> int:
    if registers not in PRBS_TAPS:
        raise ValueError("register count must be in 2..32")
    return (1 << registers) - 1


def prbs(registers: int, length: int, amplitude: float = 1.0) -> Signal:
    """Maximal-length binary sequence mapped to +-amplitude.

    The register starts from the all-ones state; output takes the bit
    shifted out each step, with bit 1 -> +amplitude.  Over one full period
    the +amplitude level occurs exactly once more than -amplitude.
    """
    if registers not in PRBS_TAPS:
        raise ValueError("register count must be in 2..32")
    if length < 1:
        raise ValueError("length must be positive")
    n = registers
    period = (1 << n) - 1
    gen_len = min(int(length), period)

    # right-shift Fibonacci register; tap exponent t addresses bit n-t so
    # the realized recurrence is the reciprocal of the table polynomial
    # (reciprocals of primitive polynomials are primitive)
    taps = PRBS_TAPS[n]
    state = (1 << n) - 1
    bits = np.empty(gen_len, dtype=np.int8)
    for i in range(gen_len):
        bits[i] = state & 1
        fb = 0
        for t in taps:
            fb ^= (state >> (n - t)) & 1
        state = (state >> 1) | (fb << (n - 1))

    out = np.where(bits > 0, amplitude, -amplitude).astype(float)
    if length > period:
        reps = int(np.ceil(length / period))
        out = np.tile(out, reps)[: int(length)]
    return Signal(out, meta={"registers": n, "period": period,
                             "amplitude": float(amplitude)})

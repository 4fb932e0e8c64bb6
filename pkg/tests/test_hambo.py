import numpy as np
import pytest

from gobfid.basis import (basis_response, impulse_responses, tail_length,
                          validate_basis)
from gobfid.hambo import (fir_operator_coefficients, hambo_operator_grid,
                          hambo_operator_transform, hambo_signal_eval,
                          hambo_signal_reconstruct, hambo_signal_transform)
from gobfid.lti import NoiseSpec, RationalModel, poly_mul


def random_pole_set(rng, n_max=4, rho_max=0.9):
    poles = []
    while len(poles) < rng.integers(1, n_max + 1):
        if rng.random() < 0.5:
            poles.append(complex(rng.uniform(-rho_max, rho_max)))
        else:
            r = rng.uniform(0.1, rho_max)
            a = rng.uniform(0.1, np.pi - 0.1)
            poles.extend([r * np.exp(1j * a), r * np.exp(-1j * a)])
    return poles


def decaying_signal(rng, n):
    """Random mixture of damped oscillations supported on t >= 1."""
    t = np.arange(n, dtype=float)
    x = np.zeros(n)
    for _ in range(rng.integers(1, 4)):
        rate = rng.uniform(0.5, 0.9)
        omega = rng.uniform(0.0, np.pi)
        phase = rng.uniform(0.0, 2 * np.pi)
        x += rng.standard_normal() * rate**t * np.cos(omega * t + phase)
    x[0] = 0.0
    return x


def test_parseval_for_decaying_signals():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        spec = validate_basis(random_pole_set(rng))
        x = decaying_signal(rng, 400)
        # grow sections until the truncated expansion captures the signal;
        # inner products must run over the basis support, not just the
        # signal support, so zero-pad to the slowest tail
        ns = 1
        while True:
            pad = max(x.size, tail_length(spec, ns, tol=1e-14))
            xp = np.concatenate([x, np.zeros(pad - x.size)])
            coeffs = hambo_signal_transform(spec, xp, ns)
            recon = hambo_signal_reconstruct(spec, coeffs, pad)
            if np.linalg.norm(xp - recon) < 1e-9 * np.linalg.norm(x):
                break
            ns += 4
            assert ns < 600, "expansion did not converge"
        energy_t = float(np.sum(x * x))
        energy_l = float(np.sum(coeffs * coeffs))
        assert abs(energy_t - energy_l) <= 1e-8 * max(1.0, energy_t)


def test_transform_annihilates_time_zero():
    spec = validate_basis([0.5])
    x = np.zeros(64)
    x[0] = 3.7   # strictly proper responses never see t = 0
    coeffs = hambo_signal_transform(spec, x, 8)
    np.testing.assert_allclose(coeffs, 0.0, atol=1e-14)


def test_reconstruct_round_trip_in_span():
    spec = validate_basis([0.3, 0.7])
    ns = 5
    rng = np.random.default_rng(5)
    coeffs = rng.standard_normal((ns, 2))
    n = tail_length(spec, ns)
    x = hambo_signal_reconstruct(spec, coeffs, n)
    back = hambo_signal_transform(spec, x, ns)
    np.testing.assert_allclose(back, coeffs, atol=1e-10)


def test_signal_eval_is_laurent_series():
    coeffs = np.array([[1.0, 2.0], [0.5, -0.25]])
    lam = 1.7 * np.exp(0.4j)
    expected = coeffs[0] / lam + coeffs[1] / lam**2
    np.testing.assert_allclose(hambo_signal_eval(coeffs, lam), expected,
                               rtol=1e-14)


def test_constant_operator_transforms_to_scaled_identity():
    rng = np.random.default_rng(31)
    spec = validate_basis(random_pole_set(rng))
    c = 2.75
    lams = np.exp(1j * np.linspace(0.2, np.pi - 0.2, 8))
    sym = hambo_operator_grid(spec, lambda z: c, lams)
    for m in sym:
        np.testing.assert_allclose(m, c * np.eye(spec.n_poles), atol=1e-10)


def test_operator_transform_consistency_on_signals():
    # ytil(lam) = Htil(lam) util(lam) for y = h * u, u supported on t >= 1
    rng = np.random.default_rng(8)
    spec = validate_basis([0.4, 0.6 + 0.2j, 0.6 - 0.2j])
    h = RationalModel(num=[0.0, 0.8, -0.3], den=[1.0, -0.5, 0.06])
    n = 4000
    u = decaying_signal(rng, n)
    import scipy.signal
    y = scipy.signal.lfilter(h.num, h.den, u)
    ns = 60
    ut = hambo_signal_transform(spec, u, ns)
    yt = hambo_signal_transform(spec, y, ns)
    for lam in (1.9 * np.exp(0.7j), 2.4 * np.exp(2.0j), 1.5 * np.exp(-1.1j)):
        lhs = hambo_signal_eval(yt, lam)
        rhs = hambo_operator_transform(spec, h, lam) @ hambo_signal_eval(ut, lam)
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_operator_transform_of_allpass_shift():
    # the basis all-pass itself transforms to (1/lam) I: one lag in the
    # transform domain per section of delay in the time domain
    spec = validate_basis([0.5, -0.2])
    from gobfid.basis import blaschke_eval
    lam = 1.6 * np.exp(0.9j)
    sym = hambo_operator_transform(spec, lambda z: blaschke_eval(spec, 1.0 / z),
                                   lam)
    np.testing.assert_allclose(sym, np.eye(2) / lam, atol=1e-10)


def test_fir_taps_match_symbol():
    rng = np.random.default_rng(12)
    spec = validate_basis([0.5, 0.8 + 0.1j, 0.8 - 0.1j])
    ns = 3
    y_blocks = 0.3 * rng.standard_normal((ns, 3))
    taps = fir_operator_coefficients(spec, y_blocks)
    assert taps.shape == (ns + 1, 3, 3)

    def op(z):
        acc = 1.0 + 0.0j
        v = {k: basis_response(spec, k, z) for k in range(1, ns + 1)}
        for k in range(1, ns + 1):
            acc += y_blocks[k - 1] @ v[k]
        return acc

    for ang in (0.41, 1.3, 2.7):
        lam = np.exp(1j * ang)
        sym = hambo_operator_transform(spec, op, lam)
        fir = sum(taps[tau] / lam**tau for tau in range(ns + 1))
        np.testing.assert_allclose(fir, sym, atol=1e-8)


def test_fir_taps_zero_blocks_are_identity():
    spec = validate_basis([0.3])
    taps = fir_operator_coefficients(spec, np.zeros((2, 1)))
    np.testing.assert_allclose(taps[0], np.eye(1), atol=1e-14)
    np.testing.assert_allclose(taps[1:], 0.0, atol=1e-12)


def test_fir_taps_shape_validation():
    spec = validate_basis([0.3, 0.4])
    with pytest.raises(ValueError):
        fir_operator_coefficients(spec, np.zeros((2, 3)))

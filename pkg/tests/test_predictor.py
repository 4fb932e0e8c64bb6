import numpy as np
import pytest
from scipy import signal

from gobfid.basis import filter_bank_run, validate_basis
from gobfid.lti import RationalModel
from gobfid.predictor import (GobfResponse, ParameterVector, PredictorConfig,
                              RegressorState, denominator_ratio_filter,
                              gobf_to_rational, predict, rational_to_gobf,
                              simulate_model_output, simulate_noise_output)


def stable_model(rng, n_den, n_num, with_noise=False):
    """Random strictly proper model with all poles well inside the circle."""
    poles = rng.uniform(-0.7, 0.7, n_den)
    den = np.poly(poles)
    num = np.concatenate([[0.0], rng.standard_normal(n_num)])
    noise = None
    if with_noise:
        zeros = rng.uniform(-0.6, 0.6, n_den)
        noise = np.poly(zeros)
    return RationalModel(num=num, den=den, noise_num=noise)


def test_config_rejects_bad_structure_and_order():
    spec = validate_basis([0.3, 0.5])
    with pytest.raises(ValueError):
        PredictorConfig("bj", spec, 4)
    with pytest.raises(ValueError):
        PredictorConfig("arx", spec, 3)
    with pytest.raises(ValueError):
        PredictorConfig("arx", spec, 0)


def test_config_channel_counts():
    spec = validate_basis([0.3, 0.5])
    assert PredictorConfig("arx", spec, 6).n_sections == 3
    assert PredictorConfig("arx", spec, 6).n_params == 12
    assert PredictorConfig("armax", spec, 6).n_params == 18
    assert PredictorConfig("oe", spec, 4).n_channels == 2


def test_parameter_vector_views_share_storage():
    cfg = PredictorConfig("armax", validate_basis([0.2, -0.4]), 6)
    pv = ParameterVector(cfg)
    pv.y_blocks[1, 0] = 3.0
    pv.u_blocks[0, 1] = -2.0
    pv.e_blocks[2, 1] = 5.0
    assert pv.theta[2] == 3.0
    assert pv.theta[6 + 1] == -2.0
    assert pv.theta[12 + 5] == 5.0


def test_parameter_vector_size_and_block_validation():
    cfg = PredictorConfig("arx", validate_basis([0.2]), 3)
    with pytest.raises(ValueError):
        ParameterVector(cfg, np.zeros(5))
    with pytest.raises(ValueError):
        ParameterVector.from_blocks(cfg, np.zeros((3, 1)), np.zeros((3, 1)),
                                    e_blocks=np.zeros((3, 1)))
    acfg = PredictorConfig("armax", validate_basis([0.2]), 3)
    with pytest.raises(ValueError):
        ParameterVector.from_blocks(acfg, np.zeros((3, 1)), np.zeros((3, 1)))


def test_from_blocks_round_trip():
    rng = np.random.default_rng(7)
    cfg = PredictorConfig("armax", validate_basis([0.3, 0.1 + 0.4j,
                                                   0.1 - 0.4j]), 6)
    yb = rng.standard_normal((2, 3))
    ub = rng.standard_normal((2, 3))
    eb = rng.standard_normal((2, 3))
    pv = ParameterVector.from_blocks(cfg, yb, ub, eb)
    np.testing.assert_array_equal(pv.y_blocks, yb)
    np.testing.assert_array_equal(pv.u_blocks, ub)
    np.testing.assert_array_equal(pv.e_blocks, eb)
    phi = rng.standard_normal(cfg.n_params)
    assert predict(pv, phi) == pytest.approx(float(pv.theta @ phi))


def test_regressor_state_matches_bank_convolution():
    rng = np.random.default_rng(11)
    spec = validate_basis([0.5, -0.2])
    cfg = PredictorConfig("armax", spec, 6)
    reg = RegressorState(cfg)
    n = 40
    u = rng.standard_normal(n)
    y = rng.standard_normal(n)
    e = rng.standard_normal(n)
    # push absorbs sample t, so phi(t) holds convolution row t+1
    ry = filter_bank_run(spec, 3, np.append(y, 0.0))
    ru = filter_bank_run(spec, 3, np.append(u, 0.0))
    re = filter_bank_run(spec, 3, np.append(e, 0.0))
    for t in range(n):
        phi = reg.step(u[t], y[t], e[t])
        want = np.concatenate([-ry[t + 1], ru[t + 1], re[t + 1]])
        np.testing.assert_allclose(phi, want, atol=1e-12)


def test_regressor_state_residual_channel_rules():
    reg = RegressorState(PredictorConfig("arx", validate_basis([0.2]), 2))
    with pytest.raises(ValueError):
        reg.step(1.0, 0.0, residual_t=0.5)
    areg = RegressorState(PredictorConfig("armax", validate_basis([0.2]), 2))
    with pytest.raises(ValueError):
        areg.step(1.0, 0.0)


def test_regressor_reset_clears_state():
    cfg = PredictorConfig("oe", validate_basis([0.4]), 3)
    reg = RegressorState(cfg)
    reg.step(1.0, 2.0)
    reg.reset()
    phi = reg.step(0.0, 0.0)
    np.testing.assert_array_equal(phi, np.zeros(cfg.n_params))


def test_delay_basis_sign_map_to_difference_equation():
    # single pole at the origin: section k carries (-1)^(k-1) q^-k, so the
    # bank weights recover the denominator coefficients up to that sign
    rng = np.random.default_rng(3)
    model = stable_model(rng, 4, 4)
    cfg = PredictorConfig("oe", validate_basis([0.0]), 4)
    pv = rational_to_gobf(model, cfg)
    for k in range(4):
        assert pv.y_blocks.ravel()[k] == pytest.approx(
            (-1) ** k * model.den[k + 1], abs=1e-12)
        assert pv.u_blocks.ravel()[k] == pytest.approx(
            (-1) ** k * model.num[k + 1], abs=1e-12)


def test_delay_basis_predictor_equals_difference_equation():
    rng = np.random.default_rng(5)
    model = stable_model(rng, 4, 4)
    cfg = PredictorConfig("oe", validate_basis([0.0]), 4)
    pv = rational_to_gobf(model, cfg)
    u = rng.standard_normal(300)
    want = signal.lfilter(model.num, model.den, u)
    got = simulate_model_output(pv, u)
    np.testing.assert_allclose(got, want, atol=1e-10)


def test_simulate_model_output_matches_lfilter():
    rng = np.random.default_rng(17)
    for structure in ("arx", "armax", "oe"):
        model = stable_model(rng, 4, 4, with_noise=(structure == "armax"))
        cfg = PredictorConfig(structure,
                              validate_basis([0.3, 0.2 + 0.3j, 0.2 - 0.3j,
                                              -0.5]), 4)
        pv = rational_to_gobf(model, cfg)
        u = rng.standard_normal(400)
        want = signal.lfilter(model.num, model.den, u)
        np.testing.assert_allclose(simulate_model_output(pv, u), want,
                                   atol=1e-9)


def test_simulate_noise_output_shapes_residuals():
    rng = np.random.default_rng(19)
    model = stable_model(rng, 4, 4, with_noise=True)
    cfg = PredictorConfig("armax", validate_basis([0.25, -0.3]), 4)
    pv = rational_to_gobf(model, cfg)
    e = rng.standard_normal(300)
    want = signal.lfilter(model.noise_num, model.den, e)
    np.testing.assert_allclose(simulate_noise_output(pv, e), want, atol=1e-9)

    arx_model = RationalModel(num=model.num, den=model.den)
    arx_cfg = PredictorConfig("arx", validate_basis([0.25, -0.3]), 4)
    arx_pv = rational_to_gobf(arx_model, arx_cfg)
    from gobfid.basis import basis_char_poly
    charpoly = basis_char_poly(arx_cfg.spec, 4)
    want = signal.lfilter(charpoly, model.den, e)
    np.testing.assert_allclose(simulate_noise_output(arx_pv, e), want,
                               atol=1e-9)

    oe_pv = rational_to_gobf(arx_model,
                             PredictorConfig("oe", arx_cfg.spec, 4))
    with pytest.raises(ValueError):
        simulate_noise_output(oe_pv, e)


def test_denominator_ratio_filter_matches_lfilter():
    rng = np.random.default_rng(23)
    model = stable_model(rng, 4, 4)
    cfg = PredictorConfig("oe", validate_basis([0.3, -0.25]), 4)
    pv = rational_to_gobf(model, cfg)
    from gobfid.basis import basis_char_poly
    charpoly = basis_char_poly(cfg.spec, 4)
    s = rng.standard_normal(250)
    want = signal.lfilter(model.den, charpoly, s)
    np.testing.assert_allclose(denominator_ratio_filter(pv, s), want,
                               atol=1e-10)


def test_gobf_response_kinds_are_consistent():
    rng = np.random.default_rng(29)
    model = stable_model(rng, 4, 4, with_noise=True)
    cfg = PredictorConfig("armax", validate_basis([0.3, 0.1]), 4)
    pv = rational_to_gobf(model, cfg)
    w = np.linspace(0.1, 3.0, 9)
    io = GobfResponse(pv, "io").freq_response(w)
    noise = GobfResponse(pv, "noise").freq_response(w)
    den_ratio = GobfResponse(pv, "den_ratio").freq_response(w)
    noise_numer = GobfResponse(pv, "noise_numer").freq_response(w)
    np.testing.assert_allclose(noise_numer, den_ratio * noise, rtol=1e-10)

    zinv = np.exp(-1j * w)
    want_io = (np.polyval(model.num[::-1], zinv)
               / np.polyval(model.den[::-1], zinv))
    np.testing.assert_allclose(io, want_io, rtol=1e-9)
    want_noise = (np.polyval(model.noise_num[::-1], zinv)
                  / np.polyval(model.den[::-1], zinv))
    np.testing.assert_allclose(noise, want_noise, rtol=1e-9)


def test_gobf_response_rejects_bad_kinds():
    cfg = PredictorConfig("oe", validate_basis([0.2]), 2)
    pv = ParameterVector(cfg)
    with pytest.raises(ValueError):
        GobfResponse(pv, "spectrum")
    with pytest.raises(ValueError):
        GobfResponse(pv, "noise")


def test_gobf_to_rational_recovers_coefficients():
    rng = np.random.default_rng(31)
    model = stable_model(rng, 6, 6, with_noise=True)
    cfg = PredictorConfig("armax",
                          validate_basis([0.4, 0.2 + 0.5j, 0.2 - 0.5j]), 6)
    pv = rational_to_gobf(model, cfg)
    back = gobf_to_rational(pv)
    np.testing.assert_allclose(back.num, model.num[:back.num.size],
                               atol=1e-9)
    np.testing.assert_allclose(back.den, model.den, atol=1e-9)
    np.testing.assert_allclose(back.noise_num, model.noise_num, atol=1e-9)
    assert back.gobf is not None


def test_gobf_to_rational_cross_check_guard():
    rng = np.random.default_rng(37)
    model = stable_model(rng, 4, 4)
    cfg = PredictorConfig("oe", validate_basis([0.3, -0.2]), 4)
    pv = rational_to_gobf(model, cfg)
    with pytest.raises(ArithmeticError):
        gobf_to_rational(pv, check_tol=0.0)


def test_rational_to_gobf_round_trip_theta():
    rng = np.random.default_rng(41)
    cfg = PredictorConfig("armax", validate_basis([0.35, -0.15]), 6)
    pv = ParameterVector(cfg, 0.1 * rng.standard_normal(cfg.n_params))
    model = gobf_to_rational(pv)
    pv2 = rational_to_gobf(model, cfg)
    np.testing.assert_allclose(pv2.theta, pv.theta, atol=1e-10)


def test_rational_to_gobf_validation():
    rng = np.random.default_rng(43)
    cfg = PredictorConfig("arx", validate_basis([0.2]), 3)
    too_big = stable_model(rng, 5, 5)
    with pytest.raises(ValueError):
        rational_to_gobf(too_big, cfg)
    direct = RationalModel(num=[0.5, 1.0], den=[1.0, -0.3])
    with pytest.raises(ValueError):
        rational_to_gobf(direct, cfg)
    bad_noise = RationalModel(num=[0.0, 1.0], den=[1.0, -0.3],
                              noise_num=[1.0, 0.7])
    with pytest.raises(ValueError):
        rational_to_gobf(bad_noise, cfg)

import numpy as np
import pytest

from gobfid.adaptation import (AdaptationOptions, AdaptationState,
                               DivergenceError, IdentResult, adaptation_step,
                               run_identification, scheme_structure)
from gobfid.basis import validate_basis
from gobfid.lti import RationalModel, prbs, simulate
from gobfid.predictor import PredictorConfig, RegressorState


def make_record(rng, n=400):
    """Fourth order plant driven by a shift register sequence."""
    model = RationalModel(num=[0.0, 0.5, -0.2, 0.1, 0.05],
                          den=np.poly([0.5, -0.3, 0.2 + 0.4j, 0.2 - 0.4j]))
    u = prbs(7, n).samples
    y = simulate(model, u).samples
    return u, y


def test_single_step_hand_values():
    st = AdaptationState(theta=[0.0], F=[[1.0]])
    eps = adaptation_step(st, [1.0], 1.0)
    assert eps == 1.0
    assert st.theta[0] == pytest.approx(0.5)
    assert st.F[0, 0] == pytest.approx(0.5)


def test_unit_forgetting_solves_regularized_least_squares():
    rng = np.random.default_rng(1)
    d, n = 3, 60
    f0 = 50.0
    theta0 = rng.standard_normal(d)
    st = AdaptationState(theta=theta0.copy(), F=f0 * np.eye(d))
    phis = rng.standard_normal((n, d))
    ys = rng.standard_normal(n)
    for phi, yv in zip(phis, ys):
        adaptation_step(st, phi, yv)
    # exact ridge solution of the growing problem at every horizon
    H = np.eye(d) / f0 + phis.T @ phis
    rhs = theta0 / f0 + phis.T @ ys
    np.testing.assert_allclose(st.theta, np.linalg.solve(H, rhs), atol=1e-10)
    np.testing.assert_allclose(st.F, np.linalg.inv(H), atol=1e-10)


def test_state_validation():
    with pytest.raises(ValueError):
        AdaptationState(theta=[0.0, 0.0], F=np.eye(3))
    with pytest.raises(ValueError):
        AdaptationState(theta=[0.0], F=np.eye(1), lam1=0.0)
    with pytest.raises(ValueError):
        AdaptationState(theta=[0.0], F=np.eye(1), lam2=2.0)
    st = AdaptationState.fresh(4, f0_scale=10.0)
    np.testing.assert_array_equal(st.F, 10.0 * np.eye(4))


def test_lam2_zero_keeps_gain_fixed():
    rng = np.random.default_rng(2)
    st = AdaptationState(theta=np.zeros(2), F=5.0 * np.eye(2), lam2=0.0)
    for _ in range(10):
        adaptation_step(st, rng.standard_normal(2), rng.standard_normal())
    np.testing.assert_array_equal(st.F, 5.0 * np.eye(2))

    # lam1 < 1 with lam2 = 0 inflates the fixed gain every step
    st2 = AdaptationState(theta=np.zeros(2), F=np.eye(2), lam1=0.5, lam2=0.0)
    adaptation_step(st2, np.zeros(2), 0.0)
    np.testing.assert_allclose(st2.F, 2.0 * np.eye(2))


def test_options_validation():
    with pytest.raises(ValueError):
        AdaptationOptions(residual_feed="smoothed")
    with pytest.raises(ValueError):
        AdaptationOptions(lambda1=1.5)
    with pytest.raises(ValueError):
        AdaptationOptions(lambda2=-0.1)
    with pytest.raises(ValueError):
        AdaptationOptions(f0_scale=0.0)
    with pytest.raises(ValueError):
        scheme_structure("rml")
    assert scheme_structure("holoe") == "oe"


def test_record_validation():
    cfg = PredictorConfig("arx", validate_basis([0.3]), 2)
    with pytest.raises(ValueError):
        run_identification(cfg, np.zeros(5), np.zeros(6))
    with pytest.raises(ValueError):
        run_identification(cfg, np.zeros(1), np.zeros(1))
    bad = np.zeros(10)
    bad[3] = np.nan
    with pytest.raises(ValueError):
        run_identification(cfg, bad, np.zeros(10))
    with pytest.raises(ValueError):
        run_identification(cfg, np.zeros(10), np.zeros(10),
                           AdaptationOptions(theta0=np.zeros(3)))


@pytest.mark.parametrize("scheme", ["hrls", "herls", "holoe"])
def test_full_pass_matches_streaming_replay(scheme):
    rng = np.random.default_rng(4)
    u, y = make_record(rng, n=200)
    structure = scheme_structure(scheme)
    cfg = PredictorConfig(structure, validate_basis([0.4, -0.2]), 4)
    opts = AdaptationOptions(f0_scale=100.0, backend="py")
    res = run_identification(cfg, u, y, opts)

    reg = RegressorState(cfg)
    st = AdaptationState.fresh(cfg.n_params, f0_scale=100.0)
    yhat_feed = 0.0
    e_feed = y[0]
    eps = np.empty(y.size - 1)
    eps_post = np.empty(y.size - 1)
    acc = np.zeros(cfg.n_params)
    for t in range(y.size - 1):
        feed = yhat_feed if structure == "oe" else y[t]
        resid = e_feed if structure == "armax" else None
        phi = reg.step(u[t], feed, resid)
        s = float(phi @ st.F @ phi)
        eps[t] = adaptation_step(st, phi, y[t + 1])
        eps_post[t] = eps[t] / (1.0 + s)
        acc += eps_post[t] * phi
        yhat_feed = y[t + 1] - eps_post[t]
        e_feed = eps_post[t]

    np.testing.assert_allclose(res.theta.theta, st.theta, atol=1e-9)
    np.testing.assert_allclose(res.eps, eps, atol=1e-9)
    np.testing.assert_allclose(res.eps_post, eps_post, atol=1e-9)
    np.testing.assert_allclose(res.F, st.F, atol=1e-9)
    np.testing.assert_allclose(res.stationarity, acc / res.steps, atol=1e-9)
    assert res.steps == y.size - 1
    assert res.scheme == scheme
    assert not res.diverged


def test_backends_agree():
    rng = np.random.default_rng(6)
    u, y = make_record(rng, n=300)
    for structure in ("arx", "armax", "oe"):
        cfg = PredictorConfig(structure, validate_basis([0.4, -0.2]), 4)
        res_py = run_identification(cfg, u, y,
                                    AdaptationOptions(backend="py"))
        res_cy = run_identification(cfg, u, y,
                                    AdaptationOptions(backend="cy"))
        assert res_py.backend == "py" and res_cy.backend == "cy"
        np.testing.assert_allclose(res_cy.theta.theta, res_py.theta.theta,
                                   rtol=0, atol=1e-10)
        np.testing.assert_allclose(res_cy.eps, res_py.eps, atol=1e-10)
        np.testing.assert_allclose(res_cy.F, res_py.F, rtol=1e-8,
                                   atol=1e-10)


def test_freeze_keeps_parameters_at_start():
    rng = np.random.default_rng(8)
    u, y = make_record(rng, n=100)
    cfg = PredictorConfig("arx", validate_basis([0.3]), 4)
    theta0 = 0.05 * rng.standard_normal(cfg.n_params)
    res = run_identification(
        cfg, u, y, AdaptationOptions(theta0=theta0, freeze=True))
    np.testing.assert_array_equal(res.theta.theta, theta0)
    np.testing.assert_array_equal(res.eps, res.eps_post)


def test_residual_feed_choice_changes_herls_path():
    rng = np.random.default_rng(9)
    u, y = make_record(rng, n=200)
    y = y + 0.05 * rng.standard_normal(y.size)
    cfg = PredictorConfig("armax", validate_basis([0.3]), 4)
    a = run_identification(cfg, u, y,
                           AdaptationOptions(residual_feed="posterior"))
    b = run_identification(cfg, u, y,
                           AdaptationOptions(residual_feed="prior"))
    assert np.max(np.abs(a.theta.theta - b.theta.theta)) > 1e-12


def test_trajectory_snapshots():
    rng = np.random.default_rng(10)
    u, y = make_record(rng, n=120)
    cfg = PredictorConfig("arx", validate_basis([0.3]), 2)
    res = run_identification(cfg, u, y,
                             AdaptationOptions(trajectory_stride=25))
    assert res.trajectory is not None
    # snapshots at each stride plus the final step
    want_idx = [25, 50, 75, 100, 119]
    np.testing.assert_array_equal(res.trajectory_idx, want_idx)
    assert res.trajectory.shape == (len(want_idx), cfg.n_params)
    np.testing.assert_array_equal(res.trajectory[-1], res.theta.theta)

    res2 = run_identification(cfg, u, y, AdaptationOptions())
    assert res2.trajectory is None and res2.trajectory_idx is None


def test_divergence_raises_and_flags():
    rng = np.random.default_rng(12)
    u, y = make_record(rng, n=100)
    cfg = PredictorConfig("arx", validate_basis([0.3]), 2)
    tight = AdaptationOptions(divergence_limit=1e-6)
    with pytest.raises(DivergenceError):
        run_identification(cfg, u, y, tight)
    res = run_identification(
        cfg, u, y, AdaptationOptions(divergence_limit=1e-6,
                                     raise_on_divergence=False))
    assert res.diverged
    assert res.steps < y.size - 1
    assert res.model is None and res.spr is None
    assert res.eps.size == res.steps


def test_spr_report_presence_by_scheme():
    rng = np.random.default_rng(14)
    u, y = make_record(rng, n=400)
    spec = validate_basis([0.4, -0.2])
    res_rls = run_identification(PredictorConfig("arx", spec, 4), u, y)
    assert res_rls.spr is None
    res_erls = run_identification(PredictorConfig("armax", spec, 4), u, y)
    assert res_erls.spr is not None
    res_oloe = run_identification(PredictorConfig("oe", spec, 4), u, y)
    assert res_oloe.spr is not None

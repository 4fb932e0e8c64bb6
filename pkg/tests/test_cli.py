import json

import numpy as np
import pytest

from gobfid.cli import main
from gobfid.io import read_columns_csv, read_record_csv
from gobfid.lti import RationalModel


def run_cli(capsys, argv):
    rc = main(argv)
    captured = capsys.readouterr()
    out = json.loads(captured.out) if captured.out.strip() else None
    err = json.loads(captured.err) if captured.err.strip() else None
    return rc, out, err


def write_model(tmp_path, with_noise=False):
    den = np.poly([0.5, -0.3, 0.2 + 0.4j, 0.2 - 0.4j]).real
    doc = {"num": [0.0, 0.5, -0.2, 0.1, 0.05], "den": list(den)}
    if with_noise:
        doc["noise_num"] = list(np.poly([0.3, -0.2, 0.1, 0.15]).real)
    path = tmp_path / "model.json"
    path.write_text(json.dumps(doc))
    return path, doc


def test_basis_command_reports_conservation(capsys, tmp_path):
    rc, out, _ = run_cli(capsys, ["basis", "--poles", "0",
                                  "--out", str(tmp_path)])
    assert rc == 0
    assert out["n_poles"] == 1
    assert out["order"] == 2
    assert out["gram_defect"] < 1e-12
    assert out["chi_conservation"] == pytest.approx(1.0, abs=1e-12)
    assert out["extrema"] == []
    assert out["artifacts"] == ["basis.json", "chi.csv"]
    assert out["version"] == 1
    # a pole at the origin keeps the distortion rate at chi = w/pi
    cols = read_columns_csv(tmp_path / "chi.csv", required=("omega", "chi"))
    np.testing.assert_allclose(cols["chi"], cols["omega"] / np.pi,
                               atol=1e-12)


def test_basis_command_closes_conjugates_and_reports_extrema(capsys):
    rc, out, _ = run_cli(capsys, ["basis", "--poles", "0.3+0.4j"])
    assert rc == 0
    assert out["n_poles"] == 2
    assert len(out["extrema"]) == 1


def test_basis_command_rejects_unparseable_poles(capsys):
    rc, out, err = run_cli(capsys, ["basis", "--poles", "fast"])
    assert rc == 2
    assert err["error"]["kind"] == "config"


def test_spr_command(capsys, tmp_path):
    rc, out, _ = run_cli(capsys, ["spr", "--num", "1,-0.3", "--den",
                                  "1,-0.3", "--lam2", "1.0",
                                  "--out", str(tmp_path)])
    assert rc == 0
    assert out["is_spr"] is True
    assert out["margin"] == pytest.approx(0.5, abs=1e-12)
    stored = json.loads((tmp_path / "spr.json").read_text())
    assert stored["margin"] == out["margin"]


def test_simulate_writes_record(capsys, tmp_path):
    mp, _ = write_model(tmp_path)
    rc, out, _ = run_cli(capsys, ["simulate", "--model", str(mp),
                                  "--registers", "9", "--samples", "300",
                                  "--snr", "25", "--out", str(tmp_path)])
    assert rc == 0
    assert out["samples"] == 300
    assert out["noise_sigma"] > 0
    t, u, y = read_record_csv(tmp_path / "record.csv")
    assert u.size == y.size == 300
    assert set(np.unique(u)) == {-1.0, 1.0}


def test_simulate_identify_round_trip_recovers_response(capsys, tmp_path):
    mp, doc = write_model(tmp_path)
    rc, _, _ = run_cli(capsys, ["simulate", "--model", str(mp),
                                "--registers", "10", "--samples", "2000",
                                "--out", str(tmp_path)])
    assert rc == 0
    out_dir = tmp_path / "fit"
    rc, summary, _ = run_cli(capsys, [
        "identify", "--record", str(tmp_path / "record.csv"),
        "--scheme", "hrls", "--poles", "0.5,-0.3,0.2+0.4j",
        "--order", "4", "--f0", "1e8", "--out", str(out_dir)])
    assert rc == 0
    assert not summary["diverged"]
    assert summary["model"] is not None

    truth = RationalModel(num=doc["num"], den=doc["den"])
    est = RationalModel(num=summary["model"]["num"],
                        den=summary["model"]["den"])
    w = np.geomspace(1e-3, np.pi, 400)
    err = np.abs(truth.freq_response(w) - est.freq_response(w))
    assert np.max(err) < 1e-6
    assert (out_dir / "bode_model.csv").exists()
    assert (out_dir / "theta_trajectory.csv").exists()
    assert (out_dir / "summary.json").exists()


def test_identify_divergence_exit_code(capsys, tmp_path):
    mp, _ = write_model(tmp_path)
    run_cli(capsys, ["simulate", "--model", str(mp), "--registers", "9",
                     "--samples", "500", "--snr", "20",
                     "--out", str(tmp_path)])
    rc, out, err = run_cli(capsys, [
        "identify", "--record", str(tmp_path / "record.csv"),
        "--scheme", "herls", "--poles", "0.3", "--order", "4",
        "--f0", "1e8", "--lambda1", "0.05"])
    assert rc == 5
    assert err["error"]["kind"] == "divergence"


def test_identify_missing_record_is_io_error(capsys, tmp_path):
    rc, out, err = run_cli(capsys, [
        "identify", "--record", str(tmp_path / "nope.csv"),
        "--scheme", "hrls", "--poles", "0.3", "--order", "2"])
    assert rc == 3
    assert err["error"]["kind"] == "io"


def test_identify_malformed_record_is_config_error(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    rc, out, err = run_cli(capsys, [
        "identify", "--record", str(bad),
        "--scheme", "hrls", "--poles", "0.3", "--order", "2"])
    assert rc == 2


def test_usage_errors_exit_2(capsys):
    rc, out, err = run_cli(capsys, ["identify", "--scheme", "hrls"])
    assert rc == 2
    assert err["error"]["kind"] == "usage"
    rc, _, err = run_cli(capsys, ["simulate", "--out", "x"])
    assert rc == 2  # no model source
    rc, _, err = run_cli(capsys, ["experiment"])
    assert rc == 2


def test_experiment_list_and_unknown_name(capsys):
    rc, out, _ = run_cli(capsys, ["experiment", "--list"])
    assert rc == 0
    assert out["experiments"] == ["long-slow-pole", "long-two-pole",
                                  "short-fast-pole"]
    rc, _, err = run_cli(capsys, ["experiment", "--name", "nope",
                                  "--out", "x"])
    assert rc == 2


def test_experiment_config_file_runs(capsys, tmp_path):
    cfg = {
        "name": "tiny",
        "source": {"benchmark": "stiff"},
        "predictor": {"scheme": "herls", "poles": [0.5], "order": 2},
        "excitation": {"registers": 7, "samples": 400},
        "noise": {"snr_db": 30.0, "seed": 7},
    }
    cp = tmp_path / "exp.json"
    cp.write_text(json.dumps(cfg))
    out_dir = tmp_path / "run"
    rc, out, _ = run_cli(capsys, ["experiment", "--config", str(cp),
                                  "--out", str(out_dir)])
    assert rc == 0
    assert out["name"] == "tiny"
    assert not out["diverged"]
    assert (out_dir / "summary.json").exists()

    bad = dict(cfg)
    bad["predictor"] = {"scheme": "lms", "poles": [0.5], "order": 2}
    cp2 = tmp_path / "bad.json"
    cp2.write_text(json.dumps(bad))
    rc, _, err = run_cli(capsys, ["experiment", "--config", str(cp2),
                                  "--out", str(out_dir)])
    assert rc == 2
    assert err["error"]["kind"] == "schema"


def test_experiment_requires_output_directory(capsys):
    rc, _, err = run_cli(capsys, ["experiment", "--name",
                                  "short-fast-pole"])
    assert rc == 2
    assert "output directory" in err["error"]["message"]


def test_bode_command(capsys, tmp_path):
    rc, out, _ = run_cli(capsys, ["bode", "--benchmark", "stiff",
                                  "--points", "50",
                                  "--out", str(tmp_path)])
    assert rc == 0
    cols = read_columns_csv(tmp_path / "bode.csv",
                            required=("omega", "mag_db", "phase_deg"))
    assert cols["omega"].size == 50
    assert cols["mag_db"][0] == pytest.approx(0.0, abs=1e-6)

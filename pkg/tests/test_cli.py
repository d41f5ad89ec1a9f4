import json
import os
import subprocess
import sys

import numpy as np
import pytest

from binomial_qec import cli, grape


def run(tmp_path, *argv):
    out = tmp_path / "out"
    rc = cli.main([*argv, "--out", str(out)])
    return rc, out


def read_manifest(out):
    with open(out / "manifest.json") as fh:
        return json.load(fh)


def check_manifest(out, command):
    man = read_manifest(out)
    assert man["command"] == command
    assert len(man["config_hash"]) == 16
    assert set(man["versions"]) == {"binomial_qec", "numpy", "scipy"}
    for name in man["outputs"]:
        assert (out / name).is_file()
    listed = set(man["outputs"]) | {"manifest.json"}
    assert listed == {p.name for p in out.iterdir()}
    return man


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "binomial_qec.cli", "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert "qec-lifetime" in res.stdout


def test_qec_lifetime_scalar(tmp_path):
    rc, out = run(tmp_path, "qec-lifetime", "--mode", "scalar",
                  "--rounds", "6")
    assert rc == 0
    data = np.loadtxt(out / "qec_lifetime.csv", delimiter=",", skiprows=1)
    assert data.shape == (7, 4)  # round, t_wall, t_wait, fchi
    assert np.all(np.diff(data[:, 3]) < 0)
    with open(out / "qec_lifetime.json") as fh:
        summary = json.load(fh)
    assert abs(summary["tau_wait_s"] - 205.8e-6) < 5e-6
    man = check_manifest(out, "qec-lifetime")
    assert "qec_lifetime.csv" in man["outputs"]


def test_qec_lifetime_zero_rounds(tmp_path):
    rc, out = run(tmp_path, "qec-lifetime", "--mode", "scalar",
                  "--rounds", "0")
    assert rc == 0
    with open(out / "qec_lifetime.json") as fh:
        summary = json.load(fh)
    assert summary["tau_wall_s"] is None and summary["tau_wait_s"] is None


def test_qec_lifetime_protocol_variants(tmp_path):
    for spec in ("1", "I", "2", "II", "3"):
        rc, _ = run(tmp_path, "qec-lifetime", "--mode", "scalar",
                    "--rounds", "4", "--protocol", spec)
        assert rc == 0
    with pytest.raises(SystemExit):
        cli.main(["qec-lifetime", "--protocol", "x", "--out",
                  str(tmp_path / "bad")])


def test_trajectory_rerun_byte_identical(tmp_path):
    argv = ("qec-lifetime", "--mode", "trajectory", "--rounds", "1",
            "--trajectories", "60", "--seed", "5")
    rc_a, out_a = run(tmp_path / "a", *argv)
    rc_b, out_b = run(tmp_path / "b", *argv)
    assert rc_a == rc_b == 0
    csv_a = (out_a / "qec_lifetime.csv").read_bytes()
    assert csv_a == (out_b / "qec_lifetime.csv").read_bytes()
    assert read_manifest(out_a)["seed"] == 5


def test_sweep_steps(tmp_path):
    rc, out = run(tmp_path, "sweep", "--vary", "steps", "--grid", "1,2")
    assert rc == 0
    rows = np.loadtxt(out / "sweep_steps.csv", delimiter=",", skiprows=1,
                      ndmin=2)
    assert rows.shape == (2, 3)  # x, t_w_opt, tau
    assert rows[1, 2] > rows[0, 2]
    man = check_manifest(out, "sweep")
    assert "sweep_steps_point00.csv" in man["outputs"]


def test_sweep_single_point_grid(tmp_path):
    rc, out = run(tmp_path, "sweep", "--vary", "tw", "--grid", "17.895e-6")
    assert rc == 0
    lines = (out / "sweep_tw.csv").read_text().strip().splitlines()
    assert len(lines) == 2  # header + the single optimum row
    assert lines[1].startswith(",")  # the wait-time sweep has no x value


def test_sweep_bad_grid(tmp_path):
    rc, _ = run(tmp_path, "sweep", "--vary", "steps", "--grid", "1,two")
    assert rc == 2


def test_budget(tmp_path):
    rc, out = run(tmp_path, "budget")
    assert rc == 0
    with open(out / "budget.json") as fh:
        summary = json.load(fh)
    assert abs(summary["weighted_loss"]["total"] - 0.155) < 5e-3
    lines = (out / "budget.csv").read_text().strip().splitlines()
    assert lines[0] == "source,branch,weight,loss"
    assert len(lines) == 1 + 5 * 4  # five sources x four branches
    check_manifest(out, "budget")


def test_ramsey(tmp_path):
    rc, out = run(tmp_path, "ramsey")
    assert rc == 0
    with open(out / "ramsey.json") as fh:
        summary = json.load(fh)
    assert 1.8 < summary["ratio"] < 2.7
    for name in ("ramsey_protected.csv", "ramsey_unprotected.csv"):
        assert (out / name).is_file()


def test_ramsey_too_short_to_fit(tmp_path):
    rc, _ = run(tmp_path, "ramsey", "--rounds", "2")
    assert rc == 3


def test_rb(tmp_path):
    rc, out = run(tmp_path, "rb", "--seed", "7")
    assert rc == 0
    with open(out / "rb.json") as fh:
        summary = json.load(fh)
    assert 0.02 < summary["r_gate"] < 0.045
    rc2, _ = run(tmp_path / "bad", "rb", "--interleave", "99")
    assert rc2 == 2


def test_tgate(tmp_path):
    rc, out = run(tmp_path, "tgate", "--reps", "8")
    assert rc == 0
    with open(out / "tgate.json") as fh:
        summary = json.load(fh)
    assert abs(summary["per_repetition"] - 0.974) < 0.01
    assert np.loadtxt(out / "tgate.csv", delimiter=",",
                      skiprows=1).shape == (9, 2)


def test_kerr_cal(tmp_path):
    rc, out = run(tmp_path, "kerr-cal")
    assert rc == 0
    with open(out / "kerr_cal.json") as fh:
        summary = json.load(fh)
    assert summary["rel_err_k_s"] < 0.02
    assert summary["rel_err_k_s_prime"] < 0.05
    rc2, _ = run(tmp_path / "bad", "kerr-cal", "--detuning=-5e3")
    assert rc2 == 2


def test_qnd_parity(tmp_path):
    rc, out = run(tmp_path, "qnd-parity", "--intervals", "5e-6,10e-6,20e-6")
    assert rc == 0
    with open(out / "qnd_parity.json") as fh:
        summary = json.load(fh)
    assert 0.0 < summary["p_d"] < 0.01
    man = check_manifest(out, "qnd-parity")
    assert "qnd_parity_curve00.csv" in man["outputs"]


def test_grape_iteration_cap(tmp_path):
    rc, out = run(tmp_path, "grape", "--max-iters", "4", "--seed", "1")
    assert rc == 0
    pulses = grape.PulseSet.from_csv(out / "grape_pulse.csv")
    assert pulses.n_samples == round(grape.PULSE_DURATION / grape.DT_DAC)
    trace = np.loadtxt(out / "grape_trace.csv", delimiter=",", skiprows=1)
    assert np.all(np.diff(trace[:, 1]) >= 0)
    with open(out / "grape.json") as fh:
        summary = json.load(fh)
    assert summary["converged"] is False


def test_config_file_and_env(tmp_path, monkeypatch):
    path = tmp_path / "run.ini"
    path.write_text("[protocol]\nmode = scalar\nn_rounds = 3\n")
    rc, out = run(tmp_path / "a", "--config", str(path), "qec-lifetime")
    assert rc == 0
    assert np.loadtxt(out / "qec_lifetime.csv", delimiter=",",
                      skiprows=1).shape[0] == 4
    monkeypatch.setenv("BQEC_CONFIG", str(path))
    rc, out = run(tmp_path / "b", "qec-lifetime")
    assert rc == 0
    assert np.loadtxt(out / "qec_lifetime.csv", delimiter=",",
                      skiprows=1).shape[0] == 4


def test_config_errors(tmp_path, monkeypatch):
    bad_key = tmp_path / "bad_key.ini"
    bad_key.write_text("[protocol]\nbananas = 4\n")
    rc, _ = run(tmp_path / "a", "--config", str(bad_key), "budget")
    assert rc == 2
    bad_val = tmp_path / "bad_val.ini"
    bad_val.write_text("[noise]\ntau_s = -1e-6\n")
    rc, _ = run(tmp_path / "b", "--config", str(bad_val), "budget")
    assert rc == 2
    monkeypatch.setenv("BQEC_CONFIG", str(tmp_path / "missing.ini"))
    rc = cli.main(["budget", "--out", str(tmp_path / "c")])
    assert rc == 2


def test_default_out_dir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    rc = cli.main(["budget"])
    assert rc == 0
    assert os.path.isfile(tmp_path / "bqec_out" / "budget" / "budget.json")

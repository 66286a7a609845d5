"""Command-line driver: exit codes, outputs, config replay."""

import json
import os

import numpy as np
import pytest

from roughflow.cli import (
    EXIT_BLOWUP,
    EXIT_ERROR,
    EXIT_FAIL,
    EXIT_INCONCLUSIVE,
    EXIT_OK,
    main,
)
from roughflow.paths import SampledPath


def read_json(d, name):
    with open(os.path.join(str(d), name)) as fh:
        return json.load(fh)


def test_simulate_linear_ou(tmp_path):
    rc = main(["simulate", "--system", "linear-ou", "--level", "8",
               "--out", str(tmp_path)])
    assert rc == EXIT_OK
    status = read_json(tmp_path, "status.json")
    assert status["status"] == "completed"
    assert status["blowup_time"] is None
    path = SampledPath.from_csv(os.path.join(str(tmp_path), "trajectory.csv"))
    assert path.n == 257 and path.dim == 2
    assert os.path.exists(os.path.join(str(tmp_path), "config.json"))


def test_simulate_gl09_reports_blowup(tmp_path):
    rc = main(["simulate", "--system", "gl09", "--out", str(tmp_path)])
    assert rc == EXIT_BLOWUP
    status = read_json(tmp_path, "status.json")
    assert status["status"] == "blown-up"
    assert abs(status["blowup_time"] - 1.0) < 0.02


def test_simulate_config_replay_is_bit_identical(tmp_path):
    d1, d2 = tmp_path / "a", tmp_path / "b"
    rc = main(["simulate", "--system", "linear-ou", "--level", "8",
               "--seed", "5", "--out", str(d1)])
    assert rc == EXIT_OK
    rc = main(["simulate", "--config", str(d1 / "config.json"), "--out", str(d2)])
    assert rc == EXIT_OK
    with open(d1 / "trajectory.csv", "rb") as fh:
        a = fh.read()
    with open(d2 / "trajectory.csv", "rb") as fh:
        b = fh.read()
    assert a == b


def test_malformed_config_is_an_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    rc = main(["simulate", "--config", str(bad), "--out", str(tmp_path)])
    assert rc == EXIT_ERROR


def test_config_command_mismatch_is_an_error(tmp_path):
    rc = main(["simulate", "--system", "linear-ou", "--level", "6",
               "--out", str(tmp_path)])
    assert rc == EXIT_OK
    rc = main(["certify", "--config", str(tmp_path / "config.json"),
               "--out", str(tmp_path)])
    assert rc == EXIT_ERROR


def test_unknown_system_is_an_error(tmp_path):
    rc = main(["simulate", "--system", "not-a-system", "--out", str(tmp_path)])
    assert rc == EXIT_ERROR


def test_certify_linear_ou_passes(tmp_path):
    rc = main(["certify", "--system", "linear-ou", "--T", "5", "--level", "10",
               "--out", str(tmp_path)])
    assert rc == EXIT_OK
    report = read_json(tmp_path, "report.json")
    assert report["overall"] == "pass"
    assert report["R"] > report["R0"]


def test_certify_quiet_driver_is_inconclusive(tmp_path):
    rc = main(["certify", "--system", "linear-ou", "--driver", "zero",
               "--T", "2", "--level", "8", "--out", str(tmp_path)])
    assert rc == EXIT_INCONCLUSIVE
    assert read_json(tmp_path, "report.json")["overall"] == "inconclusive"


def test_certify_jump_curve_fails(tmp_path):
    spec = {"dim": 1, "driver_dim": 1,
            "sigma": [[[{"coef": 1.0, "powers": [0]}]]]}
    spec_file = tmp_path / "additive.json"
    spec_file.write_text(json.dumps(spec))
    t = np.linspace(0.0, 1.0, 257)
    gamma = np.where(t >= 0.5, 100.0, 0.0)
    csv = tmp_path / "gamma.csv"
    SampledPath(t, gamma).to_csv(str(csv))
    rc = main(["certify", "--system", str(spec_file), "--gamma-csv", str(csv),
               "--K", "1", "--R", "7", "--out", str(tmp_path)])
    assert rc == EXIT_FAIL
    report = read_json(tmp_path, "report.json")
    assert report["overall"] == "fail"
    # the jump crosses several rungs at once, leaving zero-gap levels
    assert any(l["verdict"] == "fail" and l["gap"] == 0.0 for l in report["levels"])


def test_reproduce_gl09_matches_oracle(tmp_path):
    rc = main(["reproduce", "gl09", "--out", str(tmp_path)])
    assert rc == EXIT_OK
    report = read_json(tmp_path, "report.json")
    assert report["oracle_blowup_time"] == 1.0
    assert report["blowup_rel_error"] < 0.02
    with open(tmp_path / "plot.csv") as fh:
        assert fh.readline().strip() == "t, norm, log10_norm"


def test_reproduce_requires_valid_id(tmp_path):
    assert main(["reproduce", "--out", str(tmp_path)]) == EXIT_ERROR
    assert main(["reproduce", "nope", "--out", str(tmp_path)]) == EXIT_ERROR


def test_lift_outputs_cells_and_defect(tmp_path):
    rc = main(["lift", "--level", "8", "--refine", "8", "--out", str(tmp_path)])
    assert rc == EXIT_OK
    summary = read_json(tmp_path, "summary.json")
    assert summary["n"] == 33 and summary["dim"] == 2
    assert summary["chen_defect"] < 1e-12
    rows = np.loadtxt(tmp_path / "lift.csv", delimiter=",", skiprows=1)
    assert rows.shape == (32, 7)  # i, t_lo, t_hi, xx11, xx12, xx21, xx22


def test_estimate_linear_path(tmp_path):
    t = np.linspace(0.0, 1.0, 257)
    csv = tmp_path / "path.csv"
    SampledPath(t, 2.0 * t).to_csv(str(csv))
    rc = main(["estimate", "--input", str(csv), "--out", str(tmp_path)])
    assert rc == EXIT_OK
    est = read_json(tmp_path, "estimates.json")
    assert est["holder_exponent"] == pytest.approx(1.0, abs=1e-6)
    assert est["p_variation"] == pytest.approx(2.0, abs=1e-12)
    assert est["holder_norm"] == pytest.approx(2.0, abs=1e-12)  # alpha = 0.5


def test_estimate_requires_input(tmp_path):
    assert main(["estimate", "--out", str(tmp_path)]) == EXIT_ERROR


def test_sweep_counts_blowups(tmp_path):
    spec = {"dim": 1, "b": [[{"coef": 1.0, "powers": [2]}]]}
    spec_file = tmp_path / "square.json"
    spec_file.write_text(json.dumps(spec))
    rc = main(["sweep", "--system", str(spec_file), "--grid-lo", "-1",
               "--grid-hi", "1", "--grid-n", "3", "--T", "3", "--level", "8",
               "--seeds", "0,1", "--out", str(tmp_path)])
    assert rc == EXIT_OK
    summary = read_json(tmp_path, "summary.json")
    assert summary["n_runs"] == 6
    # x' = x^2 from x0 = 1 outruns the noise well before t = 3
    assert summary["n_blown_up"] >= 2
    with open(tmp_path / "sweep.csv") as fh:
        header = fh.readline().strip()
    assert header.startswith("seed, x0_1, status, blowup_time")

import json
import subprocess
import sys

import numpy as np
import pytest

from toricbath import reports
from toricbath.cli import (
    EXIT_INVALID_PARAMS,
    EXIT_OK,
    EXIT_UNKNOWN_EXPERIMENT,
    EXIT_UNWRITABLE_OUTPUT,
    EXPERIMENTS,
    config_from_dict,
    main,
)


def write_config(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def run_cli(tmp_path, payload, *extra):
    cfg = write_config(tmp_path, payload)
    return main([payload["experiment"], "--config", cfg, *extra])


def stderr_json(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    return json.loads(err[0])


class TestErrorContract:
    def test_unknown_experiment(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"out": str(tmp_path)})
        rc = main(["frobnicate", "--config", cfg])
        assert rc == EXIT_UNKNOWN_EXPERIMENT
        msg = stderr_json(capsys)
        assert msg["error"] == "unknown_experiment"
        assert "frobnicate" in msg["message"]

    # meanfield never builds a lattice, so it only rejects odd L if the
    # config layer does; kernel would catch it later anyway
    @pytest.mark.parametrize("experiment", ["kernel", "meanfield"])
    @pytest.mark.parametrize("size", [7, 0, -4])
    def test_invalid_lattice_size(self, tmp_path, capsys, experiment, size):
        rc = run_cli(tmp_path, {"experiment": experiment,
                                "params": {"L": size},
                                "out": str(tmp_path)})
        assert rc == EXIT_INVALID_PARAMS
        assert stderr_json(capsys)["error"] == "invalid_parameters"

    def test_non_integer_lattice_size(self, tmp_path, capsys):
        rc = run_cli(tmp_path, {"experiment": "meanfield",
                                "params": {"L": 8.5}, "out": str(tmp_path)})
        assert rc == EXIT_INVALID_PARAMS
        assert "integer" in stderr_json(capsys)["message"]

    def test_kernel_size_cap(self, tmp_path, capsys):
        rc = run_cli(tmp_path, {"experiment": "kernel", "params": {"L": 26},
                                "out": str(tmp_path)})
        assert rc == EXIT_INVALID_PARAMS
        assert "capped" in stderr_json(capsys)["message"]

    def test_missing_config_file(self, tmp_path, capsys):
        rc = main(["kernel", "--config", str(tmp_path / "absent.json")])
        assert rc == EXIT_INVALID_PARAMS
        assert stderr_json(capsys)["error"] == "invalid_parameters"

    def test_malformed_json(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        rc = main(["kernel", "--config", str(bad)])
        assert rc == EXIT_INVALID_PARAMS
        assert "JSON" in stderr_json(capsys)["message"]

    def test_unknown_config_key(self, tmp_path, capsys):
        rc = run_cli(tmp_path, {"experiment": "meanfield", "typo": 1,
                                "out": str(tmp_path)})
        assert rc == EXIT_INVALID_PARAMS
        assert "typo" in stderr_json(capsys)["message"]

    def test_experiment_mismatch(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"experiment": "kernel",
                                      "out": str(tmp_path)})
        rc = main(["meanfield", "--config", cfg])
        assert rc == EXIT_INVALID_PARAMS
        assert "does not match" in stderr_json(capsys)["message"]

    @pytest.mark.parametrize("experiment", ["simulate", "hinder",
                                            "decode-test",
                                            "oracle-displacement"])
    def test_stochastic_requires_seed(self, tmp_path, capsys, experiment):
        rc = run_cli(tmp_path, {"experiment": experiment,
                                "out": str(tmp_path)})
        assert rc == EXIT_INVALID_PARAMS
        assert "seed" in stderr_json(capsys)["message"]

    def test_unwritable_output(self, tmp_path, capsys):
        blocker = tmp_path / "blocker"
        blocker.write_text("not a directory")
        rc = run_cli(tmp_path, {"experiment": "meanfield",
                                "options": {"grid": [1.0]},
                                "out": str(blocker / "sub")})
        assert rc == EXIT_UNWRITABLE_OUTPUT
        assert stderr_json(capsys)["error"] == "unwritable_output"

    def test_energy_validation(self, tmp_path, capsys):
        base = {"experiment": "energy", "params": {"L": 8},
                "out": str(tmp_path)}
        for occupied in ([0], [0, 1, 64], [500], [0, 0]):
            payload = dict(base, options={"occupied": occupied})
            assert run_cli(tmp_path, payload) == EXIT_INVALID_PARAMS
            capsys.readouterr()


class TestConfigHandling:
    def test_seed_flag_overrides_config(self, tmp_path):
        payload = {"experiment": "decode-test", "params": {"L": 4},
                   "seed": 1, "options": {"n_instances": 3},
                   "out": str(tmp_path)}
        cfg = write_config(tmp_path, payload)
        assert main(["decode-test", "--config", cfg, "--seed", "9"]) == EXIT_OK
        header = reports.parse_header(str(tmp_path / "decode_test.csv"))
        assert header["seed"] == 9
        assert header["config"]["seed"] == 9

    def test_out_flag_overrides_config(self, tmp_path):
        outdir = tmp_path / "elsewhere"
        payload = {"experiment": "moments", "out": str(tmp_path)}
        cfg = write_config(tmp_path, payload)
        assert main(["moments", "--config", cfg,
                     "--out", str(outdir)]) == EXIT_OK
        assert (outdir / "moments.csv").exists()
        assert not (tmp_path / "moments.csv").exists()

    def test_header_reparses_to_identical_config(self, tmp_path):
        payload = {"experiment": "decode-test",
                   "params": {"L": 6, "beta": 2.5}, "seed": 321,
                   "ensemble": 7, "options": {"n_instances": 4},
                   "out": str(tmp_path)}
        assert run_cli(tmp_path, payload) == EXIT_OK
        header = reports.parse_header(str(tmp_path / "decode_test.csv"))
        rebuilt = config_from_dict(header["config"], "decode-test")
        assert rebuilt.to_dict() == header["config"]
        assert rebuilt.seed == 321
        assert rebuilt.params.beta == 2.5

    def test_summary_carries_version_config_seed(self, tmp_path):
        payload = {"experiment": "meanfield", "options": {"grid": [1.0]},
                   "out": str(tmp_path)}
        assert run_cli(tmp_path, payload) == EXIT_OK
        doc = json.loads((tmp_path / "meanfield_summary.json").read_text())
        assert set(doc) == {"version", "config", "seed", "results"}
        assert doc["config"]["experiment"] == "meanfield"


class TestDeterminism:
    def test_simulate_rerun_byte_identical(self, tmp_path):
        payload = {"experiment": "simulate", "params": {"L": 8},
                   "ensemble": 4, "horizon": 1e4, "seed": 42,
                   "options": {"bd0_targets": [3.0, 4.0]},
                   "out": str(tmp_path)}
        assert run_cli(tmp_path, payload) == EXIT_OK
        first_csv = (tmp_path / "simulate.csv").read_bytes()
        first_sum = (tmp_path / "simulate_summary.json").read_bytes()
        assert run_cli(tmp_path, payload) == EXIT_OK
        assert (tmp_path / "simulate.csv").read_bytes() == first_csv
        assert (tmp_path / "simulate_summary.json").read_bytes() == first_sum

    def test_seed_changes_simulate_output(self, tmp_path):
        payload = {"experiment": "simulate", "params": {"L": 8},
                   "ensemble": 4, "horizon": 1e4, "seed": 42,
                   "options": {"bd0_targets": [3.0]}, "out": str(tmp_path)}
        assert run_cli(tmp_path, payload) == EXIT_OK
        first = (tmp_path / "simulate.csv").read_text().splitlines()[3:]
        payload["seed"] = 43
        assert run_cli(tmp_path, payload) == EXIT_OK
        second = (tmp_path / "simulate.csv").read_text().splitlines()[3:]
        assert first != second


class TestExperimentOutputs:
    def test_meanfield_root_structure(self, tmp_path):
        payload = {"experiment": "meanfield",
                   "options": {"grid": [1.0, 6.0]}, "out": str(tmp_path)}
        assert run_cli(tmp_path, payload) == EXIT_OK
        lines = (tmp_path / "meanfield.csv").read_text().splitlines()
        rows = [line.split(",") for line in lines[4:]]
        low = [r for r in rows if float(r[0]) == 1.0]
        high = [r for r in rows if float(r[0]) == 6.0]
        assert len(low) == 1 and float(low[0][1]) == 0.5 and low[0][2] == "1"
        assert len(high) == 3
        stable_roots = sorted(float(r[1]) for r in high if r[2] == "1")
        assert len(stable_roots) == 2
        assert stable_roots[0] < 0.01 and stable_roots[1] > 0.99
        assert all(r[3] == "supercritical" for r in high)

    def test_mu_scan_disk_slope_matches_linear_growth(self, tmp_path):
        payload = {"experiment": "mu-scan", "out": str(tmp_path)}
        assert run_cli(tmp_path, payload) == EXIT_OK
        doc = json.loads((tmp_path / "mu_scan_summary.json").read_text())
        slope = doc["results"]["fit_disk"]["slope"]
        assert abs(slope / 2.0 - 1.0) < 0.10
        lines = (tmp_path / "mu_scan.csv").read_text().splitlines()
        last = lines[-1].split(",")
        assert float(last[0]) == 64
        assert 1.8 < float(last[4]) < 2.2

    def test_sum_scan_grows_linearly(self, tmp_path):
        payload = {"experiment": "sum-scan",
                   "options": {"L_values": [8, 16, 32, 64], "exponent": 1},
                   "out": str(tmp_path)}
        assert run_cli(tmp_path, payload) == EXIT_OK
        doc = json.loads((tmp_path / "sum_scan_summary.json").read_text())
        assert doc["results"]["fit"]["r2"] > 0.999

    def test_kernel_matches_continuum_at_distance(self, tmp_path):
        payload = {"experiment": "kernel", "params": {"L": 8},
                   "out": str(tmp_path)}
        assert run_cli(tmp_path, payload) == EXIT_OK
        lines = (tmp_path / "kernel.csv").read_text().splitlines()
        assert lines[3] == "p,q,r,J,J_continuum"
        for line in lines[4:]:
            _, _, r, j, cont = line.split(",")
            assert float(j) == pytest.approx(float(cont), rel=1e-12)

    def test_oracle_displacement_routes_agree(self, tmp_path):
        payload = {"experiment": "oracle-displacement",
                   "params": {"L": 6, "Lambda": 12}, "ensemble": 4,
                   "seed": 9, "out": str(tmp_path)}
        assert run_cli(tmp_path, payload) == EXIT_OK
        doc = json.loads(
            (tmp_path / "oracle_displacement_summary.json").read_text())
        assert doc["results"]["max_rel_err"] < 1e-10

    def test_oracle_density_frozen_ratio(self, tmp_path):
        payload = {"experiment": "oracle-density",
                   "params": {"L": 4, "Lambda": 8, "A": 3e-4, "t": 1.0,
                              "beta": 0.05, "coupling_kind": "density"},
                   "out": str(tmp_path)}
        assert run_cli(tmp_path, payload) == EXIT_OK
        doc = json.loads(
            (tmp_path / "oracle_density_summary.json").read_text())
        res = doc["results"]
        assert res["positive"]
        assert res["ratio"] == pytest.approx(1.200, abs=0.005)

    def test_decode_test_small_weights_never_fail(self, tmp_path):
        payload = {"experiment": "decode-test", "params": {"L": 8},
                   "seed": 5, "options": {"n_instances": 30,
                                          "max_weight": 2},
                   "out": str(tmp_path)}
        assert run_cli(tmp_path, payload) == EXIT_OK
        doc = json.loads((tmp_path / "decode_test_summary.json").read_text())
        assert doc["results"]["failure_rate"] == 0.0

    def test_hinder_reports_barriers(self, tmp_path):
        payload = {"experiment": "hinder", "params": {"L": 8, "beta": 1.0},
                   "ensemble": 6, "horizon": 2e5, "seed": 77,
                   "options": {"A_w_values": [0.7, 0.55]},
                   "out": str(tmp_path)}
        assert run_cli(tmp_path, payload) == EXIT_OK
        doc = json.loads((tmp_path / "hinder_summary.json").read_text())
        # weaker trap amplitude means a taller barrier out of it
        barriers = doc["results"]["barriers"]
        assert barriers == sorted(barriers)
        assert all(b > 0 for b in barriers)

    def test_energy_reports_fields(self, tmp_path):
        payload = {"experiment": "energy", "params": {"L": 8},
                   "options": {"occupied": [0, 2, 64, 66]},
                   "out": str(tmp_path)}
        assert run_cli(tmp_path, payload) == EXIT_OK
        doc = json.loads((tmp_path / "energy_summary.json").read_text())
        res = doc["results"]
        assert res["anyons_e"] == 2 and res["anyons_m"] == 2
        assert np.isfinite(res["total_energy"])
        lines = (tmp_path / "energy.csv").read_text().splitlines()
        assert len(lines) == 4 + 4

    def test_figures_are_png(self, tmp_path):
        payload = {"experiment": "moments", "out": str(tmp_path)}
        assert run_cli(tmp_path, payload) == EXIT_OK
        blob = (tmp_path / "moments.png").read_bytes()
        assert blob[:8] == b"\x89PNG\r\n\x1a\n"
        assert len(blob) > 1000

    def test_every_experiment_has_handler(self):
        assert sorted(EXPERIMENTS) == [
            "chi", "decode-test", "energy", "hinder", "kernel", "meanfield",
            "moments", "mu-scan", "oracle-density", "oracle-displacement",
            "simulate", "sum-scan"]


def test_module_entrypoint(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "meanfield",
                               "options": {"grid": [1.5]},
                               "out": str(tmp_path)}))
    proc = subprocess.run(
        [sys.executable, "-m", "toricbath.cli", "meanfield",
         "--config", str(cfg)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "meanfield.csv" in proc.stdout

"""Command workflows end to end: schemas, exit codes, and manifest reruns."""

import json
from importlib import resources

import jsonschema
import numpy as np
import pytest

import simoauth as sa
from simoauth.cli import main

FAST_SYSTEM = {
    "n_antennas": 16,
    "msg_order": 2,
    "total_power": 6.0,
    "max_msg_ser": 0.05,
}


def load_schema(name):
    path = resources.files("simoauth") / "schemas" / f"{name}.schema.json"
    return json.loads(path.read_text())


def read_csv(path):
    lines = path.read_text().strip().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


@pytest.fixture(scope="module")
def design_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("design")
    assert main(["design", "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def optimize_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("optimize")
    cfg = write_config(out, {"system": FAST_SYSTEM})
    assert main(["optimize", "--config", cfg, "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def tradeoff_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("tradeoff")
    cfg = write_config(out, {"system": FAST_SYSTEM})
    code = main(["tradeoff", "--config", cfg, "--delta-grid", "0.05,1e-9,0.02",
                 "--out", str(out)])
    assert code == 0
    return out


@pytest.fixture(scope="module")
def simulate_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("simulate")
    payload = {
        "system": {"n_antennas": 128, "msg_order": 4, "max_msg_ser": 1e-5},
        "simulate": {
            "trials": 10_000,
            "snr_db_grid": [9.0, 8.0],
            "packets": {"count": 2000, "symbols": 4,
                        "forge_count": 2000, "forge_symbols": 4},
        },
        "seed": 7,
    }
    cfg = write_config(base, payload)
    outs = []
    for workers in (1, 2):
        out = base / f"w{workers}"
        code = main(["simulate", "--config", cfg, "--out", str(out),
                     "--workers", str(workers)])
        assert code == 0
        outs.append(out)
    return outs


class TestDesignCommand:
    def test_outputs_validate_against_schemas(self, design_run):
        design = json.loads((design_run / "design.json").read_text())
        jsonschema.validate(design, load_schema("design"))
        manifest = json.loads((design_run / "manifest.json").read_text())
        jsonschema.validate(manifest, load_schema("manifest"))
        assert manifest["command"] == "design"
        assert manifest["outputs"] == ["design.json"]

    def test_report_is_structurally_valid(self, design_run):
        design = json.loads((design_run / "design.json").read_text())
        assert design["interleaving_ok"] is True
        assert np.all(np.diff(design["embedded_msg_thresholds"]) > 0)
        assert design["analytic"]["msg_ser"] <= design["analytic"]["msg_ser_upper"]

    def test_floats_round_trip_exactly(self, design_run):
        text = (design_run / "design.json").read_text()
        design = json.loads(text)
        assert design["ratio"] == sa.solve_ratio(4, 10.0)
        # emitted with enough digits that the decimal form is not truncated
        ratio_token = [ln for ln in text.splitlines() if '"ratio"' in ln][0]
        digits = sum(c.isdigit() for c in ratio_token.split(":")[1])
        assert digits >= 16

    def test_manifest_rerun_reproduces_outputs(self, design_run, tmp_path):
        out2 = tmp_path / "rerun"
        code = main(["design", "--config", str(design_run / "manifest.json"),
                     "--out", str(out2)])
        assert code == 0
        assert (out2 / "design.json").read_bytes() == (design_run / "design.json").read_bytes()
        first = json.loads((design_run / "manifest.json").read_text())
        second = json.loads((out2 / "manifest.json").read_text())
        for volatile in (first, second):
            volatile.pop("wall_clock_s")
            volatile["config"].pop("out")
        assert first == second

    def test_uniform_power_mode(self, tmp_path):
        cfg = write_config(tmp_path, {"design": {"uniform_power": 0.5}})
        assert main(["design", "--config", cfg, "--out", str(tmp_path)]) == 0
        design = json.loads((tmp_path / "design.json").read_text())
        np.testing.assert_allclose(design["tag_symbol_powers"], 0.5, rtol=1e-12)

    def test_zero_message_power_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"system": {"msg_power": 0.0}})
        assert main(["design", "--config", cfg, "--out", str(tmp_path)]) == 2
        assert "gamma_m must be positive" in capsys.readouterr().err

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"bogus": 1})
        assert main(["design", "--config", cfg, "--out", str(tmp_path)]) == 2
        assert "unknown configuration key: bogus" in capsys.readouterr().err

    def test_tag_ratio_flag_range(self, tmp_path, capsys):
        code = main(["design", "--tag-ratio", "1.5", "--out", str(tmp_path)])
        assert code == 2
        assert "ratio_fraction" in capsys.readouterr().err

    def test_explicit_ratios_length_checked(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"design": {"ratios": [0.2, 0.3]}})
        assert main(["design", "--config", cfg, "--out", str(tmp_path)]) == 2
        assert "expected 4 entries" in capsys.readouterr().err


class TestOptimizeCommand:
    def test_outputs_validate_against_schemas(self, optimize_run):
        payload = json.loads((optimize_run / "optimize.json").read_text())
        jsonschema.validate(payload, load_schema("optimize"))
        manifest = json.loads((optimize_run / "manifest.json").read_text())
        jsonschema.validate(manifest, load_schema("manifest"))
        assert sorted(manifest["outputs"]) == ["h_curve.csv", "optimize.json"]

    def test_curve_csv_structure(self, optimize_run):
        header, rows = read_csv(optimize_run / "h_curve.csv")
        assert header == ["alpha", "tag_ser", "message_ser_upper", "feasible"]
        assert len(rows) >= 64
        alpha = np.array([float(r[0]) for r in rows])
        tag = np.array([float(r[1]) for r in rows])
        feasible = np.array([r[3] == "1" for r in rows])
        assert np.all(np.diff(alpha) > 0)
        assert np.all((tag[feasible] >= 0) & (tag[feasible] <= 0.5))

    def test_summary_consistent_with_curve(self, optimize_run):
        payload = json.loads((optimize_run / "optimize.json").read_text())
        header, rows = read_csv(optimize_run / "h_curve.csv")
        feasible_tag = [float(r[1]) for r in rows if r[3] == "1"]
        assert payload["h_star"] == pytest.approx(min(feasible_tag), rel=1e-12)
        assert payload["alpha0"] < payload["alpha_star"] <= 1.0
        solution = payload["solution"]
        assert solution["status"] == "optimal"
        assert solution["kkt_residual"] < 1e-6

    def test_grid_points_config_only(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"system": FAST_SYSTEM,
                                      "optimize": {"grid_points": 32}})
        assert main(["optimize", "--config", cfg, "--out", str(tmp_path)]) == 2
        assert "grid_points must be at least 64" in capsys.readouterr().err
        with pytest.raises(SystemExit):
            main(["optimize", "--grid-points", "64", "--out", str(tmp_path)])

    def test_infeasible_exit_code(self, tmp_path, capsys):
        system = dict(FAST_SYSTEM, max_msg_ser=1e-9)
        cfg = write_config(tmp_path, {"system": system})
        assert main(["optimize", "--config", cfg, "--out", str(tmp_path)]) == 3
        assert "minimum achievable message-SER bound" in capsys.readouterr().err


class TestTradeoffCommand:
    def test_sorted_with_nonincreasing_feasible_column(self, tradeoff_run):
        header, rows = read_csv(tradeoff_run / "tradeoff.csv")
        assert header == ["delta", "min_tag_ser", "alpha_star", "feasible"]
        deltas = [float(r[0]) for r in rows]
        assert deltas == sorted(deltas) == [1e-9, 0.02, 0.05]
        assert [r[3] for r in rows] == ["0", "1", "1"]
        assert np.isnan(float(rows[0][1]))
        feasible_tag = [float(r[1]) for r in rows if r[3] == "1"]
        assert feasible_tag == sorted(feasible_tag, reverse=True)

    def test_manifest_records_command(self, tradeoff_run):
        manifest = json.loads((tradeoff_run / "manifest.json").read_text())
        jsonschema.validate(manifest, load_schema("manifest"))
        assert manifest["command"] == "tradeoff"
        assert manifest["config"]["tradeoff"]["delta_grid"] == [0.05, 1e-9, 0.02]


class TestSimulateCommand:
    def test_outputs_validate_against_schemas(self, simulate_runs):
        out, _ = simulate_runs
        auth = json.loads((out / "auth.json").read_text())
        jsonschema.validate(auth, load_schema("auth"))
        manifest = json.loads((out / "manifest.json").read_text())
        jsonschema.validate(manifest, load_schema("manifest"))
        assert sorted(manifest["outputs"]) == ["auth.json", "fig3.csv"]

    def test_sweep_csv_columns(self, simulate_runs):
        header, rows = read_csv(simulate_runs[0] / "fig3.csv")
        assert header[:2] == ["snr_db", "msg_ser_analytic"]
        for column in ("tag_ser_analytic", "tag_ser_empirical",
                       "uniform_tag_ser_analytic", "uniform_tag_wilson_hi"):
            assert column in header
        assert [float(r[0]) for r in rows] == [8.0, 9.0]

    def test_auth_summary_counts(self, simulate_runs):
        auth = json.loads((simulate_runs[0] / "auth.json").read_text())
        for block in (auth["legitimate"], auth["forgery"]):
            assert block["n_packets"] == 2000
            total = block["accepted"] + block["message_corrupted"] + block["tag_mismatch"]
            assert total == block["n_packets"]
        assert auth["forgery"]["acceptance_rate"] < auth["legitimate"]["acceptance_rate"]

    def test_byte_identical_across_worker_counts(self, simulate_runs):
        one, two = simulate_runs
        assert (one / "fig3.csv").read_bytes() == (two / "fig3.csv").read_bytes()
        assert (one / "auth.json").read_bytes() == (two / "auth.json").read_bytes()

    def test_low_trial_warning(self, tmp_path, capsys):
        # a single-point grid aborts before any heavy work, but the trial-count
        # advisory has already been printed by then
        payload = {
            "system": {"n_antennas": 128, "msg_order": 4, "max_msg_ser": 1e-5},
            "simulate": {"trials": 10_000, "snr_db_grid": [8.0]},
        }
        cfg = write_config(tmp_path, payload)
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 2
        err = capsys.readouterr().err
        assert "expected events" in err
        assert "fewer than two feasible points" in err

import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

from eprbfock import cli, evaluate

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def write_cfg(tmp_path, data, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return p


class TestVerify:
    @pytest.mark.parametrize("suite", ["algebra", "eprb", "vacuum-rep"])
    def test_suites_pass(self, suite, capsys):
        code, out, _ = run(["verify", suite], capsys)
        assert code == 0
        assert "FAIL" not in out

    def test_field_suite_reports_only_the_quadratic_order_check(self, capsys):
        code, out, _ = run(["verify", "field"], capsys)
        assert code == 1
        failing = [line for line in out.splitlines() if line.startswith("FAIL")]
        assert len(failing) == 1
        assert "slope 2.0" in failing[0]
        assert any(line.startswith("PASS") and "slope 3.0" in line for line in out.splitlines())

    def test_unknown_suite_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["verify", "nonsense"])
        assert exc.value.code == 2

    def test_report_file(self, tmp_path, capsys):
        out = tmp_path / "checks.csv"
        run(["verify", "algebra", "--output", out], capsys)
        rows = evaluate.parse_rows(out.read_text(), "csv")
        assert rows and all(r["passed"] == "True" for r in rows)


class TestCorrelate:
    def test_eprb_parallel_z_is_minus_one(self, tmp_path, capsys):
        cfg = yaml.safe_load((CONFIG_DIR / "eprb4.yaml").read_text())
        cfg.pop("random_pairs")
        code, out, _ = run(["correlate", "--config", write_cfg(tmp_path, cfg)], capsys)
        assert code == 0
        rows = evaluate.parse_rows(out, "csv")
        assert [r["gamma"] for r in rows] == pytest.approx(np.linspace(0, math.pi / 4, 5))
        assert all(abs(r["correlation"] + 1) <= 1e-12 for r in rows)
        assert all(r["schema_version"] == 1 and r["input"] for r in rows)

    def test_eprb_paths_agree(self, capsys):
        code, out, _ = run(["correlate", "--config", CONFIG_DIR / "eprb4.yaml"], capsys)
        rows = evaluate.parse_rows(out, "csv")
        assert len(rows) == 25
        assert max(r["path_spread"] for r in rows) <= 1e-12

    def test_continuum_paths_agree(self, capsys):
        code, out, _ = run(["correlate", "--config", CONFIG_DIR / "continuum.yaml"], capsys)
        assert code == 0
        for r in evaluate.parse_rows(out, "csv"):
            assert r["L_relative_spread"] <= 1e-4

    def test_continuum_zero_coupling(self, tmp_path, capsys):
        cfg = yaml.safe_load((CONFIG_DIR / "continuum.yaml").read_text())
        cfg["coupling"]["strength"] = 0.0
        cfg["analyzers"] = {"n1": [0.0, 0.6, 0.8], "n2": [0.0, 0.0, 1.0]}
        code, out, _ = run(["correlate", "--config", write_cfg(tmp_path, cfg)], capsys)
        assert code == 0
        assert all(r["correlation"] == -0.8 for r in evaluate.parse_rows(out, "csv"))

    def test_lattice(self, capsys):
        code, out, _ = run(["correlate", "--config", CONFIG_DIR / "lattice.yaml"], capsys)
        assert code == 0
        (row,) = evaluate.parse_rows(out, "csv")
        assert row["difference"] <= 1e-5

    def test_lattice_over_budget_is_resource_error(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("EPRBFOCK_LATTICE__SITES", "20")
        code, _, err = run(["correlate", "--config", CONFIG_DIR / "lattice.yaml"], capsys)
        assert code == 3
        assert "resource" in err

    def test_invalid_config_reports_location(self, tmp_path, capsys):
        cfg = yaml.safe_load((CONFIG_DIR / "continuum.yaml").read_text())
        cfg["wavepackets"][0]["alpha"] = "wide"
        code, _, err = run(["correlate", "--config", write_cfg(tmp_path, cfg)], capsys)
        assert code == 2
        assert "wavepackets.0.alpha" in err

    def test_missing_config(self, capsys):
        code, _, err = run(["correlate"], capsys)
        assert code == 2
        assert "--config" in err

    def test_env_override(self, capsys, monkeypatch):
        monkeypatch.setenv("EPRBFOCK_GAMMA", "0.3")
        monkeypatch.setenv("EPRBFOCK_SWEEP", "null")
        code, out, _ = run(["correlate", "--config", CONFIG_DIR / "eprb4.yaml"], capsys)
        assert code == 0
        assert all(r["gamma"] == 0.3 for r in evaluate.parse_rows(out, "csv"))


class TestOutput:
    @pytest.mark.parametrize("fmt", ["csv", "jsonl"])
    def test_deterministic_and_round_trips(self, fmt, tmp_path, capsys):
        args = ["correlate", "--config", CONFIG_DIR / "eprb4.yaml", "--format", fmt, "--seed", 11]
        a, b = tmp_path / "a", tmp_path / "b"
        run([*args, "--output", a], capsys)
        run([*args, "--output", b], capsys)
        assert a.read_bytes() == b.read_bytes()
        rows = evaluate.parse_rows(a.read_text(), fmt)
        assert evaluate.format_rows(rows, fmt) == a.read_text()

    def test_seed_changes_random_pairs(self, capsys):
        _, a, _ = run(["correlate", "--config", CONFIG_DIR / "eprb4.yaml", "--seed", 1], capsys)
        _, b, _ = run(["correlate", "--config", CONFIG_DIR / "eprb4.yaml", "--seed", 2], capsys)
        assert a != b

    def test_timing_column_is_opt_in(self, capsys):
        _, out, _ = run(["correlate", "--config", CONFIG_DIR / "eprb4.yaml"], capsys)
        assert "elapsed_s" not in out
        _, out, _ = run(["correlate", "--config", CONFIG_DIR / "eprb4.yaml", "--timing"], capsys)
        assert "elapsed_s" in out.splitlines()[0]

    def test_parallel_sweep_keeps_order(self, capsys):
        base = ["sweep", "--config", CONFIG_DIR / "continuum.yaml"]
        _, serial, _ = run(base, capsys)
        _, parallel, _ = run([*base, "--jobs", 2], capsys)
        assert serial == parallel
        assert [r["point"] for r in evaluate.parse_rows(serial, "csv")] == [0, 1, 2, 3]


class TestSweepAndEntangle:
    def test_sweep_flags_override(self, capsys):
        code, out, _ = run(["sweep", "--config", CONFIG_DIR / "continuum.yaml", "--parameter", "epsilon",
                            "--start", 0.0, "--stop", 0.2, "--steps", 3], capsys)
        assert code == 0
        rows = evaluate.parse_rows(out, "csv")
        assert [r["epsilon"] for r in rows] == [0.0, 0.1, 0.2]

    def test_sweep_needs_a_sweep(self, tmp_path, capsys):
        cfg = yaml.safe_load((CONFIG_DIR / "continuum.yaml").read_text())
        cfg.pop("sweep")
        code, _, err = run(["sweep", "--config", write_cfg(tmp_path, cfg)], capsys)
        assert code == 2

    def test_entangle_continuum(self, capsys):
        code, out, _ = run(["entangle", "--config", CONFIG_DIR / "continuum.yaml", "--format", "jsonl"], capsys)
        assert code == 0
        rows = evaluate.parse_rows(out, "jsonl")
        assert len(rows) == 4
        assert all("correlation" not in r for r in rows)
        assert all(r["L_relative_spread"] <= 1e-4 for r in rows)

    def test_entangle_on_eprb_model_is_usage_error(self, capsys):
        code, _, err = run(["entangle", "--config", CONFIG_DIR / "eprb4.yaml"], capsys)
        assert code == 2


class TestFit:
    def _samples(self, tmp_path, capsys, gamma):
        cfg = yaml.safe_load((CONFIG_DIR / "eprb4.yaml").read_text())
        cfg.update(gamma=gamma, sweep=None, random_pairs=30)
        out = tmp_path / "samples.csv"
        run(["correlate", "--config", write_cfg(tmp_path, cfg), "--output", out], capsys)
        return out

    def test_fit_from_correlate_output(self, tmp_path, capsys):
        samples = self._samples(tmp_path, capsys, math.pi / 4)
        code, out, _ = run(["fit", samples], capsys)
        assert code == 0
        (row,) = evaluate.parse_rows(out, "csv")
        assert abs(row["estimate"] - 1) <= 1e-10
        assert row["n_samples"] == 31

    def test_empty_file(self, tmp_path, capsys):
        p = tmp_path / "empty.csv"
        p.write_text("")
        code, _, err = run(["fit", p], capsys)
        assert code == 2
        assert "estimation" in err

    def test_rank_deficient(self, tmp_path, capsys):
        p = tmp_path / "z.csv"
        p.write_text("n1x,n1y,n1z,n2x,n2y,n2z,correlation\n0,0,1,0,0,1,-1\n0,0,1,0,0,-1,1\n")
        code, _, err = run(["fit", p], capsys)
        assert code == 2
        assert "rank-deficient" in err

    def test_malformed_rows_report_lines(self, tmp_path, capsys):
        p = tmp_path / "bad.csv"
        p.write_text("n1x,n1y,n1z,n2x,n2y,n2z,correlation\n0,0,1,1,0,0,0\n0,0,x,1,0,0,0\n1,1,1,1,0,0,0\n")
        code, _, err = run(["fit", p], capsys)
        assert code == 2
        assert "line 3" in err and "line 4" in err

    def test_missing_file(self, tmp_path, capsys):
        code, _, _ = run(["fit", tmp_path / "nope.csv"], capsys)
        assert code == 2


class TestLatticeCompare:
    def test_default_scenario(self, capsys):
        code, out, err = run(["lattice-compare"], capsys)
        assert code == 0
        rows = evaluate.parse_rows(out, "csv")
        assert [r["epsilon"] for r in rows] == [0.1, 0.03, 0.01, 0.003]
        assert "slope" in err

    def test_zero_epsilon_row_and_single_epsilon(self, tmp_path, capsys):
        cfg = yaml.safe_load((CONFIG_DIR / "lattice.yaml").read_text())
        code, out, _ = run(["lattice-compare", "--config", CONFIG_DIR / "lattice.yaml"], capsys)
        rows = evaluate.parse_rows(out, "csv")
        assert rows[-1]["epsilon"] == 0.0 and rows[-1]["residual"] <= 1e-12
        cfg["epsilons"] = [0.01]
        code, out, err = run(["lattice-compare", "--config", write_cfg(tmp_path, cfg)], capsys)
        assert code == 0
        (row,) = evaluate.parse_rows(out, "csv")
        assert row["slope"] is None
        assert "unavailable" in err

    def test_wrong_model(self, capsys):
        code, _, _ = run(["lattice-compare", "--config", CONFIG_DIR / "eprb4.yaml"], capsys)
        assert code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "eprbfock", "verify", "algebra"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert "checks passed" in proc.stdout

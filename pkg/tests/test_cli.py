"""Exit codes, manifests, and byte-level determinism of the command line."""
import json
import warnings

import numpy as np
import pytest

from dslab.cli import ConfigError, main, parse_config, serialize_config

SIM_CONFIG = """
[run]
seed = 7

[simulate]
modes = 32
domain_length = 6.283185307179586
s = 1.0
amplitude = 0.3
dt = 0.01
t_end = 1.0
sample_every = 10
"""


def write_config(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def read_manifest(out_dir):
    files = sorted(p.name for p in out_dir.iterdir() if p.name == "manifest.json")
    assert files == ["manifest.json"]
    return json.loads((out_dir / "manifest.json").read_text(encoding="utf-8"))


class TestConfigText:
    def test_parse_sections_and_values(self):
        cfg = parse_config("[a]\nx = 1\ny = two words\n\n[b]\nz = 3.5\n")
        assert cfg == {"a": {"x": "1", "y": "two words"}, "b": {"z": "3.5"}}

    def test_serialize_parse_idempotent(self):
        text = "[a]\n# comment\nx = 1\n\n[b]\nz = 3.5\n"
        once = serialize_config(parse_config(text))
        twice = serialize_config(parse_config(once))
        assert once == twice
        assert parse_config(once) == parse_config(text)

    def test_malformed_config_raises(self):
        with pytest.raises(ConfigError, match="malformed"):
            parse_config("key_without_section = 1\n")

    def test_missing_file_exit_code_and_message(self, tmp_path, capsys):
        missing = str(tmp_path / "nope.ini")
        code = main(["simulate", "--config", missing, "--out", str(tmp_path / "o")])
        assert code == 2
        assert missing in capsys.readouterr().err


class TestSimulate:
    def test_reruns_are_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path, SIM_CONFIG)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert main(["simulate", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["simulate", "--config", cfg, "--out", str(out2)]) == 0
        csv1 = (out1 / "simulate.csv").read_bytes()
        assert csv1 == (out2 / "simulate.csv").read_bytes()
        m1, m2 = read_manifest(out1), read_manifest(out2)
        assert m1["content_hash"] == m2["content_hash"]

    def test_manifest_declares_row_count_and_steps(self, tmp_path):
        cfg = write_config(tmp_path, SIM_CONFIG)
        out = tmp_path / "o"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
        manifest = read_manifest(out)
        assert manifest["command"] == "simulate"
        assert manifest["seed"] == 7
        assert manifest["step_count"] == 100
        (entry,) = manifest["outputs"]
        lines = (out / entry["path"]).read_text(encoding="utf-8").splitlines()
        assert lines[0] == "t,mass,h1,energy"
        assert len(lines) - 1 == entry["rows"] == 11
        # '.' decimal markers, no locale artifacts
        assert "," not in lines[1].replace(",", "", 3)

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = write_config(tmp_path, SIM_CONFIG)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert main(["simulate", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["simulate", "--config", cfg, "--out", str(out2), "--seed", "99"]) == 0
        m1, m2 = read_manifest(out1), read_manifest(out2)
        assert m2["seed"] == 99
        assert m1["content_hash"] != m2["content_hash"]
        assert (out1 / "simulate.csv").read_bytes() != (out2 / "simulate.csv").read_bytes()

    def test_zero_datum_runs_with_zero_diagnostics(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "[simulate]\nmodes = 16\namplitude = 0.0\ndt = 0.05\nt_end = 0.5\n",
        )
        out = tmp_path / "o"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
        rows = (out / "simulate.csv").read_text(encoding="utf-8").splitlines()[1:]
        for row in rows:
            _, mass, h1, energy = row.split(",")
            assert float(mass) == 0.0 and float(h1) == 0.0 and float(energy) == 0.0

    def test_non_finite_state_exits_three(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "[simulate]\nmodes = 16\namplitude = 1e200\ndt = 0.1\nt_end = 0.5\n",
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # the overflow on the way down is the point
            code = main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")])
        assert code == 3
        assert "non-finite" in capsys.readouterr().err

    def test_bad_value_exits_two(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path, "[simulate]\nmodes = 16\namplitude = lots\ndt = 0.01\nt_end = 1\n"
        )
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
        assert "amplitude" in capsys.readouterr().err


class TestSmoothing:
    def test_exploratory_range_warns_but_succeeds(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "[smoothing]\nmodes = 16,32,64\ns = 0.6\na = 0.45\namplitude = 0.01\n"
            "t_probe = 0.5\ndt = 0.05\ndomain_length = 6.283185307179586\n",
        )
        out = tmp_path / "o"
        with pytest.warns(UserWarning, match="exploratory"):
            assert main(["smoothing", "--config", cfg, "--out", str(out)]) == 0
        manifest = read_manifest(out)
        assert manifest["details"]["exploratory"] is True
        (entry,) = manifest["outputs"]
        lines = (out / entry["path"]).read_text(encoding="utf-8").splitlines()
        assert len(lines) - 1 == entry["rows"] == 3

    def test_covered_range_is_not_flagged(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "[smoothing]\nmodes = 16,32,64\ns = 1.4\na = 0.3\namplitude = 0.01\n"
            "t_probe = 0.5\ndt = 0.05\ndomain_length = 6.283185307179586\n",
        )
        out = tmp_path / "o"
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert main(["smoothing", "--config", cfg, "--out", str(out)]) == 0
        assert read_manifest(out)["details"]["exploratory"] is False


class TestKnapp:
    def test_sweep_writes_ratio_table(self, tmp_path):
        cfg = write_config(
            tmp_path, "[knapp]\nn_values = 4,8,16,32\ntime_samples = 16\na = 0.3\n"
        )
        out = tmp_path / "o"
        assert main(["knapp", "--config", cfg, "--out", str(out)]) == 0
        manifest = read_manifest(out)
        assert set(manifest["details"]) == {"ratio_slope", "u_slope", "v_slope"}
        (entry,) = manifest["outputs"]
        lines = (out / entry["path"]).read_text(encoding="utf-8").splitlines()
        assert lines[0] == "n,u_norm,v_norm,ratio"
        assert len(lines) - 1 == entry["rows"] == 4

    def test_unrepresentable_box_names_the_inequality(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "[knapp]\nn_values = 8,16,32,64\ngrid_n = 8\n")
        assert main(["knapp", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
        err = capsys.readouterr().err
        assert "1/N" in err and "dxi" in err


class TestAttractor:
    ATTR = (
        "[run]\nseed = 3\n\n[attractor]\nmodes = 32\nmember_count = 2\n"
        "delta = 0.4\nforcing_amplitude = 0.1\nhorizon = 6.0\ndt = 0.01\n"
        "sample_every = 10\nprobes = 3,6\nh1_min = 0.5\nh1_max = 1.5\n"
    )

    def test_absorbing_outputs_and_thread_invariance(self, tmp_path):
        cfg = write_config(tmp_path, self.ATTR)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert main(["attractor", "--config", cfg, "--out", str(out1)]) == 0
        assert main(
            ["attractor", "--config", cfg, "--out", str(out2), "--threads", "2"]
        ) == 0
        assert (out1 / "attractor.csv").read_bytes() == (out2 / "attractor.csv").read_bytes()
        assert (out1 / "summary.json").read_bytes() == (out2 / "summary.json").read_bytes()
        manifest = read_manifest(out1)
        csv_entry, json_entry = manifest["outputs"]
        lines = (out1 / csv_entry["path"]).read_text(encoding="utf-8").splitlines()
        assert lines[0] == "t,h1_0,h1_1"
        assert len(lines) - 1 == csv_entry["rows"] == 61
        summary = json.loads((out1 / json_entry["path"]).read_text(encoding="utf-8"))
        assert {"a", "delta", "forcing_l2", "fit_radius", "absorbed"} <= set(summary)

    def test_compactness_experiment(self, tmp_path):
        cfg = write_config(tmp_path, self.ATTR + "experiment = compactness\n")
        out = tmp_path / "o"
        assert main(["attractor", "--config", cfg, "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
        assert set(summary["pairwise_h1_median"]) == {"3.0", "6.0"}
        lines = (out / "attractor.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "member,remainder_h1a,free_h1a"
        assert len(lines) - 1 == 2

    def test_zero_delta_exits_two_with_message(self, tmp_path, capsys):
        cfg = write_config(tmp_path, self.ATTR.replace("delta = 0.4", "delta = 0.0"))
        assert main(["attractor", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
        assert "dissipative mode requires delta > 0" in capsys.readouterr().err

    def test_unknown_experiment_exits_two(self, tmp_path, capsys):
        cfg = write_config(tmp_path, self.ATTR + "experiment = sideways\n")
        assert main(["attractor", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
        assert "sideways" in capsys.readouterr().err


class TestBlocks:
    def test_sampled_sweep_is_deterministic(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "[run]\nseed = 5\n\n[blocks]\ncases = plus_plus_plus,coherent\n"
            "per_case = 1\nrestarts = 1\niters = 10\n",
        )
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert main(["blocks", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["blocks", "--config", cfg, "--out", str(out2)]) == 0
        assert (out1 / "blocks.csv").read_bytes() == (out2 / "blocks.csv").read_bytes()
        manifest = read_manifest(out1)
        assert {"c_star", "c_fit"} <= set(manifest["details"])
        (entry,) = manifest["outputs"]
        lines = (out1 / entry["path"]).read_text(encoding="utf-8").splitlines()
        assert len(lines) - 1 == entry["rows"] == 2
        assert lines[1].startswith("plus_plus_plus,") and lines[2].startswith("coherent,")

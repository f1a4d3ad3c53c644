import csv
import json

import numpy as np
import pytest

from lurecert.catalog import EXAMPLE2_P
from lurecert.cli import main
from lurecert.config import bundled_config, load_config, parse_config
from lurecert.errors import ConfigError

EX1 = str(bundled_config("example1"))
EX2 = str(bundled_config("example2"))
FAST = ["--dt", "0.01", "--horizon", "5"]

MINIMAL = """\
system:
  A: [[-2, 0.5], [0.3, -3]]
  B1: [[1], [0.5]]
  B2: [[1], [0]]
  C1: [[1, 1]]
  C2: [[0, 1]]
nonlinearity:
  kind: saturation
"""


def write(tmp_path, text, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def report(out):
    with open(out / "report.json") as fh:
        return json.load(fh)


class TestParse:
    def test_bundled_configs(self):
        for name in ("example1", "example2", "template"):
            cfg = load_config(bundled_config(name))
            assert cfg.sha256 and cfg.system.n >= 2

    def test_minimal_defaults(self):
        cfg = parse_config(MINIMAL)
        np.testing.assert_array_equal(cfg.Delta, np.eye(1))
        assert cfg.trajectories == [] and cfg.verification["estimates"] == []

    def test_syntax_error_has_line(self):
        with pytest.raises(ConfigError) as info:
            parse_config(MINIMAL + "delta: [1, 2\n")
        assert info.value.line is not None and info.value.line >= 9

    def test_shape_error_has_line(self):
        bad = MINIMAL.replace("B2: [[1], [0]]", "B2: [[1], [0], [2]]")
        with pytest.raises(ConfigError) as info:
            parse_config(bad)
        assert info.value.line == 4

    def test_not_metzler(self):
        with pytest.raises(ConfigError, match="system"):
            parse_config(MINIMAL.replace("0.5], [0.3", "-0.5], [0.3"))

    @pytest.mark.parametrize("extra, message", [
        ("certificate: {q: [1]}\n", "both q and r"),
        ("certificate: {l: [0, 0]}\n", "supplied p"),
        ("certificate: {r: [-1], q: [1]}\n", "nonnegative"),
        ("forcing: {a: {kind: noise}}\n", "unknown signal kind"),
        ("forcing: {a: {kind: constant, value: [1, 2]}}\n", "dimension"),
        ("nonlinearity_extra: 1\nverification: {estimates: [thm9]}\n", "unknown estimate"),
        ("delta: {pattern: [[-1]]}\n", "nonnegative"),
        ("simulation: {dt: 0}\n", "simulation"),
    ])
    def test_rejections(self, extra, message):
        with pytest.raises(ConfigError, match=message):
            parse_config(MINIMAL + extra)

    def test_unknown_trajectory_reference(self):
        text = MINIMAL + ("forcing: {z: {kind: constant, value: [0]}}\n"
                          "simulation: {trajectories: [{name: a, forcing: z}]}\n"
                          "verification: {estimates: [thm1_H1], pairs: [[a, b]]}\n")
        with pytest.raises(ConfigError, match="unknown trajectory 'b'"):
            parse_config(text)

    def test_h2_estimates_need_weights(self):
        text = MINIMAL + ("forcing: {z: {kind: constant, value: [0]}}\n"
                          "simulation: {trajectories: [{name: a, forcing: z}]}\n"
                          "verification: {estimates: [thm1_H2], pairs: [[a, a]]}\n")
        with pytest.raises(ConfigError, match="q and r"):
            parse_config(text)

    def test_overrides(self):
        cfg = load_config(EX1, {"delta.value": 91, "simulation.dt": 0.01})
        assert cfg.delta_value == 91 and cfg.sim.dt == 0.01


class TestExitCodes:
    def test_certify_example2(self, tmp_path, capsys):
        assert main(["certify", "--config", EX2, "--out", str(tmp_path)]) == 0
        assert "H2: holds" in capsys.readouterr().out
        res = report(tmp_path)["results"]
        np.testing.assert_allclose(res["H2"]["p"], EXAMPLE2_P, atol=1e-3)
        assert res["H1"]["holds"]

    def test_certify_above_threshold(self, tmp_path, capsys):
        assert main(["certify", "--config", EX1, "--delta", "91", "--out", str(tmp_path)]) == 1
        assert "H1: fails" in capsys.readouterr().out
        assert report(tmp_path)["status"] != "ok"

    def test_malformed_yaml(self, tmp_path, capsys):
        path = write(tmp_path, MINIMAL + "delta: [1, 2\n")
        assert main(["certify", "--config", path, "--out", str(tmp_path)]) == 2
        err = capsys.readouterr().err
        assert err.startswith("config error") and "line" in err

    def test_missing_file(self, tmp_path, capsys):
        assert main(["certify", "--config", str(tmp_path / "nope.yaml")]) == 2
        assert "cannot read config" in capsys.readouterr().err

    def test_config_required(self, capsys):
        assert main(["certify"]) == 2

    def test_zero_pattern(self, tmp_path, capsys):
        text = MINIMAL + "delta: {pattern: [[0]]}\nthreshold: {lo: 0, hi: 5}\n"
        assert main(["threshold", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == 2
        assert "no dependence on delta" in capsys.readouterr().err

    def test_threshold_example1(self, tmp_path):
        assert main(["threshold", "--config", EX1, "--out", str(tmp_path)]) == 0
        th = report(tmp_path)["results"]["threshold"]
        assert 89.84 <= th["delta"] <= 89.94 and th["monotone"]

    def test_threshold_bad_bracket(self, tmp_path, capsys):
        code = main(["threshold", "--config", EX1, "--lo", "95", "--hi", "100",
                     "--out", str(tmp_path)])
        assert code == 2 and "bracket" in capsys.readouterr().err

    def test_empty_verify(self, tmp_path, capsys):
        assert main(["verify", "--config", write(tmp_path, MINIMAL), "--out", str(tmp_path)]) == 0
        assert "nothing requested" in capsys.readouterr().out

    def test_bad_thread_count(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("LURECERT_THREADS", "zero")
        assert main(["simulate", "--config", EX2, *FAST, "--out", str(tmp_path)]) == 2
        assert "LURECERT_THREADS" in capsys.readouterr().err


class TestFalsification:
    def corrupted(self, tmp_path, xi):
        text = open(EX2).read()
        p = "[0.049975, 0.049975, 0.049975, 0.194903]"
        text = text.replace("certificate:\n  xi: 0.1",
                            f"certificate:\n  p: {p}\n  xi: {xi}")
        return write(tmp_path, text)

    def test_supplied_certificate_accepted(self, tmp_path):
        path = self.corrupted(tmp_path, 0.1)
        assert main(["verify", "--config", path, *FAST, "--out", str(tmp_path / "ok")]) == 0

    def test_inflated_rate_detected(self, tmp_path, capsys):
        path = self.corrupted(tmp_path, 10.0)
        assert main(["verify", "--config", path, *FAST, "--out", str(tmp_path / "bad")]) == 1
        out = capsys.readouterr().out
        assert "FAILED: thm1_H1 on pair" in out


class TestArtifacts:
    def test_byte_identical_reruns(self, tmp_path):
        for tag in ("a", "b"):
            assert main(["simulate", "--config", EX2, *FAST, "--out", str(tmp_path / tag)]) == 0
        ra, rb = report(tmp_path / "a"), report(tmp_path / "b")
        assert ra == rb
        for row in ra["manifest"]:
            a = (tmp_path / "a" / row["file"]).read_bytes()
            assert a == (tmp_path / "b" / row["file"]).read_bytes()

    def test_manifest_counts(self, tmp_path):
        assert main(["simulate", "--config", EX2, *FAST, "--out", str(tmp_path)]) == 0
        rep = report(tmp_path)
        assert {r["file"] for r in rep["manifest"]} >= {"ap.csv", "zero.csv"}
        for row in rep["manifest"]:
            with open(tmp_path / row["file"]) as fh:
                rows = list(csv.reader(fh))
            assert rows[0][0] == "t"
            assert len(rows) - 1 == row["rows"] == 501
            assert len(rows[0]) == row["columns"] == 8
        assert "timings" not in rep

    def test_timings_flag(self, tmp_path):
        assert main(["certify", "--config", EX2, "--timings", "--out", str(tmp_path)]) == 0
        assert "certify" in report(tmp_path)["timings"]

    def test_two_row_csv(self, tmp_path):
        code = main(["simulate", "--config", EX2, "--dt", "0.01", "--horizon", "0.01",
                     "--traj", "ap", "--out", str(tmp_path)])
        assert code == 0
        rows = (tmp_path / "ap.csv").read_text().strip().splitlines()
        assert len(rows) == 3 and rows[2].startswith("0.01")

    def test_svg(self, tmp_path):
        assert main(["simulate", "--config", EX2, *FAST, "--svg", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "y2.svg").read_text().startswith("<svg")

    def test_example2_quick(self, tmp_path, capsys):
        assert main(["example2", *FAST, "--out", str(tmp_path)]) == 0
        res = report(tmp_path)["results"]
        assert all(e["holds"] for e in res["verification"]["estimates"])
        assert any(r["file"].startswith("diff_") for r in report(tmp_path)["manifest"])


class TestEquilibriumCommand:
    def test_zero_forcing(self, tmp_path):
        text = MINIMAL + "forcing: {z: {kind: constant, value: [0]}}\n"
        path = write(tmp_path, text)
        assert main(["equilibrium", "--config", path, "--w-star", "z", "--out",
                     str(tmp_path)]) == 0
        (entry,) = report(tmp_path)["results"]["equilibria"]
        assert entry["x_star"] == [0.0, 0.0]

    def test_example1_from_config(self, tmp_path):
        text = open(EX1).read().replace("T: 1000, dt: 0.02, tol: 0.001", "T: 50, dt: 0.02, tol: 0.05")
        path = write(tmp_path, text)
        assert main(["equilibrium", "--config", path, "--w-star", "k3", "--out",
                     str(tmp_path)]) == 0
        (entry,) = report(tmp_path)["results"]["equilibria"]
        assert entry["residual"] <= 1e-8 and entry["unique"]
        assert min(entry["x_star"]) >= 0

    def test_unknown_name(self, tmp_path, capsys):
        assert main(["equilibrium", "--config", EX1, "--w-star", "k4",
                     "--out", str(tmp_path)]) == 2

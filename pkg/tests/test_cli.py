import json
import subprocess
import sys

import pytest

from npriem import __version__
from npriem.cli import dumps, run


def _json(capsys, argv, code=0):
    assert run(argv) == code
    return json.loads(capsys.readouterr().out)


class TestCatalog:
    def test_list(self, capsys):
        doc = _json(capsys, ["catalog", "list"])
        assert doc["summary"]["count"] == 6
        assert set(doc) == {"config", "results", "summary", "version"}

    def test_show(self, capsys):
        doc = _json(capsys, ["catalog", "show", "s3_round"])
        assert "hopf" in [f["field"] for f in doc["results"]["fields"]]
        assert doc["results"]["parameters"] == ["r"]

    def test_unknown(self, capsys):
        assert run(["catalog", "show", "torus"]) == 2
        assert "unknown manifold" in capsys.readouterr().err

    def test_table(self, capsys):
        assert run(["catalog", "list", "--format", "table"]) == 0
        assert "euclidean" in capsys.readouterr().out


class TestAnalyze:
    def test_constant_all_zero(self, capsys):
        doc = _json(capsys, ["analyze", "--manifold", "euclidean", "--field", "constant", "--point", "1,1,1"])
        for name in ("kappa", "rho", "sigma", "epsilon", "beta"):
            v = doc["results"]["spin_coefficients"][name]
            assert set(v) == {"re", "im"} and v["re"] == 0 and v["im"] == 0

    def test_hopf_classification(self, capsys):
        doc = _json(capsys, ["analyze", "--manifold", "s3_round", "--field", "hopf", "--point", "0.7,0.3,0.2"])
        cls = doc["results"]["classification"]
        assert cls["killing"] is True and cls["hypersurface_orthogonal"] is False

    def test_parameter(self, capsys):
        doc = _json(capsys, ["analyze", "--manifold", "berger", "--param", "lambda=0.5", "--field", "hopf",
                             "--point", "0.7,0.3,0.2"])
        assert doc["results"]["triad_curvature"]["S"] == pytest.approx(7.5, abs=1e-8)
        assert doc["config"]["params"] == {"lambda": 0.5}

    @pytest.mark.parametrize("argv", [
        ["--point", "1,2"], ["--point", "a,b,c"], ["--point", "1,1,nan"],
        ["--param", "r"], ["--param", "r=x"], ["--tol", "-1"], ["--field", "nope"],
        ["--point", "0,0,20"], ["--param", "lambda=2"],
    ])
    def test_usage_errors(self, capsys, argv):
        base = ["analyze", "--manifold", "euclidean", "--field", "constant", "--point", "1,1,1"]
        assert run(base + argv) == 2
        assert capsys.readouterr().err.startswith("npriem: error")

    def test_missing_manifold(self, capsys):
        assert run(["analyze", "--field", "hopf"]) == 2

    def test_numeric_failure(self, capsys, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"domain": [[-1, 1]] * 3, "g": ["1", "0", "0", "1", "0", "u1"],
                                    "fields": {"v": ["0", "0", "1"]}}))
        assert run(["analyze", "--metric-file", str(path), "--field", "v", "--point=-0.5,0,0"]) == 3
        assert "numeric failure" in capsys.readouterr().err

    def test_metric_file(self, capsys, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"domain": [[-1, 1]] * 3, "g": ["1", "0", "0", "1", "0", "1"],
                                    "fields": {"v": ["0", "0", "1"]}}))
        doc = _json(capsys, ["analyze", "--metric-file", str(path), "--field", "v", "--point", "0,0,0"])
        assert doc["results"]["triad_curvature"]["S"] == pytest.approx(0, abs=1e-8)


class TestVerify:
    def test_hopf_passes(self, capsys):
        doc = _json(capsys, ["verify", "--manifold", "s3_round", "--field", "hopf", "--samples", "100"])
        assert doc["summary"]["all_pass"] and doc["summary"]["points"] == 100
        assert [r["equation_id"] for r in doc["results"]][:3] == ["cov_table", "brackets", "sachs1"]
        assert all(r["pass"] for r in doc["results"])

    def test_tiny_tol_fails_with_complete_report(self, capsys):
        doc = _json(capsys, ["verify", "--manifold", "s3_round", "--field", "hopf", "--samples", "5",
                             "--tol", "1e-15"], code=1)
        assert len(doc["results"]) == 11 and not doc["summary"]["all_pass"]
        assert all(r["worst_point"] is not None for r in doc["results"])

    def test_product_passes(self, capsys):
        doc = _json(capsys, ["verify", "--manifold", "h2xr", "--field", "vertical", "--samples", "20"])
        assert doc["summary"]["all_pass"]

    def test_fd_step_switches_to_finite_differences(self, capsys):
        doc = _json(capsys, ["verify", "--manifold", "h3", "--field", "radial", "--samples", "5",
                             "--fd-step", "1e-4"])
        assert doc["summary"]["tol"] == 1e-3 and doc["summary"]["all_pass"]

    def test_deterministic(self, capsys, tmp_path):
        outs = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            assert run(["verify", "--manifold", "nil", "--field", "mixed", "--samples", "10",
                        "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestFlow:
    def test_focusing_prediction(self, capsys):
        doc = _json(capsys, ["flow", "--manifold", "euclidean", "--field", "radial_in", "--point", "0,0,1",
                             "--length", "0.9"])
        assert doc["summary"]["predicted_blowup_t"] == pytest.approx(1.0, abs=1e-6)
        assert doc["summary"]["max_div_deviation"] < 1e-5

    def test_hopf_sign_changes(self, capsys):
        doc = _json(capsys, ["flow", "--manifold", "s3_round", "--field", "hopf", "--step", "1e-2"])
        assert doc["summary"]["sign_changes"] == 0
        assert doc["results"]["focusing"]["applicable"] is False

    def test_csv(self, capsys):
        assert run(["flow", "--manifold", "euclidean", "--field", "constant", "--format", "csv",
                    "--length", "0.5", "--step", "0.1"]) == 0
        captured = capsys.readouterr()
        lines = captured.out.splitlines()
        assert lines[0].startswith("t,u1,u2,u3,v1,v2,v3,div_direct")
        assert len(lines) == 7
        assert all(float(x) == 0 for x in lines[-1].split(",")[7:])
        assert json.loads(captured.err)["summary"]["samples"] == 6

    def test_not_geodesic(self, capsys):
        assert run(["flow", "--manifold", "euclidean", "--field", "circular", "--point", "1,0,0",
                    "--length", "1"]) == 2

    def test_no_default_flow(self, capsys):
        assert run(["flow", "--manifold", "euclidean", "--field", "circular"]) == 2

    def test_csv_only_for_flow(self, capsys):
        assert run(["verify", "--manifold", "nil", "--field", "vertical", "--samples", "2",
                    "--format", "csv"]) == 2


class TestPrincipal:
    def test_product(self, capsys):
        doc = _json(capsys, ["principal", "--manifold", "h2xr", "--field", "vertical", "--samples", "10"])
        assert doc["summary"]["all_two_principal"] and doc["summary"]["all_killing"]

    def test_hyperbolic(self, capsys):
        doc = _json(capsys, ["principal", "--manifold", "h3", "--field", "radial", "--samples", "10"])
        s = doc["summary"]
        assert not s["all_two_principal"] and not s["all_killing"] and s["biconditional_holds"]

    def test_flat_is_hypothesis_error(self, capsys):
        doc = _json(capsys, ["principal", "--manifold", "euclidean", "--field", "constant", "--samples", "3"],
                    code=2)
        assert doc["summary"]["hypotheses"] is False

    def test_rotating_is_hypothesis_error(self, capsys):
        assert run(["principal", "--manifold", "s3_round", "--field", "hopf", "--samples", "3"]) == 2


class TestSerialization:
    def test_floats_round_trip(self):
        x = 0.1 + 0.2
        assert json.loads(dumps({"x": x}))["x"] == x
        assert "0.30000000000000004" in dumps({"x": x})

    def test_complex_and_special(self):
        doc = json.loads(dumps({"z": 1 + 2j, "inf": float("inf"), "n": None, "b": True, "i": 3, "e": []}))
        assert doc == {"z": {"re": 1.0, "im": 2.0}, "inf": "inf", "n": None, "b": True, "i": 3, "e": []}

    def test_version(self, capsys):
        assert run(["--version"]) == 0
        assert __version__ in capsys.readouterr().out

    def test_module_entry_point(self):
        out = subprocess.run([sys.executable, "-m", "npriem", "catalog", "list"], capture_output=True, text=True)
        assert out.returncode == 0 and json.loads(out.stdout)["summary"]["count"] == 6

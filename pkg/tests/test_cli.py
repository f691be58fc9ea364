import json

import numpy as np
import pytest

from qflatlab import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_spec(tmp_path, doc, name="spec.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


class TestAnalyze:
    def test_flat_builtin(self, tmp_path, capsys):
        spec = write_spec(tmp_path, {"n": 2, "kind": "builtin", "name": "flat"})
        code, out, _ = run(capsys, "analyze", "--spec", spec)
        assert code == 0
        doc = json.loads(out)
        assert doc["tau"]["exponent"] == pytest.approx(1.0, abs=0.01)
        assert doc["alpha0"] == pytest.approx(0.0, abs=1e-9)

    def test_cone_075(self, tmp_path, capsys):
        spec = write_spec(tmp_path, {"n": 2, "kind": "builtin", "name": "cone",
                                     "params": {"a": 0.75}})
        code, out, _ = run(capsys, "analyze", "--spec", spec)
        assert code == 0
        doc = json.loads(out)
        assert doc["alpha0"] == pytest.approx(0.75, abs=1e-3)
        assert doc["tau"]["exponent"] == pytest.approx(0.25, abs=0.05)
        assert doc["identity_residual"] <= 0.05

    def test_huber_between_thresholds(self, tmp_path, capsys):
        # complete metric with finite volume at the borderline total curvature
        spec = write_spec(tmp_path, {"n": 2, "kind": "builtin", "name": "huber",
                                     "params": {"c": -0.75}})
        code, out, _ = run(capsys, "analyze", "--spec", spec)
        assert code == 0
        doc = json.loads(out)
        assert doc["volume"]["class"] == "finite"
        assert doc["diameter"]["class"] == "infinite"
        assert doc["alpha0"] == pytest.approx(1.0, abs=0.02)

    def test_expression_metric(self, tmp_path, capsys):
        spec = write_spec(tmp_path, {"n": 2, "kind": "expression",
                                     "u": "log(2/(1+r^2))"})
        code, out, _ = run(capsys, "analyze", "--spec", spec)
        assert code == 0
        doc = json.loads(out)
        assert doc["alpha0"] == pytest.approx(2.0, abs=1e-3)
        assert doc["diameter"]["value"] == pytest.approx(3.14159265, abs=1e-6)

    def test_radial_table_metric(self, tmp_path, capsys):
        nodes = [[float(r), 0.0] for r in np.geomspace(0.01, 1e4, 120)]
        spec = write_spec(tmp_path, {"n": 2, "kind": "radial-table", "nodes": nodes})
        code, out, _ = run(capsys, "analyze", "--spec", spec)
        assert code == 0
        doc = json.loads(out)
        assert doc["tau"]["exponent"] == pytest.approx(1.0, abs=0.05)

    def test_out_file(self, tmp_path, capsys):
        spec = write_spec(tmp_path, {"n": 2, "kind": "builtin", "name": "flat"})
        out_path = tmp_path / "report.json"
        code, _, _ = run(capsys, "analyze", "--spec", spec, "--out", str(out_path))
        assert code == 0
        assert json.loads(out_path.read_text())["verdict"] == "NORMAL"

    def test_determinism_byte_identical(self, tmp_path, capsys):
        spec = write_spec(tmp_path, {"n": 2, "kind": "builtin", "name": "cone",
                                     "params": {"a": 0.5}})
        _, out1, _ = run(capsys, "analyze", "--spec", spec)
        _, out2, _ = run(capsys, "analyze", "--spec", spec)
        assert out1 == out2


class TestValidation:
    def test_missing_file(self, capsys):
        code, _, err = run(capsys, "analyze", "--spec", "/nonexistent.json")
        assert code == 1
        assert "input error" in err

    def test_bad_kind(self, tmp_path, capsys):
        spec = write_spec(tmp_path, {"n": 2, "kind": "exotic"})
        code, _, err = run(capsys, "analyze", "--spec", spec)
        assert code == 1
        assert "$.kind" in err

    def test_missing_u_for_expression(self, tmp_path, capsys):
        spec = write_spec(tmp_path, {"n": 2, "kind": "expression"})
        code, _, err = run(capsys, "analyze", "--spec", spec)
        assert code == 1
        assert "$.u" in err

    def test_odd_dimension(self, tmp_path, capsys):
        spec = write_spec(tmp_path, {"n": 3, "kind": "builtin", "name": "flat"})
        code, _, err = run(capsys, "analyze", "--spec", spec)
        assert code == 1
        assert "$.n" in err

    def test_extra_keys_rejected(self, tmp_path, capsys):
        spec = write_spec(tmp_path, {"n": 2, "kind": "builtin", "name": "flat",
                                     "bogus": 1})
        code, _, err = run(capsys, "analyze", "--spec", spec)
        assert code == 1

    def test_syntax_error_in_expression(self, tmp_path, capsys):
        spec = write_spec(tmp_path, {"n": 2, "kind": "expression", "u": "log("})
        code, _, err = run(capsys, "analyze", "--spec", spec)
        assert code == 1

    def test_numeric_failure_exit_2(self, tmp_path, capsys):
        # the conformal factor overflows during evaluation: numeric failure
        spec = write_spec(tmp_path, {"n": 2, "kind": "expression", "u": "exp(r^2)"})
        code, _, err = run(capsys, "analyze", "--spec", spec)
        assert code == 2
        assert "numeric failure" in err


class TestSweep:
    def test_huber_classification_table(self, tmp_path, capsys):
        spec = write_spec(tmp_path, {"n": 2, "kind": "builtin", "name": "huber"})
        # negative values need the --values= form (argparse dash handling)
        code, out, _ = run(capsys, "sweep", "--param", "c",
                           "--values=-2,-0.75,0", "--spec", spec)
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == ("value,alpha0,tau,identity_residual,"
                            "distance_exponent,diameter_class,volume_class,error")
        rows = [line.split(",") for line in lines[1:]]
        table = {row[0]: (row[5], row[6]) for row in rows}
        assert table["-2"] == ("finite", "finite")
        assert table["-0.75"] == ("infinite", "finite")
        assert table["0"] == ("infinite", "infinite")
        for row in rows:
            assert float(row[1]) == pytest.approx(1.0, abs=0.02)

    def test_cone_tau_column(self, tmp_path, capsys):
        spec = write_spec(tmp_path, {"n": 2, "kind": "builtin", "name": "cone"})
        code, out, _ = run(capsys, "sweep", "--param", "a",
                           "--values", "0.25,0.5,0.75", "--spec", spec)
        assert code == 0
        rows = [line.split(",") for line in out.strip().splitlines()[1:]]
        for row in rows:
            assert float(row[2]) == pytest.approx(1.0 - float(row[0]), abs=0.05)

    def test_empty_values_header_only(self, tmp_path, capsys):
        spec = write_spec(tmp_path, {"n": 2, "kind": "builtin", "name": "huber"})
        code, out, _ = run(capsys, "sweep", "--param", "c", "--values", "",
                           "--spec", spec)
        assert code == 0
        assert out.strip().splitlines() == [
            "value,alpha0,tau,identity_residual,distance_exponent,"
            "diameter_class,volume_class,error"]

    def test_unknown_parameter(self, tmp_path, capsys):
        spec = write_spec(tmp_path, {"n": 2, "kind": "builtin", "name": "huber"})
        code, _, err = run(capsys, "sweep", "--param", "zeta", "--values", "1",
                           "--spec", spec)
        assert code == 1

    def test_bad_value_lands_in_error_column(self, tmp_path, capsys):
        spec = write_spec(tmp_path, {"n": 2, "kind": "builtin", "name": "cone"})
        code, out, _ = run(capsys, "sweep", "--param", "a", "--values", "-1",
                           "--spec", spec)
        assert code == 0
        row = out.strip().splitlines()[1]
        assert "positive" in row


class TestVerifyAndGallery:
    def test_filter_nonexistent_is_empty_success(self, capsys):
        code, out, _ = run(capsys, "verify", "--filter", "nonexistent-case")
        assert code == 0
        assert "0 passed, 0 failed" in out

    def test_gallery_list(self, capsys):
        code, out, _ = run(capsys, "gallery", "list")
        assert code == 0
        for name in ("flat", "sphere", "cone", "huber", "gaussian_source", "planted"):
            assert name in out

    def test_single_fast_case(self, capsys):
        code, out, _ = run(capsys, "verify", "--filter", "bounded_diameter")
        assert code == 0
        assert "[PASS] bounded_diameter" in out

    def test_failed_cases_exit_3(self, capsys, monkeypatch):
        from qflatlab.verification import CaseResult, Check, SuiteSummary

        def fake_suite(filter_str=None):
            case = CaseResult(id="x", description="forced failure")
            case.checks.append(Check("q", 1.0, 2.0, 0.1, False))
            return SuiteSummary(passed=0, failed=1, inconclusive=0,
                                cases=[case], elapsed=0.0)

        monkeypatch.setattr(cli, "run_verification_suite", fake_suite)
        code, out, _ = run(capsys, "verify")
        assert code == 3
        assert "[FAIL]" in out

    def test_verify_json_mode(self, capsys):
        code, out, _ = run(capsys, "verify", "--filter", "potential_golden", "--json")
        assert code == 0
        doc = json.loads(out)
        assert doc["cases"][0]["id"] == "potential_golden"
        assert doc["failed"] == 0

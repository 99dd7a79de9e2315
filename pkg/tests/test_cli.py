import json
import subprocess
import sys

import pytest

RUN = [sys.executable, "-m", "fracspec.cli"]


def run_cli(*args):
    return subprocess.run(RUN + list(args), capture_output=True, text=True)


class TestValidateCommand:
    def test_scale4_passes(self):
        r = run_cli("validate", "--system", "scale4")
        assert r.returncode == 0
        assert "overall: pass" in r.stdout

    def test_triadic_fails_with_witness(self):
        r = run_cli("validate", "--system", "triadic")
        assert r.returncode == 1
        assert "compatibility" in r.stdout and "3/2" in r.stdout

    def test_missing_file(self):
        r = run_cli("validate", "--file", "/no/such/file.json")
        assert r.returncode == 2

    def test_malformed_file(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{\"dim\": 2, \"R\": [[2]]}")
        r = run_cli("validate", "--file", str(p))
        assert r.returncode == 2

    def test_json_format(self):
        r = run_cli("validate", "--system", "scale4", "--format", "json")
        doc = json.loads(r.stdout)
        assert doc["validation"]["passed"] is True

    def test_file_round_trip(self, tmp_path):
        doc = {"dim": 1, "R": [["4"]], "B": [["0"], ["1/2"]], "L": [["0"], ["1"]]}
        p = tmp_path / "scale4.json"
        p.write_text(json.dumps(doc))
        r = run_cli("validate", "--file", str(p))
        assert r.returncode == 0


class TestSpectrumCommand:
    def test_scale4_listing(self):
        r = run_cli("spectrum", "--system", "scale4", "--depth", "3")
        values = [line.split(",")[0] for line in r.stdout.splitlines()[2:]]
        assert values == ["0", "1", "4", "5", "16", "17", "20", "21"]

    def test_depth_out_of_range(self):
        r = run_cli("spectrum", "--system", "scale4", "--depth", "-1")
        assert r.returncode == 2

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_cli("spectrum", "--system", "eiffel(2)", "--depth", "2", "--out", str(a))
        run_cli("spectrum", "--system", "eiffel(2)", "--depth", "2", "--out", str(b))
        assert a.read_bytes() == b.read_bytes()


class TestGramCommand:
    def test_scale4_json(self):
        r = run_cli("gram", "--system", "scale4", "--count", "8", "--format", "json")
        doc = json.loads(r.stdout)
        assert doc["max_offdiag"] <= 1e-7

    def test_triadic_runs_without_force(self):
        # counterexample systems stay analysable
        r = run_cli("gram", "--system", "triadic", "--count", "4", "--format", "json")
        assert r.returncode == 0
        doc = json.loads(r.stdout)
        assert doc["max_offdiag"] > 0.4


class TestGammaCommand:
    def test_eiffel3_constants(self):
        r = run_cli("gamma", "--system", "eiffel", "--r", "3", "--format", "json")
        doc = json.loads(r.stdout)
        assert doc["gamma_closed_form"] == pytest.approx(0.5296828741826953, abs=1e-12)
        assert doc["beta"] == pytest.approx(4.442882938158366, abs=1e-9)

    def test_csv_has_constants(self):
        r = run_cli("gamma", "--system", "scale4")
        assert "gamma_sup" in r.stdout


class TestAttractorCommand:
    def test_eiffel_cloud_size(self):
        r = run_cli("attractor", "--system", "eiffel(2)", "--depth", "4",
                    "--side", "sigma")
        rows = r.stdout.strip().splitlines()[2:]
        assert len(rows) == 256
        assert rows[0] == "0,0,0"

    def test_rho_side_interval(self):
        r = run_cli("attractor", "--system", "scale4", "--depth", "1", "--side", "rho")
        rows = r.stdout.strip().splitlines()[2:]
        assert [float(x) for x in rows[0].split(",")] == [pytest.approx(-1 / 3)]


class TestTransferCommand:
    def test_residual_history(self, tmp_path):
        dump = tmp_path / "grid.csv"
        r = run_cli("transfer", "--system", "scale4", "--resolution", "32",
                    "--format", "json", "--dump-grid", str(dump))
        doc = json.loads(r.stdout)
        assert doc["converged"] is True
        assert doc["final_deviation_from_one"] <= 1e-7
        assert dump.read_text().startswith("x1,value")

    def test_resolution_floor(self):
        r = run_cli("transfer", "--system", "scale4", "--resolution", "4")
        assert r.returncode == 2


class TestQ1Command:
    def test_scale4_profile(self):
        r = run_cli("q1", "--system", "scale4", "--resolution", "9",
                    "--format", "json")
        doc = json.loads(r.stdout)
        assert doc["verdict"] == "BASIS-CONSISTENT"
        assert min(doc["values"]) >= 0.98

    def test_shallow_cap_is_indeterminate(self):
        r = run_cli("q1", "--system", "scale4", "--resolution", "9",
                    "--p-depth", "4", "--format", "json")
        doc = json.loads(r.stdout)
        assert doc["verdict"] == "INDETERMINATE"


class TestReportCommand:
    def test_scale4_consistent(self):
        r = run_cli("report", "--system", "scale4", "--format", "json")
        assert r.returncode == 0
        doc = json.loads(r.stdout)
        assert doc["claims_pass"] is True
        assert doc["completeness"]["verdict"] == "BASIS-CONSISTENT"

    def test_triadic_inconsistent_with_witness(self):
        r = run_cli("report", "--system", "triadic", "--format", "json")
        assert r.returncode == 1
        doc = json.loads(r.stdout)
        assert doc["claims"]["orthogonality"] is False
        assert doc["gram"]["max_offdiag"] > 0.4

    def test_planar_collapse_orthogonal(self):
        r = run_cli("report", "--system", "planar-collapse", "--format", "json")
        assert r.returncode == 0
        doc = json.loads(r.stdout)
        assert doc["claims"]["orthogonality"] is True
        assert doc["validation"]["axioms"]["l_spans"]["passed"] is False


class TestUsage:
    def test_no_system(self):
        r = run_cli("spectrum")
        assert r.returncode == 2

    def test_unknown_catalog_name(self):
        r = run_cli("validate", "--system", "foo")
        assert r.returncode == 2
        assert "scale4" in r.stderr

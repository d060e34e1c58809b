import json
import subprocess
import sys

import pytest

from hoqmc.cli import main
from hoqmc.constructions import format_matrices, interlaced_sobol


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestPoints:
    def test_rational(self, capsys):
        code, out, _ = run(capsys, "points", "--alpha", "1", "--m", "2", "--format", "rational")
        assert code == 0
        assert out.splitlines() == ["h,x1", "0,0/4", "1,2/4", "2,1/4", "3,3/4"]

    def test_decimal_and_truncation(self, capsys):
        code, out, _ = run(capsys, "points", "--alpha", "2", "--m", "2", "--truncate-u", "1")
        assert code == 0
        values = [float(line.split(",")[1]) for line in out.splitlines()[1:]]
        assert set(values) <= {0.0, 0.5}

    def test_explicit_matrices(self, capsys, tmp_path):
        path = tmp_path / "mats.txt"
        path.write_text("012\n210\n", encoding="ascii")
        code, out, _ = run(capsys, "points", "--base", "3", "--matrices", str(path), "--format", "rational")
        assert code == 0
        assert len(out.splitlines()) == 1 + 27

    def test_out_file(self, capsys, tmp_path):
        out = tmp_path / "p.csv"
        assert main(["points", "--m", "3", "--dims", "2", "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 9


class TestIntegrate:
    def test_record(self, capsys):
        code, out, _ = run(capsys, "integrate", "--function", "f1", "--m", "8")
        rec = json.loads(out)
        assert code == 0
        assert set(rec) >= {"algorithm", "alpha", "p", "m", "N", "estimate", "exact", "abs_error", "evaluations"}
        assert rec["N"] == rec["evaluations"] == 2**8 + 2**9

    def test_fixed_m(self, capsys):
        code, out, _ = run(capsys, "integrate", "--function", "f4", "--dims", "5",
                           "--algorithm", "extrapolated-fixed-m", "--m", "6")
        rec = json.loads(out)
        assert code == 0 and rec["evaluations"] == 2 * 2**6 and rec["abs_error"] < 1e-3


class TestConvergence:
    def test_csv(self, capsys):
        code, out, err = run(capsys, "convergence", "--function", "f1", "--m-max", "8", "--slope", "4,8")
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "m,N,estimate,abs_error,seconds"
        assert len(lines) == 1 + 6
        assert "slope" in err

    def test_json_and_algorithms(self, capsys):
        for algo in ("plain", "extrapolated-square", "extrapolated-fixed-m"):
            code, out, _ = run(capsys, "convergence", "--function", "f2", "--m-max", "5",
                               "--algorithm", algo, "--format", "json")
            assert code == 0
            assert [r["m"] for r in json.loads(out)] == [3, 4, 5]

    def test_precision(self, capsys):
        code, out, _ = run(capsys, "precision", "--function", "f1", "--alpha", "3",
                           "--m-max", "5", "--u", "4,52")
        lines = out.splitlines()
        assert code == 0 and lines[0] == "u,m,N,estimate,abs_error,seconds"
        assert len(lines) == 1 + 2 * 3


class TestVerify:
    def test_pass(self, capsys):
        code, out, _ = run(capsys, "verify", "--dims", "2", "--alpha", "1", "--m", "4", "--expected-t", "0")
        assert code == 0 and "PASS" in out

    def test_fail(self, capsys, tmp_path):
        path = tmp_path / "zero.txt"
        path.write_text(format_matrices(interlaced_sobol(1, 1).submatrices(2, 2)).replace("1", "0"))
        code, out, _ = run(capsys, "verify", "--alpha", "1", "--matrices", str(path), "--expected-t", "0")
        assert code == 1 and "FAIL" in out


class TestBounds:
    def test_constants(self, capsys):
        code, out, _ = run(capsys, "bounds", "--alpha", "2", "--dims", "3", "--m", "10")
        rep = json.loads(out)
        assert code == 0
        assert rep["C_alpha"] == pytest.approx(4.5)
        assert len(rep["U_per_cardinality"]) == 3
        assert {b["variant"] for b in rep["bounds"]} == {"extrapolated-square", "extrapolated-fixed-m"}

    def test_alpha_one_is_valid_json(self, capsys):
        code, out, _ = run(capsys, "bounds", "--alpha", "1")
        assert code == 0 and json.loads(out)["A_alpha"] is None


class TestExitCodes:
    @pytest.mark.parametrize(
        "argv",
        [
            ["points"],
            ["convergence", "--function", "f9"],
            ["convergence", "--m-min", "5", "--m-max", "4"],
            ["integrate", "--m", "4", "--base", "3"],
            ["integrate", "--m", "4", "--alpha", "0"],
            ["precision", "--u", "0"],
            ["convergence", "--gamma", "exp:1", "--function", "f3", "--dims", "2", "--m-max", "4"],
            ["points", "--m", "2", "--direction-numbers", "/nonexistent/file"],
        ],
    )
    def test_configuration(self, capsys, argv):
        assert main(argv) == 2

    def test_capacity(self, capsys):
        assert main(["points", "--m", "40", "--alpha", "2"]) == 3
        assert main(["convergence", "--algorithm", "plain", "--alpha", "3", "--m-min", "22", "--m-max", "22"]) == 3

    def test_module_entry(self):
        proc = subprocess.run([sys.executable, "-m", "hoqmc", "--version"], capture_output=True, text=True)
        assert proc.returncode == 0 and "hoqmc" in proc.stdout

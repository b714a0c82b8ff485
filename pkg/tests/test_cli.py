import csv
import io
import json
import math

import pytest

import mlab_cli
from lvalues import F_integral, LatticeSumSpec, L_elliptic
from mlab_cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main
from verify import REPORT_FIELDS, VerifyReport, default_catalog


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_compute_mahler_json(capsys):
    code, out, _ = run(capsys, "compute", "mahler", "--family", "g", "--alpha", "0", "--format", "json")
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["route"] == "direct"
    assert abs(data["value"]) < 1e-9


def test_global_format_before_subcommand(capsys):
    code, out, _ = run(capsys, "--format", "json", "compute", "mahler", "--family", "m", "--alpha", "2")
    assert code == EXIT_OK
    assert json.loads(out)["route"] == "hyper"


def test_compute_lattice_cube_center(capsys):
    code, out, _ = run(capsys, "compute", "lattice", "--b", "1", "--c", "5", "--method", "cube",
                       "--N", "0", "--format", "json")
    assert code == EXIT_OK
    assert json.loads(out)["value"] == pytest.approx(1.0, abs=1e-15)


def test_compute_lattice_integral(capsys):
    code, out, _ = run(capsys, "compute", "lattice", "--b", "2", "--c", "3", "--format", "json")
    assert code == EXIT_OK
    assert json.loads(out)["value"] == pytest.approx(F_integral(LatticeSumSpec(2, 3)), abs=1e-12)


def test_compute_lvalue_text(capsys):
    code, out, _ = run(capsys, "compute", "lvalue", "--conductor", "24")
    assert code == EXIT_OK
    assert out.startswith("L(E_24,2) = ")
    assert float(out.split("=")[1].split()[0]) == pytest.approx(L_elliptic(24), rel=1e-12)


def test_compute_hyper(capsys):
    code, out, _ = run(capsys, "compute", "hyper", "--upper", "1,1,1", "--lower", "2,2", "--z", "1",
                       "--format", "csv")
    assert code == EXIT_OK
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["quantity", "value"]
    assert float(rows[1][1]) == pytest.approx(math.pi ** 2 / 6, rel=1e-13)


def test_compute_domain_error_is_usage(capsys):
    code, _, err = run(capsys, "compute", "hyper", "--upper", "1,1,1", "--lower", "2,2", "--z", "2")
    assert code == EXIT_USAGE
    assert "erreur" in err
    code, _, _ = run(capsys, "compute", "mahler", "--family", "g", "--alpha", "1", "--route", "j_integral")
    assert code == EXIT_USAGE


def test_series_output(capsys):
    code, out, _ = run(capsys, "series", "--expr", "phi(q)", "--terms", "10")
    assert code == EXIT_OK
    assert out.splitlines() == ["0/1\t1", "1/1\t2", "4/1\t2", "9/1\t2"]


def test_series_identity_is_empty(capsys):
    code, out, _ = run(capsys, "series", "--expr", "3*eta(q^6)^4 + b(q)*c(q^12) - b(q^4)*c(q^3)",
                       "--terms", "100")
    assert code == EXIT_OK
    assert out == ""


def test_series_fractional_exponents(capsys):
    code, out, _ = run(capsys, "series", "--expr", "c(q)", "--terms", "2")
    assert code == EXIT_OK
    assert out.splitlines()[0] == "1/3\t3"


def test_series_parse_error(capsys):
    code, out, err = run(capsys, "series", "--expr", "eta(q", "--terms", "5")
    assert code == EXIT_USAGE
    assert out == ""
    assert "position 5" in err
    assert err.rstrip().endswith("^")


def test_series_division_by_truncated_monomial(capsys):
    code, out, _ = run(capsys, "series", "--expr", "1/phi(q^10)", "--terms", "5")
    assert code == EXIT_OK
    assert out.splitlines() == ["0/1\t1"]


def test_series_arithmetic_failure_exits_1(capsys, monkeypatch):
    def broken(expr, N):
        raise ZeroDivisionError("Fraction(1, 0)")

    monkeypatch.setattr(mlab_cli, "series_of", broken)
    code, out, err = run(capsys, "series", "--expr", "phi(q)", "--terms", "5")
    assert code == EXIT_FAILURE
    assert out == ""
    assert "ZeroDivisionError" in err


def test_verify_single_json(capsys):
    code, out, _ = run(capsys, "verify", "--id", "G_HALF", "--format", "json")
    assert code == EXIT_OK
    report = VerifyReport.from_dict(json.loads(out))
    assert report.id == "G_HALF"
    assert report.passed


def test_verify_negative_control_exit_code(capsys):
    code, out, _ = run(capsys, "verify", "--id", "NEGCTRL_PHI_PSI")
    assert code == EXIT_FAILURE
    assert "fail" in out


def test_verify_unknown_id(capsys):
    code, _, err = run(capsys, "verify", "--id", "UNKNOWN")
    assert code == EXIT_USAGE
    assert "UNKNOWN" in err


def test_verify_unknown_tag(capsys):
    code, _, _ = run(capsys, "verify", "--tag", "no-such-tag")
    assert code == EXIT_USAGE


def test_verify_negative_tag_with_exclusion(capsys):
    code, out, _ = run(capsys, "verify", "--tag", "negative", "--exclude-controls", "--format", "json")
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["reports"] == []
    assert data["summary"]["total"] == 0


@pytest.mark.slow
def test_verify_exact_tag_csv(capsys):
    code, out, _ = run(capsys, "verify", "--tag", "exact", "--format", "csv")
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == list(REPORT_FIELDS)
    assert {r["status"] for r in rows} == {"pass"}
    assert len(rows) == len(default_catalog().list("exact"))


def test_list_by_tag(capsys):
    code, out, _ = run(capsys, "list", "--tag", "exact")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines
    assert all(line.split("\t")[1] == "exact_series" for line in lines)


def test_list_json(capsys):
    code, out, _ = run(capsys, "list", "--format", "json")
    assert code == EXIT_OK
    assert len(json.loads(out)) == len(default_catalog())


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["verify"],
    ["verify", "--id", "G_HALF", "--all"],
    ["compute", "lvalue", "--conductor", "11"],
    ["series", "--expr", "phi(q)", "--terms", "x"],
    ["compute", "lattice", "--b", "1", "--c", "1", "--parallelism", "0"],
])
def test_usage_errors(capsys, argv):
    assert main(argv) == EXIT_USAGE

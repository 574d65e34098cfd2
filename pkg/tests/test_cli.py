import io
import json
from pathlib import Path

import numpy as np
import pytest

from finslerkit import cli

DATA = Path(__file__).resolve().parents[1] / "demos" / "data"


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main([str(a) for a in argv], stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def write(tmp_path, text, name="input.def"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_report_flat(tmp_path):
    code, out, _ = run("--input", DATA / "flat.def", "--command", "report", "--points", "2")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema_version"] == cli.SCHEMA_VERSION and doc["mode"] == "lagrangian"
    assert doc["chart"] == {"n": 2, "m": 2}
    assert "conventions" in doc and len(doc["points"]) == 2
    for p in doc["points"]:
        assert p["scalar"] == 0.0
        assert not np.any(p["N"]) and not np.any(p["curvature"]["hhhh"])
        np.testing.assert_array_equal(p["g"], np.eye(2))


def test_report_explicit_point(tmp_path):
    code, out, _ = run("--input", DATA / "conformal.def", "--command", "report",
                       "--points", "0,0,1,2")
    assert code == 0
    (p,) = json.loads(out)["points"]
    np.testing.assert_allclose(p["N"], [[0.5, -1.0], [1.0, 0.5]], atol=1e-14)
    np.testing.assert_allclose(p["spray"], [-0.75, 1.0], atol=1e-14)


def test_report_direct_dmetric():
    code, out, _ = run("--input", DATA / "offdiag.def", "--command", "report", "--points", "1")
    assert code == 0
    doc = json.loads(out)
    assert doc["mode"] == "d-metric" and "lagrangian" not in doc
    assert doc["points"][0]["metricity_defect"] < 1e-12


def test_same_seed_same_bytes():
    a = run("--input", DATA / "sphere.def", "--command", "report", "--seed", "5")
    b = run("--input", DATA / "sphere.def", "--command", "report", "--seed", "5")
    c = run("--input", DATA / "sphere.def", "--command", "report", "--seed", "6")
    assert a == b and a[1] != c[1]


@pytest.mark.parametrize("text, error, key", [
    ("dims 2 2\nlagrangian y1^2 +* y2^2\n", "DefinitionFileError", "line"),
    ("dims 2 2\nlagrangian y1^2 + z\n", "UnknownSymbol", "name"),
    ("lagrangian y1^2\n", "DefinitionFileError", "line"),
])
def test_malformed_input(tmp_path, text, error, key):
    code, out, err = run("--input", write(tmp_path, text), "--command", "report")
    assert code == cli.EXIT_INPUT and out == ""
    doc = json.loads(err)
    assert doc["exit_code"] == 2 and doc["error"] == error and key in doc


def test_missing_file(tmp_path):
    code, _, err = run("--input", tmp_path / "nope.def", "--command", "check")
    assert code == cli.EXIT_INPUT and json.loads(err)["error"] == "FileNotFoundError"


def test_degenerate_input():
    code, _, err = run("--input", DATA / "degenerate.def", "--command", "check")
    assert code == cli.EXIT_DEGENERATE
    assert json.loads(err)["error"] == "DegenerateHessian"


def test_geodesics_writes_csv(tmp_path):
    code, out, _ = run("--input", DATA / "conformal.def", "--command", "geodesics", "--points", "2",
                       "--step", "0.01", "--horizon", "0.5", "--out", tmp_path)
    assert code == 0
    doc = json.loads(out)
    assert doc["homogeneous"] is True
    for k, tr in enumerate(doc["trajectories"]):
        assert tr["equivalence_residual"] < 1e-10 and tr["energy_drift"] < 1e-8
        rows = (tmp_path / f"geodesic_{k}_spray.csv").read_text().splitlines()
        assert rows[0] == "tau,x1,x2,y1,y2" and len(rows) == tr["samples"] + 1
        assert (tmp_path / f"geodesic_{k}_el.csv").exists()
    assert json.loads((tmp_path / "geodesics.json").read_text()) == doc


def test_geodesics_need_lagrangian():
    code, _, err = run("--input", DATA / "offdiag.def", "--command", "geodesics")
    assert code == cli.EXIT_INPUT and json.loads(err)["error"] == "FormMismatch"


def test_dirac_writes_operator(tmp_path):
    code, out, _ = run("--input", DATA / "offdiag.def", "--command", "dirac",
                       "--lattice", "0:1:4,0:1:4,0.5:1.5:4", "--out", tmp_path)
    assert code == 0
    doc = json.loads(out)
    assert doc["sites"] == 64 and doc["spinor_size"] == 2
    lines = (tmp_path / "dirac.coo").read_text().splitlines()
    assert len(lines) == doc["nnz"]
    assert "chirality_anticommutator" not in doc  # odd total dimension
    assert doc["volume"] > 0


def test_dirac_flat_commutators_exact():
    code, out, _ = run("--input", DATA / "flat.def", "--command", "dirac",
                       "--lattice", "0:1:4,0:1:4,0.5:1.5:4,0.5:1.5:4")
    doc = json.loads(out)
    assert code == 0 and max(doc["coordinate_commutator_error"]) < 1e-12
    assert doc["chirality_anticommutator"] <= 1e-12


@pytest.mark.parametrize("lattice", ["0:1", "0:1:2", "a:b:c", "1:0:5"])
def test_bad_lattice(lattice):
    code, _, err = run("--input", DATA / "line.def", "--command", "distance", "--lattice", lattice)
    assert code == cli.EXIT_INPUT, err


def test_distance_on_a_line():
    code, out, _ = run("--input", DATA / "line.def", "--command", "distance",
                       "--lattice", "0:1:33", "--pairs", "0:1;0.25:0.75")
    assert code == 0
    rows = json.loads(out)["rows"]
    assert len(rows) == 2
    for r in rows:
        assert abs(r["relative_deviation"]) < 0.05


def test_disconnected_pair():
    code, _, err = run("--input", DATA / "line.def", "--command", "distance",
                       "--lattice", "0:1:11", "--pairs", "0.5:0.6")
    assert code == cli.EXIT_NUMERIC and json.loads(err)["error"] == "DisconnectedPatch"


def test_check_flat_passes():
    code, out, _ = run("--input", DATA / "flat.def", "--command", "check", "--points", "2")
    doc = json.loads(out)
    assert code == 0 and doc["passed"] and doc["failed"] == []
    names = {c["name"] for c in doc["checks"]}
    assert {"canonical_metricity", "euler_lagrange_equals_spray", "homogeneous_degree_two"} <= names


def test_check_direct_dmetric():
    code, out, _ = run("--input", DATA / "offdiag.def", "--command", "check", "--points", "2")
    doc = json.loads(out)
    assert code == 0 and doc["passed"]
    assert "tangent_canonical_agreement" not in {c["name"] for c in doc["checks"]}


def test_point_list_must_match_chart():
    code, _, _ = run("--input", DATA / "flat.def", "--command", "report", "--points", "0,0,1")
    assert code == cli.EXIT_INPUT


def test_exit_code_table():
    from finslerkit import errors
    assert cli.exit_code_for(errors.DisconnectedPatch("x")) == cli.EXIT_NUMERIC
    assert cli.exit_code_for(errors.SingularVBlock("x")) == cli.EXIT_DEGENERATE
    assert cli.exit_code_for(errors.UnknownSymbol("z")) == cli.EXIT_INPUT
    assert cli.exit_code_for(ZeroDivisionError()) == cli.EXIT_NUMERIC


def test_plain_conversion():
    doc = cli.plain({"a": np.array([1.0, np.inf]), "b": np.complex128(1 + 2j), "c": (np.int64(3),)})
    assert doc == {"a": [1.0, None], "b": [1.0, 2.0], "c": [3]}

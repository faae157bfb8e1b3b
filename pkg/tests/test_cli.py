import io
import subprocess
import sys

import pytest

from clairmap.cli import fmt_machine, parse_list, run
from clairmap.fixtures import fixture_text


def _run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def _records(text):
    rows = [line.split("\t") for line in text.splitlines()]
    assert all(len(r) == 2 for r in rows)
    return dict(rows)


def test_classify_headline_hemi():
    code, out, _ = _run("classify", "--fixture", "paper-hemi-slant")
    assert code == 0
    assert out.splitlines()[0] == "hemi-slant, θ = 0.523599 rad, dims 2+1"


def test_classify_machine_records():
    code, out, _ = _run("classify", "--fixture", "paper-hemi-slant", "--format", "machine")
    rec = _records(out)
    assert code == 0
    assert out.splitlines()[-1] == "verdict\tpass"
    assert rec["classify.label"] == "hemi-slant"
    assert float(rec["classify.theta"]) == pytest.approx(0.5235987755982988, abs=1e-12)


def test_clairaut_zero_potential_on_semi():
    code, out, _ = _run("clairaut", "--fixture", "paper-semi-slant", "--potential", "0", "--format", "machine")
    rec = _records(out)
    assert code == 0 and rec["clairaut.certificate.verdict"] == "pass"


def test_failed_check_exit_three():
    code, out, _ = _run("clairaut", "--fixture", "paper-hemi-slant", "--format", "machine")
    assert code == 3
    assert out.splitlines()[-1] == "verdict\tfail"


def test_unknown_identity_exit_five():
    code, _, err = _run("identity", "integrable-D3", "--fixture", "paper-semi-slant")
    assert code == 5 and "integrable-D2" in err


def test_identity_listing():
    code, out, _ = _run("identity", "--fixture", "paper-semi-slant", "--format", "machine")
    assert code == 0 and "integrable-Dpsi" in out


def test_identity_rows_per_t():
    code, out, _ = _run("identity", "geodesic-semi-slant-range", "--fixture", "paper-semi-slant",
                        "--seed-point", "0,0,0,0,0,0", "--seed-velocity", "[0, 0.6, 0, 0.8, 0, 0]",
                        "--steps", "200", "--format", "machine")
    rec = _records(out)
    assert code == 0
    assert float(rec["identity.geodesic-semi-slant-range.residual"]) < 1e-5
    assert any(".row.4." in k for k in rec)


def test_identity_label_mismatch_exit_two():
    code, _, err = _run("identity", "integrable-Dpsi", "--fixture", "paper-semi-slant")
    assert code == 2 and "hemi-slant" in err


def test_domain_error_exit_four():
    code, _, err = _run("clairaut", "--fixture", "paper-semi-slant", "--potential", "log(y1)")
    assert code == 4 and "log" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["classify"],
        ["frobnicate", "--fixture", "paper-semi-slant"],
        ["classify", "--fixture", "no-such-fixture"],
        ["classify", "--scenario", "/nonexistent/file.toml"],
        ["classify", "--fixture", "paper-semi-slant", "--potential", "y1 +"],
        ["geodesic", "--fixture", "paper-semi-slant", "--seed-point", "1,2"],
    ],
)
def test_invalid_input_exit_two(argv):
    assert _run(*argv)[0] == 2


def test_scenario_error_line_reported(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text(fixture_text("paper-semi-slant").replace('y3 = "x3"', 'y3 = "x3 +"'))
    code, _, err = _run("validate", "--scenario", str(path))
    assert code == 2 and "line" in err and err.count("line") == 1


def test_inequality_slacks():
    code, out, _ = _run("inequality", "--fixture", "paper-hemi-slant", "--c", "4", "--rho", "0",
                        "--tau2", "0", "--k", "0", "--deltac", "1", "--format", "machine")
    rec = _records(out)
    assert code == 0
    assert float(rec["point.0.frame_sum"]) == pytest.approx(1.5, abs=1e-12)
    assert rec["point.0.casorati_slack"] == rec["point.1.casorati_slack"]
    assert "n/a" not in rec["point.0.casorati_slack"]


def test_all_euclidean_deterministic():
    a = _run("all", "--fixture", "euclidean-identity", "--format", "machine")
    b = _run("all", "--fixture", "euclidean-identity", "--format", "machine")
    assert a[0] == 0 and a == b


def test_human_contains_machine_numbers():
    _, machine, _ = _run("kahler", "--fixture", "paper-semi-slant", "--format", "machine")
    _, human, _ = _run("kahler", "--fixture", "paper-semi-slant")
    for key in _records(machine):
        assert key in human


@pytest.mark.parametrize(
    "value,text",
    [(True, "true"), (False, "false"), (None, "none"), (0.1, "0.10000000000000001"), (3, "3"), ([1.0, 2.5], "1,2.5")],
)
def test_fmt_machine(value, text):
    assert fmt_machine(value) == text


@pytest.mark.parametrize("text,expected", [("1,2,3", [1.0, 2.0, 3.0]), ("[0.5, -1]", [0.5, -1.0]), (" 4 ", [4.0])])
def test_parse_list(text, expected):
    assert list(parse_list(text)) == expected


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "clairmap", "classify", "--fixture", "euclidean-identity"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("invariant")

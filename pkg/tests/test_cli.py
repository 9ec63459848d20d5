import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from diracverify.cli import main, parse_tol
from diracverify.config import ConfigError
from diracverify.report import CheckReport

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run_cli(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def test_list_names_all_scenarios():
    code, text = run_cli("list")
    assert code == 0
    for name in ("tangent-dirac", "poisson-rotation", "cotangent-lift", "nonintegrable-quotient"):
        assert name in text


def test_run_tangent_dirac_defaults(tmp_path):
    code, text = run_cli("run", "tangent-dirac", "--report", str(tmp_path / "r.json"))
    assert code == 0
    report = json.loads((tmp_path / "r.json").read_text())
    assert len(report["checks"]) == 7 and all(c["passed"] for c in report["checks"])
    assert all(c["anchor"] for c in report["checks"])
    assert text.strip().endswith("13/13 checks passed")  # six preflight gates plus seven checks


def test_identical_seeds_give_byte_identical_reports(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run_cli("run", "cotangent-lift", "--seed", "42", "--report", str(a))[0] == 0
    assert run_cli("run", "cotangent-lift", "--seed", "42", "--report", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    for c in json.loads(a.read_text())["checks"]:
        assert CheckReport.from_dict(c).to_dict() == c


def test_tight_tolerance_fails_with_residual_listing():
    code, text = run_cli("run", "nonintegrable-quotient", "--tol", "*=1e-15")
    assert code == 1
    assert "FAIL" in text and "worst point" in text


def test_exit_status_matches_report(tmp_path):
    path = tmp_path / "r.json"
    code, _ = run_cli("run", "poisson-rotation", "--samples", "30", "--tol", "lemma-2red=1e-20", "--report", str(path))
    report = json.loads(path.read_text())
    assert code == 1 and report["passed"] is False
    assert report["tol_overrides"] == {"lemma-2red": 1e-20}


@pytest.mark.parametrize(
    "argv",
    [
        ("run", "no-such-scenario"),
        ("run", "tangent-dirac", "--tol", "lemma-2red"),
        ("run", "tangent-dirac", "--tol", "lemma-2red=-1"),
        ("run", "tangent-dirac", "--tol", "lemma-2red=abc"),
        ("run", "tangent-dirac", "--samples", "0"),
        ("run", "tangent-dirac", "--basepoint-variant", "2"),
        ("frobnicate",),
        ("check", "/nonexistent/config.toml"),
    ],
)
def test_configuration_errors_exit_2(argv):
    assert run_cli(*argv)[0] == 2


def test_parse_tol():
    assert parse_tol(["a=1e-3", "b*=2"]) == {"a": 1e-3, "b*": 2.0}
    with pytest.raises(ConfigError):
        parse_tol(["=1"])
    with pytest.raises(ConfigError):
        parse_tol(["a=inf"])


def test_check_su2_config_passes():
    code, text = run_cli("check", str(CONFIGS / "su2_poisson.toml"), "--samples", "50")
    assert code == 0
    assert "PASS" in text and "involutive" in text


def test_check_nonclosed_twoform_fails():
    code, text = run_cli("check", str(CONFIGS / "nonclosed_twoform.toml"), "--samples", "50")
    assert code == 1
    assert any("involutive" in line and "FAIL" in line for line in text.splitlines())


def test_check_wrong_convention_action_is_rejected():
    code, text = run_cli("check", str(CONFIGS / "wrong_convention_action.toml"), "--samples", "50")
    assert code == 1
    line = next(ln for ln in text.splitlines() if "action-homomorphism" in ln)
    assert "FAIL" in line
    assert "negat" in text  # convention hint


def test_check_reduction_config_passes(tmp_path):
    path = tmp_path / "r.json"
    code, _ = run_cli("check", str(CONFIGS / "rotation_reduction.toml"), "--samples", "50", "--report", str(path))
    assert code == 0
    names = {c["name"] for c in json.loads(path.read_text())["checks"]}
    assert {"lemma-2red", "thm-red-predicate", "lquot-involutive"} <= names


def test_integrate_cotangent_path(tmp_path):
    path = tmp_path / "j.json"
    code, text = run_cli("integrate", str(CONFIGS / "cotangent_path.toml"), "--report", str(path))
    assert code == 0
    report = json.loads(path.read_text())
    assert report["J"] == pytest.approx([-1.0], abs=1e-6)
    assert {c["name"] for c in report["checks"]} == {"a-path", "path-momentum"}


def write(tmp_path, text):
    p = tmp_path / "c.toml"
    p.write_text(text)
    return str(p)


@pytest.mark.parametrize(
    "text",
    [
        "[chart\nlower = [0]",
        '[chart]\nlower = [-1, -1]\nupper = [1, 1]\n[structure]\nkind = "poisson"\nmatrix = [["0", "x3"], ["-x3", "0"]]',
        '[chart]\nlower = [-1, -1]\nupper = [1, 1]\n[structure]\nkind = "poisson"\nmatrix = [["0", "x1 +"], ["0", "0"]]',
        '[chart]\nlower = [-1, -1]\nupper = [1, 1]\n[structure]\nkind = "poisson"\nmatrix = [["0", "1"]]',
        '[chart]\nlower = [-1, -1]\nupper = [1, 1]\n[structure]\nkind = "spinor"',
        '[chart]\nlower = [-1, -1]\nupper = [1, 1]\n[structure]\nkind = "twoform"\nmatrix = [["0", "1"], ["-1", "0"]]\n[expect]\nrank = 2',
    ],
)
def test_malformed_configs_exit_2(tmp_path, text):
    assert run_cli("check", write(tmp_path, text))[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "diracverify", "list"], capture_output=True, text=True)
    assert proc.returncode == 0 and "cotangent-lift" in proc.stdout

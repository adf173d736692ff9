import subprocess
import sys

import pytest

from modfault.cli import EXIT_ATTACK, EXIT_CLEAN, EXIT_ERROR, exit_status, main
from modfault.analyzer import analyze

from conftest import FIXTURES


def cli(tmp_path, *args):
    return main(["analyze", *map(str, args), "--out", str(tmp_path)])


def test_aumuller_clean(tmp_path):
    assert cli(tmp_path, FIXTURES / "aumuller.fj") == EXIT_CLEAN
    assert (tmp_path / "aumuller.fj.report.html").exists()
    assert (tmp_path / "aumuller.fj.summary.txt").exists()


def test_unprotected_attacks(tmp_path):
    assert cli(tmp_path, FIXTURES / "unprotected.fj") == EXIT_ATTACK
    assert "attacks_zeroing=9" in (tmp_path / "unprotected.fj.summary.txt").read_text()


def test_double_fault_protected_conditions(tmp_path):
    assert cli(tmp_path, "--faults", 2, "--protect-conditions", FIXTURES / "aumuller.fj") == EXIT_CLEAN


def test_required_faults(tmp_path, capsys):
    code = cli(tmp_path, "--faults", 3, "--protect-conditions", "--require", "zeroing@s19:",
               "--require", "zeroing@s20:", FIXTURES / "aumuller.fj")
    assert code == EXIT_ATTACK
    err = capsys.readouterr().err
    assert "warning" in err


def test_oracle_section(tmp_path):
    cli(tmp_path, "--oracle-trials", 3, FIXTURES / "unprotected.fj")
    assert "oracle_false_passes=" in (tmp_path / "unprotected.fj.summary.txt").read_text()


def test_types_flag(tmp_path):
    cli(tmp_path, "--types", "zeroing", FIXTURES / "unprotected.fj")
    text = (tmp_path / "unprotected.fj.summary.txt").read_text()
    assert "plans=12" in text and "attacks_randomizing=0" in text


@pytest.mark.parametrize("args", [
    ["--faults", "0"],
    ["--types", "bogus"],
    ["--oracle-trials", "-1"],
    ["--require", "s19:"],
    ["--require", "zeroing@s99:"],
])
def test_bad_flags(tmp_path, args):
    assert cli(tmp_path, *args, FIXTURES / "unprotected.fj") == EXIT_ERROR


def test_parse_error_has_position(tmp_path, capsys):
    bad = tmp_path / "bad.fj"
    bad.write_text("noprop a ;\nx := a + ;\nreturn x ;\n%%\n_ = @\n")
    assert cli(tmp_path, bad) == EXIT_ERROR
    assert "bad.fj:2:10:" in capsys.readouterr().err


def test_missing_file(tmp_path, capsys):
    assert cli(tmp_path, tmp_path / "none.fj") == EXIT_ERROR
    assert "cannot read" in capsys.readouterr().err


def test_exit_status_is_pure(programs):
    assert exit_status(analyze(programs["aumuller"])) == EXIT_CLEAN
    assert exit_status(analyze(programs["shamir"])) == EXIT_ATTACK


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "modfault.cli", "analyze",
                        str(FIXTURES / "aumuller.fj"), "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "attacks=0" in r.stdout

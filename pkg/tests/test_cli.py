import csv
import subprocess
import sys

import pytest

from nomafran.cli import EXIT_CONFIG, EXIT_FEASIBILITY, EXIT_OK, main
from nomafran.harness import HEADER

SMALL = "n_faps = 2\nn_fues_per_fap = 2\nn_subchannels = 4\nschemes = noma-q2, ofdma\nn_drops = 5\n"


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(SMALL, encoding="utf-8")
    return path


def _read(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_writes_csv_and_exits_zero(cfg_file, tmp_path):
    out = tmp_path / "out.csv"
    assert main(["--config", str(cfg_file), "--out", str(out), "--drops", "2", "--seed", "40"]) == EXIT_OK
    rows = _read(out)
    assert tuple(rows[0]) == HEADER
    assert [r[4] for r in rows[1:]] == ["40", "41", "summary", "40", "41", "summary"]


def test_scheme_flag_replaces_scheme_list(cfg_file, tmp_path):
    out = tmp_path / "out.csv"
    assert main(["--config", str(cfg_file), "--out", str(out), "--scheme", "ofdma", "--drops", "1"]) == EXIT_OK
    assert {r[2] for r in _read(out)[1:]} == {"ofdma"}


def test_q_flag_retargets_noma_entries(cfg_file, tmp_path):
    out = tmp_path / "out.csv"
    assert main(["--config", str(cfg_file), "--out", str(out), "--q", "3", "--drops", "1"]) == EXIT_OK
    assert [r[2] for r in _read(out)[1:]] == ["noma-q3", "noma-q3", "ofdma", "ofdma"]


def test_config_errors_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("q = 0\n", encoding="utf-8")
    assert main(["--config", str(bad)]) == EXIT_CONFIG
    bad.write_text("n_faps = 2\nwhat = 1\n", encoding="utf-8")
    assert main(["--config", str(bad)]) == EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err
    assert main(["--config", str(tmp_path / "missing.cfg")]) == EXIT_CONFIG


def test_bad_flag_value_exits_two(cfg_file):
    assert main(["--config", str(cfg_file), "--q", "0"]) == EXIT_CONFIG


def test_infeasible_topology_exits_three(tmp_path):
    path = tmp_path / "dense.cfg"
    path.write_text("n_faps = 300\nn_fues_per_fap = 0\nn_drops = 1\n", encoding="utf-8")
    assert main(["--config", str(path)]) == EXIT_FEASIBILITY


def test_module_entry_point_prints_csv(cfg_file):
    res = subprocess.run([sys.executable, "-m", "nomafran.cli", "--config", str(cfg_file), "--drops", "1"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert res.stdout.splitlines()[0] == ",".join(HEADER)

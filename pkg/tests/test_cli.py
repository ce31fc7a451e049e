import subprocess
import sys

import numpy as np
import pytest

from stratbesov import cli
from stratbesov.experiments import SUBCOMMANDS
from stratbesov.io import read_csv

SMALL = """
[general]
family_size = 4
[frames]
M = 512
"""


def test_parser_has_all_subcommands_and_flags():
    p = cli.build_parser()
    assert len(SUBCOMMANDS) == 12
    for name in SUBCOMMANDS:
        a = p.parse_args([name, "--config", "c.ini", "--out", "o", "--seed", "4", "--threads", "2",
                          "--strict", "--plots"])
        assert (a.command, a.config, a.out, a.seed, a.threads, a.strict, a.plots) == \
            (name, "c.ini", "o", 4, 2, True, True)
    with pytest.raises(SystemExit):
        p.parse_args(["no-such-command"])


def test_group_check_passes(tmp_path, capsys):
    assert cli.main(["group-check", "--out", str(tmp_path)]) == 0
    assert "group-check: PASS" in capsys.readouterr().out
    header, rows = read_csv(tmp_path / "group-check.csv")
    assert header[:4] == ["criterion", "check", "group", "case"]
    assert rows and all(r[7] == "true" for r in rows if r[8] == "criterion")


def test_exit_codes(tmp_path):
    assert cli.main(["besov-equivalence", "--config", str(tmp_path / "missing.ini")]) == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[nosuch]\nx = 1\n")
    assert cli.main(["group-check", "--config", str(bad)]) == 2
    assert cli.main(["group-check", "--seed", "-1", "--out", str(tmp_path)]) == 3
    assert cli.main(["group-check", "--threads", "0", "--out", str(tmp_path)]) == 3
    pre = tmp_path / "pre.ini"
    pre.write_text("[general]\nfamily_size = 1\n")
    assert cli.main(["group-check", "--config", str(pre), "--out", str(tmp_path)]) == 3


def test_plots_written(tmp_path):
    assert cli.main(["l1-decay", "--out", str(tmp_path), "--plots"]) == 0
    assert (tmp_path / "l1-decay.csv").exists()
    assert list(tmp_path.glob("l1-decay-*.png"))


def test_seed_changes_output(tmp_path):
    cfg = tmp_path / "small.ini"
    cfg.write_text(SMALL)
    for s in (1, 2):
        assert cli.main(["reproducing", "--config", str(cfg), "--seed", str(s), "--out", str(tmp_path / str(s))]) == 0
    a = (tmp_path / "1" / "reproducing.csv").read_bytes()
    b = (tmp_path / "2" / "reproducing.csv").read_bytes()
    assert a != b


def test_deterministic_and_parallel(tmp_path):
    cfg = tmp_path / "small.ini"
    cfg.write_text(SMALL)
    outs = []
    for tag, threads in (("a", 1), ("b", 1), ("c", 3)):
        d = tmp_path / tag
        assert cli.main(["reproducing", "--config", str(cfg), "--out", str(d), "--threads", str(threads)]) == 0
        outs.append(d / "reproducing.csv")
    assert outs[0].read_bytes() == outs[1].read_bytes()
    h1, r1 = read_csv(outs[0])
    h3, r3 = read_csv(outs[2])
    assert h1 == h3 and len(r1) == len(r3)
    v1 = np.array([float(r[4]) for r in r1])
    v3 = np.array([float(r[4]) for r in r3])
    np.testing.assert_allclose(v3, v1, rtol=1e-12, atol=1e-300)


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "stratbesov.cli", "group-check", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "PASS" in r.stdout

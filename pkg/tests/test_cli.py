import json
import subprocess
import sys

import pytest

from looptrees import cli
from looptrees import exactasym as ea
from looptrees import planetree as pt


def run(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr()


def test_sample_files_identical(tmp_path):
    outs = []
    for i, threads in enumerate(("1", "4")):
        d = tmp_path / str(i)
        argv = ["sample", "--law", "nu", "--a", "0.5", "--n", "4096", "--count", "100", "--seed", "7",
                "--out", str(d), "--threads", threads]
        assert cli.main(argv) == 0
        outs.append((d / "trees_nu_n4096.txt").read_bytes())
    assert outs[0] == outs[1]
    lines = outs[0].decode().splitlines()
    assert lines[0].startswith("# config: ")
    with open(tmp_path / "0" / "trees_nu_n4096.txt") as fh:
        trees = list(pt.read_trees(fh))
    assert len(trees) == 100 and all(t.size == 4096 for t in trees)


def test_seed_changes_output(capsys):
    _, a = run(capsys, "sample", "--n", "50", "--count", "3", "--seed", "1")
    _, b = run(capsys, "sample", "--n", "50", "--count", "3", "--seed", "2")
    assert a.out != b.out


def test_perimeter_csv_matches_library(capsys):
    code, out = run(capsys, "exact", "perimeter", "--model", "uipt", "--nmax", "64")
    assert code == 0
    lines = out.out.splitlines()
    config = json.loads(lines[0].removeprefix("# config: "))
    assert config["nmax"] == 64 and config["model"] == "uipt"
    assert lines[1] == "n,pmf,scaled_pmf"
    n, pmf, _ = lines[2].split(",")
    assert int(n) == 1
    assert float(pmf) == ea.perimeter_pmf_uipt(1)
    assert len(lines) == 2 + 64 + 1


def test_perimeter_fit_json(tmp_path):
    assert cli.main(["exact", "perimeter", "--model", "boltzmann", "--nmax", "300", "--out", str(tmp_path)]) == 0
    fit = json.loads((tmp_path / "perimeter_boltzmann_fit.json").read_text())
    assert fit["target_slope"] == pytest.approx(-10 / 3)
    assert fit["fit"]["slope"] == pytest.approx(-10 / 3, abs=0.1)
    assert fit["config"]["nmax"] == 300


def test_report_uipt_perimeter(capsys):
    code, out = run(capsys, "report", "thm11")
    assert code == 0
    data = json.loads(out.out)
    assert data["target_slope"] == pytest.approx(-4 / 3)
    assert data["fit"]["slope"] == pytest.approx(-4 / 3, abs=0.03)
    assert data["config"]["name"] == "thm11"
    assert "seconds" not in data


def test_laws_dump_and_constants(capsys):
    code, out = run(capsys, "laws", "dump", "--model", "typeII", "--kmax", "2")
    assert code == 0
    rows = out.out.splitlines()[2:]
    assert [float(r.split(",")[1]) for r in rows] == pytest.approx([2 / 3, 0.0, 0.25])
    code, out = run(capsys, "laws", "constants")
    data = json.loads(out.out)
    assert data["c_half_typeII"] == pytest.approx(1.5 ** (2 / 3))
    assert data["c_alpha_typeI"]["0.75"] == pytest.approx(0.22401, abs=1e-5)


def test_seventeen_digits(capsys):
    _, out = run(capsys, "stable", "density", "--xmax", "0.5", "--step", "0.25")
    value = out.out.splitlines()[2].split(",")[1]
    assert len(value.replace(".", "").lstrip("0")) == 17


def test_json_format(capsys):
    _, out = run(capsys, "stable", "density", "--xmax", "0.5", "--step", "0.25", "--format", "json")
    data = json.loads(out.out)
    assert data["columns"] == ["x", "p1_minus_x"]
    assert len(data["rows"]) == 3


def test_bij_loop(tmp_path, capsys):
    src = tmp_path / "trees.txt"
    src.write_text("3 2 0 0\n1 0\n")
    code, out = run(capsys, "bij", "loop", "--in", str(src))
    assert code == 0
    blocks = [b for b in out.out.split("\n\n") if b.strip()]
    first = [ln for ln in blocks[0].splitlines() if not ln.startswith("#")]
    assert sorted(first) == ["0 1", "1 2", "2 0"]
    code, out = run(capsys, "bij", "loop", "--in", str(src), "--bar")
    assert "vertices 2 edges 2\n1 0\n0 1\n" in out.out


def test_scaling_and_llt(capsys):
    code, out = run(capsys, "scaling", "--sizes", "2^6..2^8", "--samples", "16")
    assert code == 0
    assert len(out.out.splitlines()) == 2 + 3 + 1
    code, out = run(capsys, "exact", "llt", "--n", "100")
    assert code == 0 and out.out.splitlines()[2].startswith("100,")


def test_computation_error_exit_one(tmp_path, capsys):
    code, out = run(capsys, "bij", "loop", "--in", str(tmp_path / "missing.txt"))
    assert code == 1
    bad = tmp_path / "bad.txt"
    bad.write_text("2 0 0\n")
    code, out = run(capsys, "bij", "loop", "--in", str(bad))
    assert code == 1 and "error" in out.err


def test_usage_error_exit_two():
    for argv in (["frobnicate"], ["sample"], ["report", "nope"]):
        with pytest.raises(SystemExit) as e:
            cli.main(argv)
        assert e.value.code == 2


def test_console_script_exit_codes():
    proc = subprocess.run([sys.executable, "-m", "looptrees.cli", "laws", "dump", "--kmax", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    proc = subprocess.run([sys.executable, "-m", "looptrees.cli", "bogus"], capture_output=True, text=True)
    assert proc.returncode == 2

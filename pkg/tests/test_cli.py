import numpy as np
import pytest

from bregfix import cli
from bregfix.experiments import GOLDEN_TABLE1
from bregfix.iterations import read_trace_csv

SECTION6 = """\
# Halpern instance
scheme = bregman_halpern
function = section6_quadratic
mapping = scale 0.2
domain.lo = -1
domain.hi = 1
x1 = -0.8
u = 0.1
schedule.name = section6
max_iter = 42
"""

SQUARE_VERIFY = """\
function = quartic
mapping = square
domain.lo = 0
domain.hi = 0.9
grid.points = 91
"""


@pytest.fixture
def write(tmp_path):
    def _write(text, name="c.cfg"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return _write


def test_parse_config_text():
    cfg = cli.parse_config_text("a = 1  # note\n\n# skip\nb.c=x y\n")
    assert cfg == {"a": "1", "b.c": "x y"}


def test_parse_rejects_garbage():
    with pytest.raises(Exception):
        cli.parse_config_text("no equals sign here\n")


def test_run_section6(write, tmp_path):
    out = tmp_path / "run"
    assert cli.main(["run", write(SECTION6), "--out", str(out)]) == 0
    rows = read_trace_csv(out / "trace.csv")
    got = np.array([[r["z"][0], r["y"][0], r["x"][0], r["step_diff"][0]] for r in rows])
    assert np.max(np.abs(got - GOLDEN_TABLE1[:, 1:])) <= 1e-6


def test_run_is_deterministic(write, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    cli.main(["run", write(SECTION6), "--out", str(a)])
    cli.main(["run", write(SECTION6), "--out", str(b)])
    assert (a / "trace_full.csv").read_bytes() == (b / "trace_full.csv").read_bytes()


def test_set_overrides_file(write, tmp_path):
    out = tmp_path / "o"
    assert cli.main(["run", write(SECTION6), "--set", "max_iter=5", "--out", str(out)]) == 0
    assert len(read_trace_csv(out / "trace.csv")) == 5


@pytest.mark.parametrize("override,code", [
    ("schedule.name=constant", 2),
    ("x1=2", 3),
    ("colour=blue", 2),
    ("scheme=mann", 2),
])
def test_run_error_codes(write, tmp_path, capsys, override, code):
    args = ["run", write(SECTION6), "--out", str(tmp_path / "e"), "--set", override]
    if override.startswith("schedule"):
        args += ["--set", "schedule.alpha=0.5", "--set", "schedule.beta=1.0", "--set", "schedule.gamma=0.5",
                 "--set", "scheme=noor"]
    assert cli.main(args) == code
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("error: ")


def test_missing_config_file(capsys):
    assert cli.main(["run", "/nonexistent/x.cfg"]) == 2
    assert capsys.readouterr().err.startswith("error: ")


def test_verify_nonexpansive_witness(write, capsys):
    path = write(SQUARE_VERIFY + "verify.holds = nonexpansive\n")
    assert cli.main(["verify", path]) == 1
    out = capsys.readouterr().out
    assert "verdict=violated" in out and "witness=" in out and "MISMATCH" in out


def test_verify_violations_bundle(write):
    path = write(SQUARE_VERIFY + "verify.violated = nonexpansive, condition_C, generalized_alpha\n")
    assert cli.main(["verify", path, "--jobs", "2"]) == 0


def test_verify_bregman_upper_alphas(write):
    path = write(SQUARE_VERIFY + "verify.holds = bregman_generalized_alpha\nverify.alphas = 0.6 0.7 0.8 0.9\n")
    assert cli.main(["verify", path]) == 0


def test_verify_bregman_half_fails(write, capsys):
    path = write(SQUARE_VERIFY + "verify.holds = bregman_generalized_alpha\nverify.alphas = 0.5\n")
    assert cli.main(["verify", path]) == 1
    assert "witness=(0.9,0.65)" in capsys.readouterr().out


def test_verify_empty_class_list(write):
    assert cli.main(["verify", write(SQUARE_VERIFY)]) == 2


def test_verify_unknown_class(write):
    assert cli.main(["verify", write(SQUARE_VERIFY + "verify.holds = firmly\n")]) == 2


def test_reproduce_table1(tmp_path, capsys):
    assert cli.main(["reproduce", "table1", "--out", str(tmp_path)]) == 0
    assert "verdict=pass" in capsys.readouterr().out


def test_reproduce_table1_tight_tol(tmp_path):
    assert cli.main(["reproduce", "table1", "--out", str(tmp_path), "--tol", "1e-9"]) == 1


def test_reproduce_example1_reports_failure(tmp_path, capsys):
    # the alpha = 1/2 claim is refuted on the grid, so the bundle fails
    assert cli.main(["reproduce", "example1", "--out", str(tmp_path)]) == 1
    out = capsys.readouterr().out
    assert "claim=bregman_generalized_alpha[0.5] expected=holds_on_grid result=refuted" in out


def test_reproduce_unknown(tmp_path, capsys):
    assert cli.main(["reproduce", "table9", "--out", str(tmp_path)]) == 2
    assert capsys.readouterr().err.startswith("error: unknown experiment")


def test_project(capsys):
    args = ["project", "--set", "function=quartic", "--set", "domain.lo=-1", "--set", "domain.hi=1",
            "--set", "point=1.7"]
    assert cli.main(args) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "projection=1"
    assert float(out[1].split("=")[1]) <= 1e-10


def test_project_2d(capsys):
    args = ["project", "--set", "dim=2", "--set", "domain.lo=0", "--set", "domain.hi=1",
            "--set", "point=-0.5 0.3"]
    assert cli.main(args) == 0
    assert capsys.readouterr().out.splitlines()[0] == "projection=0 0.29999999999999999"


def test_module_entry_point():
    import subprocess
    import sys
    r = subprocess.run([sys.executable, "-m", "bregfix", "reproduce", "nope"], capture_output=True, text=True)
    assert r.returncode == 2 and r.stderr.startswith("error: ")

import json
import subprocess
import sys
from pathlib import Path

import pytest

from wienerchaos.cli import main

FAST = """scenario = "heat-advection"
[grid]
n = {n}
[time]
M = 64
[truncation]
I = 4
N = 3
[oracle]
paths = 300
probes = 8
"""


def write(tmp_path, text, name="c.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def tree(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_solve_writes_bundle_and_is_byte_identical(tmp_path):
    cfg = write(tmp_path, FAST.format(n=64))
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    a = tree(tmp_path / "a")
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert tree(tmp_path / "a") == a
    for name in ("config.toml", "manifest.json", "moments.csv", "energy.csv", "report.json", "coefficients/empty.csv"):
        assert name in a
    manifest = json.loads(a["manifest.json"])
    assert manifest["truncation"]["count"] == 35 and len(manifest["config_digest"]) == 64
    report = json.loads(a["report.json"])
    assert report["passed"] and "tail" in report
    header = a["energy.csv"].decode().splitlines()[0]
    assert header == "t,F0,F1,F2,F3,total,weighted_total"


def test_seed_changes_monte_carlo_output(tmp_path):
    cfg = write(tmp_path, FAST.format(n=64))
    main(["solve", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["solve", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "7"])
    assert (tmp_path / "a" / "mc_mean.json").read_text() != (tmp_path / "b" / "mc_mean.json").read_text()


def test_coarse_grid_misses_threshold(tmp_path, capsys):
    cfg = write(tmp_path, FAST.format(n=16))
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "[FAIL] uh-exact" in capsys.readouterr().out


@pytest.mark.parametrize("text, needle", [
    ('scenario = "burgers"\n', "scenario"),
    ('scenario = "passive-scalar"\n[equation]\nnu = -1.0\n', "equation.nu"),
    ("", "scenario"),
])
def test_bad_config_exits_1(tmp_path, capsys, text, needle):
    assert main(["solve", "--config", write(tmp_path, text), "--out", str(tmp_path / "o")]) == 1
    assert needle in capsys.readouterr().err


def test_usage_errors_exit_1(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["solve"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["verify"])
    assert info.value.code == 1
    assert main(["solve", "--config", str(tmp_path / "missing.toml")]) == 1


def test_classify(tmp_path, capsys):
    cfg = write(tmp_path, 'scenario = "heat-advection"\n[equation]\nsigma = 2.0\n[weights]\nmode = "suggest"\n[grid]\nn = 32\n')
    assert main(["classify", "--config", cfg]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["unweighted"]["kind"] == "none"
    assert info["weighted"]["kind"] == "strong"


def test_sample(tmp_path):
    cfg = write(tmp_path, FAST.format(n=32))
    assert main(["sample", "--config", cfg, "--out", str(tmp_path / "s"), "--count", "3"]) == 0
    assert len(list((tmp_path / "s" / "samples").glob("*.csv"))) == 3
    header = (tmp_path / "s" / "pathwise.csv").read_text().splitlines()[0]
    assert header == "x1,sample_0,sample_1,sample_2"


def test_verify_config(tmp_path):
    cfg = write(tmp_path, FAST.format(n=64))
    assert main(["verify", "--config", cfg, "--out", str(tmp_path / "v"), "--paths", "0"]) == 0
    summary = json.loads((tmp_path / "v" / "summary.json").read_text())
    assert summary["passed"] and all(c["passed"] for c in summary["checks"])


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "wienerchaos", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "verify" in out.stdout

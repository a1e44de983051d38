import json
import os
import subprocess
import sys

import numpy as np
import pytest

from boxlab.cli import main
from boxlab.finitary import DirectionSet, GridFunction, grid_box_norm


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 1  # exactly one JSON line on stdout
    return code, json.loads(out[0])


def read_dir(path):
    return {name: open(os.path.join(path, name), "rb").read() for name in sorted(os.listdir(path))}


def test_seq_nk(capsys):
    code, res = run(capsys, "seq", "nk", "--p", "-1 0 1", "--k", "3")
    assert code == 0 and res["status"] == "ok" and res["n_k"] == 1


def test_identity_sequence_zero_diffs(capsys):
    code, res = run(capsys, "verify", "identity", "--config", "configs/z12.cfg", "--seq", "id", "--Ns", "100,1000")
    assert code == 0 and res["diffs"] == [0.0, 0.0]


def test_usage_errors_exit_2(capsys):
    code, res = run(capsys, "bogus")
    assert code == 2 and res["status"] == "error" and res["exit_code"] == 2
    code, _ = run(capsys, "seq", "nk", "--p", "1 x", "--k", "3")
    assert code == 2
    code, _ = run(capsys, "seminorm", "--config", "configs/missing.cfg")
    assert code == 2
    code, _ = run(capsys, "seq", "nk", "--p", "-1 0 1", "--k", "3", "--workers", "0")
    assert code == 2


def test_budget_exit_3(capsys):
    code, res = run(capsys, "verify", "weyl", "--seq", "hardy: t^3/2", "--beta", "1/2", "--Ns", "3000000", "--budget-ms", "1")
    assert code == 3 and "budget" in res["error"]


def test_precision_exit_3(capsys):
    code, _ = run(capsys, "verify", "weyl", "--seq", "poly: 0 0 0 0 0 0 0 1", "--beta", "1/3", "--Ns", "1000")
    assert code == 3


def test_artifacts_embed_digest(tmp_path, capsys):
    out = tmp_path / "o"
    code, res = run(capsys, "verify", "identity", "--config", "configs/z12.cfg", "--seq", "id", "--Ns", "10,20", "--out-dir", str(out))
    assert code == 0
    body = json.loads((out / "verify-identity.json").read_text())
    assert body["manifest_digest"] == res["manifest_digest"]
    csv_text = (out / "verify-identity_identity.csv").read_text()
    assert csv_text.startswith(f"# manifest_digest: {res['manifest_digest']}\n")
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["digest"] == res["manifest_digest"] and manifest["seed"] == 0


COMMANDS = [
    ["seminorm", "--config", "configs/z12.cfg"],
    ["dual", "--config", "configs/z12.cfg"],
    ["cube", "--config", "configs/z4sq.cfg", "--check-duality"],
    ["magic", "--config", "configs/z4sq.cfg", "--check-property", "--trials", "5"],
    ["corners", "popular", "--config", "configs/z101.cfg"],
    ["verify", "identity", "--config", "configs/z12.cfg"],
    ["verify", "factorial", "--config", "configs/z12.cfg", "--kmax", "5", "--N", "500"],
    ["verify", "linear", "--config", "configs/z12.cfg"],
    ["seq", "residues", "--seq", "hardy: t^3/2", "--q", "31", "--N", "1000"],
]


@pytest.mark.parametrize("cmd", COMMANDS, ids=lambda c: "-".join(c[:2]))
def test_artifacts_byte_identical_across_workers(tmp_path, capsys, cmd):
    dirs = []
    for workers in ("1", "3"):
        out = tmp_path / f"w{workers}"
        code, _ = run(capsys, *cmd, "--seed", "5", "--workers", workers, "--out-dir", str(out))
        assert code == 0
        files = read_dir(out)
        files.pop("manifest.json")  # carries wall-clock timings
        dirs.append(files)
    assert dirs[0] == dirs[1]


def test_grid_commands(tmp_path, capsys):
    f = GridFunction.random_sign(2, 3, np.random.default_rng(0))
    path = tmp_path / "f.json"
    path.write_text(json.dumps(f.to_json()))
    code, res = run(capsys, "grid-norm", "--input", str(path), "--dirs", "e1:2,e2:2")
    # the grid norm sums over x rather than averaging, so it is not capped at 1
    assert code == 0 and res["value"] == pytest.approx(grid_box_norm(f, DirectionSet.parse("e1:2,e2:2", 2)), abs=0)
    code, res = run(capsys, "inverse-witness", "--input", str(path), "--kind", "u2")
    assert code == 0 and res["correlation"] >= 0
    code, res = run(capsys, "regularity", "--input", str(path), "--eps", "0.1")
    assert code == 0


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "boxlab.cli", "seq", "eval", "--seq", "hardy: t^3/2", "--n", "100"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["value"] == "1000"  # exact integers travel as strings

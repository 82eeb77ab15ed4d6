import json
import os
import subprocess
import sys

import numpy as np
import pytest

from puredist import io
from puredist.cli import ExperimentConfig, build_parser, config_from_args, main, parse_seeds
from puredist.sampling import basis_povm, bell_pair
from puredist.states import DensityOperator, Povm


@pytest.fixture
def bell_file(tmp_path):
    bell = np.zeros((4, 4))
    bell[0, 0] = bell[0, 3] = bell[3, 0] = bell[3, 3] = 0.5
    path = tmp_path / "bell.json"
    io.save_state(DensityOperator([("A", 2), ("B", 2)], bell), str(path))
    return str(path)


@pytest.fixture
def basis_file(tmp_path):
    path = tmp_path / "basis.json"
    io.save_povm(basis_povm(2, "A"), str(path))
    return str(path)


def test_parse_seeds():
    assert parse_seeds("1..5") == [1, 2, 3, 4, 5]
    assert parse_seeds("3,7,9") == [3, 7, 9]
    assert parse_seeds("4") == [4]


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(command="entropy", eps=1.0)
    with pytest.raises(ValueError):
        ExperimentConfig(command="entropy", eps=0.1, K=0)
    with pytest.raises(ValueError):
        ExperimentConfig(command="entropy", eps=0.1, seeds=[])
    with pytest.raises(ValueError):
        ExperimentConfig(command="nope")
    with pytest.raises(ValueError):
        ExperimentConfig(command="entropy", fmt="xml")


def test_state_povm_round_trip(tmp_path, rng):
    from puredist.sampling import random_density, random_povm
    st = random_density(rng, 4, "A")
    p = tmp_path / "s.json"
    io.save_state(st, str(p))
    back = io.load_state(str(p))
    assert np.max(np.abs(back.matrix - st.matrix)) <= 1e-15
    pv = random_povm(rng, 3, 4)
    pp = tmp_path / "p.json"
    io.save_povm(pv, str(pp))
    back_p = io.load_povm(str(pp))
    for a, b in zip(back_p.elements, pv.elements):
        assert np.max(np.abs(a - b)) <= 1e-15


def test_invalid_state_rejected(tmp_path):
    bad = {"registers": [{"label": "A", "dim": 2}],
           "matrix": [[0.8, 0.0], [0.0, 0.0], [0.0, 0.0], [0.8, 0.0]]}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    rc = main(["entropy", "--state", str(path), "--eps", "0.1"])
    assert rc == 2  # named invariant violation, nonzero exit


def test_entropy_bell_marginals(bell_file, capsys):
    rc = main(["entropy", "--state", bell_file, "--eps", "0.1"])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    # maximally mixed marginals: H_H = log2(2 * 0.9)
    assert np.isclose(out["marginals"]["A"]["h_h"], np.log2(1.8), atol=1e-12)
    assert np.isclose(out["marginals"]["B"]["h_h"], np.log2(1.8), atol=1e-12)


def test_entropy_with_povm(bell_file, basis_file, capsys):
    rc = main(["entropy", "--state", bell_file, "--eps", "0.1",
               "--povm", basis_file])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    stats = out["povm"][basis_file]
    assert stats["h_h_cond_bob"] <= 1e-9  # pure conditionals
    assert np.isclose(stats["i_max"], 1.0, atol=1e-6)


def test_protocol_csv_deterministic(bell_file, basis_file, tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    args = ["kd-oneshot", "--state", bell_file, "--povm", basis_file,
            "--eps", "0.1", "--K", "4", "--L", "8", "--seeds", "1..3",
            "--format", "csv"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    lines = out1.read_text().strip().splitlines()
    assert len(lines) == 4  # header + 3 seeds
    assert lines[0].startswith("protocol,seed,eps")


def test_compare_csv_columns(bell_file, basis_file, tmp_path):
    out = tmp_path / "cmp.csv"
    rc = main(["compare", "--state", bell_file, "--povm", basis_file,
               "--eps", "0.25", "--K", "4", "--L", "8", "--seeds", "1,2",
               "--format", "csv", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    header = lines[0].split(",")
    assert "c_borrow" in header and "d_borrow" in header and "margin" in header
    assert len(lines) == 3


def test_bounds_command(bell_file, basis_file, capsys):
    rc = main(["bounds", "--state", bell_file, "--povm", basis_file,
               "--eps", "0.1", "--f-eps", "0.05", "--g-eps", "0.2"])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    assert out["f_eps"] == 0.05 and out["g_eps"] == 0.2
    per = out["per_povm"][basis_file]
    assert "dist_upper" in per and "dist_upper_rank1" in per


def test_verify_command_passes(capsys):
    from puredist.verify import MANIFEST
    rc = main(["verify", "--trials", "15", "--eps", "0.05", "--seed", "7"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "suite manifest:" in out
    for name in MANIFEST:
        assert name in out
    assert f"{len(MANIFEST)}/{len(MANIFEST)} checks passed" in out


def test_missing_povm_is_an_error(bell_file):
    rc = main(["protocol-a", "--state", bell_file, "--eps", "0.1"])
    assert rc == 2


def test_dimension_mismatch_names_the_invariant(bell_file, tmp_path, capsys):
    io.save_povm(basis_povm(3, "A"), str(tmp_path / "p3.json"))
    rc = main(["kd-oneshot", "--state", bell_file,
               "--povm", str(tmp_path / "p3.json"), "--eps", "0.1"])
    assert rc == 2
    assert "does not match register" in capsys.readouterr().err


def test_threads_env_cap(bell_file, basis_file, tmp_path, monkeypatch):
    monkeypatch.setenv("PUREDIST_THREADS", "2")
    out = tmp_path / "t.json"
    rc = main(["protocol-a", "--state", bell_file, "--povm", basis_file,
               "--eps", "0.1", "--seeds", "1..4", "--out", str(out)])
    assert rc == 0
    data = json.loads(out.read_text())
    assert [t["seed"] for t in data["transcripts"]] == [1, 2, 3, 4]


def test_console_entry_point(bell_file):
    proc = subprocess.run(
        [sys.executable, "-m", "puredist.cli", "entropy", "--state", bell_file,
         "--eps", "0.1"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    json.loads(proc.stdout)


def test_json_17_digit_floats(tmp_path):
    from puredist.io import dumps
    text = dumps({"x": 0.1, "y": [1.0, 2.5], "n": None, "b": True})
    assert text == '{"b":true,"n":null,"x":0.10000000000000001,"y":[1,2.5]}'

import csv
import json
from pathlib import Path

import pytest

from carnot_monotone.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _write(tmp_path, text, name="exp.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _run(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_group_info(capsys):
    code, out, _ = _run(capsys, ["group-info", "--group", "H1"])
    assert code == 0 and "step 2, dim 3" in out and "Q 4, checks PASS" in out
    code, out, _ = _run(capsys, ["group-info", "--group", "R3"])
    assert code == 0 and "step 1" in out and "Q 3" in out


def test_group_info_rejects_bad_constants(capsys):
    code, _, err = _run(capsys, ["group-info", "--group", str(CONFIGS / "jacobi_violation.toml")])
    assert code == 2 and "(e_1, e_2, e_3)" in err


def test_stochastic_commands_need_seed(capsys, tmp_path):
    cfg = _write(tmp_path, 'group = "H1"\n[sampler]\ncount = 500\n')
    code, _, err = _run(capsys, ["monotone-check", "--config", cfg])
    assert code == 2 and "seed" in err
    code, _, _ = _run(capsys, ["monotone-check", "--config", cfg, "--seed", "-3"])
    assert code == 2


def test_unknown_keys_and_bad_window(capsys, tmp_path):
    assert _run(capsys, ["group-info", "--config", _write(tmp_path, "colour = 1\n")])[0] == 2
    cfg = _write(tmp_path, 'seed = 1\n[window]\nlo = [0, 0]\nhi = [1, 1]\n', "w.toml")
    assert _run(capsys, ["monotone-check", "--config", cfg])[0] == 2


def test_monotone_check_outputs(capsys, tmp_path):
    cfg = _write(tmp_path, 'seed = 5\n[sampler]\ncount = 2000\n')
    out = tmp_path / "out"
    code, text, _ = _run(capsys, ["monotone-check", "--config", cfg, "--out", str(out)])
    assert code == 0
    doc = json.loads((out / "monotone-check.json").read_text())
    assert doc["seed"] == 5 and len(doc["config_hash"]) == 16
    assert doc["config"]["sampler"]["min_run"] == pytest.approx(0.04)
    assert doc["result"]["monotonicity"]["fraction"]["value"] <= 0.01
    rows = list(csv.reader(open(out / "monotone-check.csv")))
    assert rows[0][-2:] == ["config_hash", "seed"]
    assert all(r[-2] == doc["config_hash"] and r[-1] == "5" for r in rows[1:])
    assert json.loads(text)["config_hash"] == doc["config_hash"]


def test_ball_fails_monotone_check(capsys, tmp_path):
    cfg = _write(tmp_path, 'seed = 5\n[set]\nkind = "ball"\ndistance = "coordinate"\ncenter = [0, 0, 0]\n'
                           'radius = 0.8\n[sampler]\ncount = 2000\n[monotone]\nmax_fraction = 0.01\n')
    out = tmp_path / "out"
    code, _, _ = _run(capsys, ["monotone-check", "--config", cfg, "--out", str(out)])
    doc = json.loads((out / "monotone-check.json").read_text())
    assert doc["result"]["monotonicity"]["fraction"]["value"] >= 0.1
    # a ball carries no monotone label, so nothing is claimed and nothing fails
    assert code == 0 and doc["result"]["monotone_at_resolution"] is False


def test_reruns_are_byte_identical(capsys, tmp_path):
    cfg = _write(tmp_path, 'seed = 9\n[sampler]\ncount = 1500\n[perimeter]\nmode = "estimate"\n')
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run(capsys, ["perimeter", "--config", cfg, "--out", str(a)])[0] == 0
    assert _run(capsys, ["perimeter", "--config", cfg, "--out", str(b), "--workers", "3"])[0] == 0
    assert (a / "perimeter.json").read_bytes() == (b / "perimeter.json").read_bytes()


def test_minimality_and_homogeneity(capsys, tmp_path):
    out = tmp_path / "out"
    cfg = str(CONFIGS / "half_space.toml")
    code, _, _ = _run(capsys, ["perimeter", "--config", cfg, "--out", str(out), "--seed", "1"])
    assert code == 0
    rows = list(csv.reader(open(out / "perimeter.csv")))
    assert len(rows) == 6 and rows[0][3:6] == ["radius", "delta", "stderr"]
    code, text, _ = _run(capsys, ["perimeter", "--config", cfg, "--mode", "homogeneity"])
    assert json.loads(text)["result"]["expected"] == 8.0


def test_density_modes(capsys, tmp_path):
    out = tmp_path / "out"
    cfg = _write(tmp_path, 'seed = 2\n[density]\nradii = [0.4, 0.2]\nsamples = 4000\n')
    code, text, _ = _run(capsys, ["density", "--config", cfg, "--mode", "profile"])
    ratios = [r["value"] for r in json.loads(text)["result"]["ratios"]]
    assert code == 0 and all(abs(r - 0.5) < 0.05 for r in ratios)
    cfg = _write(tmp_path, 'seed = 2\n[density]\nradii = [0.4, 0.2]\nsamples = 200\ngrid_step = 0.5\n', "s.toml")
    code, text, _ = _run(capsys, ["density", "--config", cfg, "--mode", "scan", "--out", str(out)])
    rows = list(csv.reader(open(out / "density.csv")))
    assert code == 0 and len(rows) - 1 == 5 ** 3 == json.loads(text)["result"]["points"]
    code, text, _ = _run(capsys, ["density", "--config", str(CONFIGS / "volume.toml"), "--mode", "volume"])
    assert code == 0 and abs(json.loads(text)["result"]["slope"] - 7) <= 0.1


def test_gamma_modes(capsys):
    code, text, _ = _run(capsys, ["gamma", "--config", str(CONFIGS / "gamma.toml")])
    assert code == 0 and json.loads(text)["result"]["p"] == 3
    code, text, _ = _run(capsys, ["gamma", "--group", "free2-3", "--mode", "min-p"])
    assert code == 1 and json.loads(text)["result"]["openness"] == "inconclusive"
    code, text, _ = _run(capsys, ["gamma", "--group", "H1", "--mode", "sweep"])
    assert code == 0 and json.loads(text)["result"]["submersion"] == 100
    code, text, _ = _run(capsys, ["gamma", "--group", "engel", "--mode", "rank"])
    assert json.loads(text)["result"]["verdict"] == "rank_deficient"

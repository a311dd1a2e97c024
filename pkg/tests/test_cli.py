import csv
import json

import pytest

from wavemap_spectrum.cli import main, read_frames
from wavemap_spectrum.config import OUTPUT_ENV


def run(tmp_path, *args):
    return main(list(args) + ["--output-dir", str(tmp_path)])


def load(tmp_path, name):
    return json.loads((tmp_path / name).read_text())


def test_empty_real_range(tmp_path, capsys):
    assert run(tmp_path, "eigen", "--range", "1.05:10") == 0
    assert "no eigenvalues" in capsys.readouterr().out
    assert load(tmp_path, "eigenvalues.json")["results"]["eigenvalues"] == []


def test_negative_range_and_files(tmp_path):
    assert run(tmp_path, "eigen", "--range", "-0.6:-0.5") == 0
    rows = list(csv.reader(open(tmp_path / "eigenvalues.csv")))
    assert rows[0][:3] == ["n", "lambda_re", "lambda_im"] and len(rows) == 2
    assert abs(float(rows[1][1]) + 0.542466) < 5e-7


def test_extended_precision(tmp_path):
    assert run(tmp_path, "eigen", "--range", "-2.5:-1.5", "--precision", "extended") == 0
    ext = load(tmp_path, "eigenvalues.json")["results"]["extended"]
    (value,) = ext.values()
    assert abs(float(value) + 2) < 1e-30


def test_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["eigen", "--range", "-4:-3", "--output-dir", str(d)]) == 0
    assert (a / "eigenvalues.csv").read_bytes() == (b / "eigenvalues.csv").read_bytes()
    ja, jb = load(a, "eigenvalues.json"), load(b, "eigenvalues.json")
    ja["config"].pop("output_dir"), jb["config"].pop("output_dir")
    assert ja == jb


@pytest.mark.parametrize(
    "args",
    [
        ["eigen", "--range", "3:1"],
        ["eigen", "--range", "banana"],
        ["eigen", "--tol", "-1"],
        ["verify", "--n", "0:9"],
        ["fit"],
        ["evolve", "--kind", "gaussian-lump", "--amplitude", "500", "--n-cells", "100"],
        ["nonsense"],
    ],
)
def test_invalid_config_exit_2(tmp_path, args):
    assert run(tmp_path, *args) == 2


def test_config_file_and_env(tmp_path, monkeypatch):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"lam_min": -1.0, "lam_max": 0.0}))
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    assert main(["eigen", "--config", str(cfg)]) == 0
    out = load(tmp_path / "env", "eigenvalues.json")
    assert len(out["results"]["eigenvalues"]) == 1
    assert out["config"]["lam_min"] == -1.0
    cfg.write_text(json.dumps({"unknown": 1}))
    assert main(["eigen", "--config", str(cfg)]) == 2


def test_verify_resonance(tmp_path, capsys):
    assert run(tmp_path, "verify", "--check", "resonance", "--n", "1:8") == 0
    rows = load(tmp_path, "verify.json")["results"]
    assert [("False" in r["detail"]) for r in rows] == [N == 3 for N in range(1, 9)]
    assert capsys.readouterr().out.count("PASS") == 8


def test_verify_oracle(tmp_path):
    assert run(tmp_path, "verify", "--check", "oracle", "--window", "-7.5:1.5") == 0
    rows = load(tmp_path, "verify.json")["results"]
    assert sum(r["name"].startswith("shooting") for r in rows) == 7


def test_shoot(tmp_path):
    assert run(tmp_path, "shoot", "--range", "-1:0") == 0
    assert len(load(tmp_path, "shooting.json")["results"]["eigenvalues"]) == 1


def test_evolve_exact_and_fit(tmp_path):
    assert run(tmp_path, "evolve", "--kind", "exact-self-similar", "--R", "4", "--n-cells", "2000",
               "--t-end", "1") == 0
    res = load(tmp_path, "evolve.json")["results"]
    assert abs(res["blowup"]["T"] - 1) < 1e-3


def test_small_data_expect_blowup_fails(tmp_path):
    args = ["evolve", "--amplitude", "0.5", "--R", "6", "--n-cells", "600", "--t-end", "8"]
    assert run(tmp_path, *args) == 0
    assert run(tmp_path, *args, "--expect-blowup") == 1


@pytest.mark.slow
def test_default_evolve_then_fit(tmp_path):
    assert run(tmp_path, "evolve", "--expect-blowup") == 0
    man = load(tmp_path, "evolve.json")
    assert abs(man["results"]["fit"]["lam_fit"] + 0.542466) < 0.15 * 0.542466
    for name in man["outputs"]:
        assert (tmp_path / name).exists()
    frames = read_frames(str(tmp_path / "frames.csv"))
    assert len(frames) >= 5
    out = tmp_path / "refit"
    assert main(["fit", "--frames", str(tmp_path / "frames.csv"), "--output-dir", str(out)]) == 0
    assert load(out, "fit.json")["results"]["fit"]["lam_fit"] == pytest.approx(man["results"]["fit"]["lam_fit"])


def test_complex_reported_empty(tmp_path, capsys):
    assert run(tmp_path, "eigen", "--range", "0.5:1.5", "--complex", "--region", "-13:2:0.1:5", "--grid", "6:3") == 0
    res = load(tmp_path, "eigenvalues.json")["results"]["complex"]
    assert res["roots"] == [] and res["seeds"] == 18
    assert "complex eigenvalues in region" in capsys.readouterr().out


@pytest.mark.slow
def test_verify_default_all_pass(tmp_path, capsys):
    assert run(tmp_path, "verify") == 0
    rows = load(tmp_path, "verify.json")["results"]
    assert rows and all(r["passed"] for r in rows)

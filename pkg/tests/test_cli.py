"""Configuration loading, emission formats, CLI subcommands."""

import json
from pathlib import Path

import numpy as np
import pytest

from paulifierz import cli


def test_defaults_validate():
    config = cli.load_config()
    assert config["particles"]["n"] == 2
    assert isinstance(cli.config_hash(config), str)


def test_config_file_roundtrip(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text("[particles]\nepsilon = 0.25\n", encoding="utf-8")
    config = cli.load_config(path)
    assert config["particles"]["epsilon"] == 0.25
    # untouched sections keep defaults
    assert config["modes"]["lambda_uv"] == 1.0


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[particles]\nbogus_knob = 3\n", encoding="utf-8")
    with pytest.raises(cli.ConfigError, match="bogus_knob"):
        cli.load_config(path)
    with pytest.raises(cli.ConfigError, match="nonsense"):
        cli.load_config(None, overrides=["nonsense=1"])


def test_unknown_key_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text("[modes]\nwhatever = 1\n", encoding="utf-8")
    code = cli.main(["dump-modes", "--config", str(path), "--out", str(tmp_path)])
    assert code == 2
    assert "whatever" in capsys.readouterr().err


def test_override_roundtrips_into_manifest(tmp_path):
    code = cli.main([
        "dump-modes", "--out", str(tmp_path),
        "--override", "particles.epsilon=0.17",
    ])
    assert code == 0
    lines = [json.loads(line) for line in (tmp_path / "manifest.jsonl").read_text().splitlines()]
    run_line = next(l for l in lines if l["experiment"] == "run")
    assert "particles.epsilon=0.17" in run_line["overrides"]


def test_dump_modes_columns(tmp_path):
    code = cli.main(["dump-modes", "--out", str(tmp_path)])
    assert code == 0
    header = (tmp_path / "modes.csv").read_text().splitlines()[0]
    assert header == "k_x,k_y,k_z,helicity,weight,pol_x,pol_y,pol_z"


def test_dump_modes_deterministic(tmp_path):
    cli.main(["dump-modes", "--out", str(tmp_path / "a")])
    cli.main(["dump-modes", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "modes.csv").read_bytes() == (tmp_path / "b" / "modes.csv").read_bytes()


def test_csv_formatting(tmp_path):
    rows = [{"x": 1.0 / 3.0, "n": 4, "flag": True, "name": "abc"}]
    path = cli.write_csv(tmp_path / "t.csv", ["x", "n", "flag", "name"], rows)
    body = path.read_text().splitlines()[1]
    x_str = body.split(",")[0]
    assert "e" in x_str and len(x_str.split("e")[0].replace("-", "").replace(".", "")) >= 15
    assert body.endswith("4,1,abc") or body.split(",")[1:] == ["4", "1", "abc"]


def _tiny_overrides(tmp_path):
    return [
        "particles.n_x=6", "particles.box_length=3.0",
        "dressing.photon_cutoff_L=1",
        "dynamics.t=0.4",
        "semiclassics.steps=200", "semiclassics.s_nodes=24",
    ]


def test_assemble_and_evolve_smoke(tmp_path):
    over = _tiny_overrides(tmp_path)
    assert cli.main(["assemble", "--out", str(tmp_path)] + sum((["--override", o] for o in over), [])) == 0
    lines = [json.loads(l) for l in (tmp_path / "manifest.jsonl").read_text().splitlines()]
    ops = {l.get("operator") for l in lines if l["experiment"] == "assemble"}
    assert {"h0", "h1", "h2", "H", "T", "U", "H_dressed"} <= ops
    u_line = next(l for l in lines if l.get("operator") == "U")
    assert u_line["unitarity_residual"] < 1e-10
    assert cli.main(["evolve", "--out", str(tmp_path)] + sum((["--override", o] for o in over), [])) == 0
    evolve = (tmp_path / "evolve.csv").read_text().splitlines()
    assert evolve[0] == "t,norm,energy,photon_number,q1_mean,overlap0"
    first = dict(zip(evolve[0].split(","), evolve[1].split(",")))
    assert float(first["norm"]) == pytest.approx(1.0, abs=1e-9)


def test_evolve_deterministic_values(tmp_path):
    over = sum((["--override", o] for o in _tiny_overrides(tmp_path)), [])
    cli.main(["evolve", "--out", str(tmp_path / "a")] + over)
    cli.main(["evolve", "--out", str(tmp_path / "b")] + over)
    read = lambda p: [line.rsplit(",", 0) for line in (p / "evolve.csv").read_text().splitlines()]
    assert read(tmp_path / "a") == read(tmp_path / "b")


def test_classical_csv(tmp_path):
    over = sum((["--override", o] for o in _tiny_overrides(tmp_path)), [])
    assert cli.main(["classical", "--out", str(tmp_path)] + over) == 0
    header = (tmp_path / "classical.csv").read_text().splitlines()[0]
    assert header.startswith("s,x_1,p_1,f_1")
    assert header.endswith("dipole_accel")


def test_report_renders_figures(tmp_path):
    over = sum((["--override", o] for o in _tiny_overrides(tmp_path)), [])
    cli.main(["classical", "--out", str(tmp_path)] + over)
    cli.main(["evolve", "--out", str(tmp_path)] + over)
    assert cli.main(["report", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "classical.png").exists()
    assert (tmp_path / "evolve.png").exists()

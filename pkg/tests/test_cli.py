import csv
import json

import pytest

from biot_majorant.cli import main
from biot_majorant.experiment import CSV_COLUMNS, ConfigError, ExperimentConfig


def write_config(tmp_path, **kw):
    body = {"case": "MS1", "n": 4, "refinements": 1, "mode": "tight"}
    body.update(kw)
    path = tmp_path / "exp.ini"
    path.write_text("[experiment]\n" + "".join(f"{k} = {v}\n" for k, v in body.items()))
    return path


def test_run_writes_report(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", str(write_config(tmp_path)), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert [r["n"] for r in report["meshes"]] == [4, 8]
    assert report["summary"]["all_guarantees_hold"]
    assert report["config"]["case"] == "MS1"
    assert "wall_time" not in report["meshes"][0]
    assert report["meshes"][0]["majorant"]["mode"] == "tight"


def test_mode_override(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", str(write_config(tmp_path)), "--out", str(out), "--mode", "paper"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["meshes"][0]["majorant"]["mode"] == "paper"


def test_timing_optional(tmp_path):
    out = tmp_path / "out"
    main(["run", "--config", str(write_config(tmp_path, record_timing="true", refinements=0)), "--out", str(out)])
    assert "wall_time" in json.loads((out / "report.json").read_text())["meshes"][0]


@pytest.mark.parametrize(
    "override",
    [{"case": "MS9"}, {"n": 1}, {"mode": "loose"}, {"flux_strategy": "magic"}, {"unknown_key": 3}, {"n": "four"}],
)
def test_invalid_config(tmp_path, capsys, override):
    out = tmp_path / "out"
    assert main(["run", "--config", str(write_config(tmp_path, **override)), "--out", str(out)]) == 2
    assert "configuration error" in capsys.readouterr().err
    assert not out.exists()


def test_missing_config_file(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.ini")]) == 2


def test_convergence_csv(tmp_path, capsys):
    out = tmp_path / "out"
    cfg = write_config(tmp_path, refinements=2, flux_strategy="minimize", flux_iterations=20)
    assert main(["convergence", "--config", str(cfg), "--out", str(out)]) == 0
    rows = list(csv.reader((out / "convergence.csv").open()))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert [r[0] for r in rows[1:]] == ["4", "8", "16", "rate"]
    assert float(rows[-1][CSV_COLUMNS.index("error_diffusion")]) == pytest.approx(2.0, abs=0.2)
    assert capsys.readouterr().out.startswith("n,h,cells")


def test_convergence_needs_three_levels(tmp_path):
    assert main(["convergence", "--config", str(write_config(tmp_path)), "--out", str(tmp_path / "o")]) == 2


def test_check_command(capsys):
    assert main(["check"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 7 and all(line.startswith("PASS") for line in lines)


def test_config_roundtrip(tmp_path):
    cfg = ExperimentConfig.from_file(write_config(tmp_path, betas="2.0, 0.5", beta_strategy="fixed"))
    assert cfg.betas == (2.0, 0.5)
    assert cfg.to_dict()["betas"] == [2.0, 0.5]
    with pytest.raises(ConfigError):
        ExperimentConfig(betas=(1.0, -1.0))

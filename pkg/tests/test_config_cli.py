"""Config parsing, batch execution, CLI verbs and exit codes."""

import numpy as np
import pytest

from malfilter import ScenarioConfig, load_config, run_cell, write_config
from malfilter.cli import main
from malfilter.model import ValidationError


def write(path, text):
    path.write_text(text)
    return str(path)


def test_config_roundtrip(tmp_path):
    cfg = ScenarioConfig(attacks=["A2", "A3"], responses=["R1", "R2"],
                         seeds=[1, 2, 3], cost_ratio=200.0, horizon=10.0)
    path = tmp_path / "cfg.yaml"
    write_config(cfg, path)
    assert load_config(path) == cfg


def test_config_defaults(tmp_path):
    cfg = load_config(write(tmp_path / "c.yaml", "attacks: [A2]\n"))
    assert cfg.responses == ["R2"]
    assert cfg.cost_ratio == 100.0
    assert cfg.b == 0.5
    assert cfg.g == pytest.approx(1.0)  # 1.8 * 0.5 + 0.1


def test_config_aliases(tmp_path):
    cfg = load_config(write(tmp_path / "c.yaml",
                            "attack: A3\nresponse: R4\nseed: 7\n"))
    assert cfg.attacks == ["A3"]
    assert cfg.responses == ["R4"]
    assert cfg.seeds == [7]
    cfg = load_config(write(tmp_path / "d.yaml",
                            "simulator: packet\nscenarios: [S1, S2]\nmode: hinf\n"))
    assert cfg.attacks == ["S1", "S2"]
    assert cfg.responses == ["hinf"]


def test_config_unknown_field_rejected(tmp_path):
    with pytest.raises(ValidationError, match="unknown config field"):
        load_config(write(tmp_path / "c.yaml", "atacks: [A2]\n"))


def test_config_b_zero_names_field(tmp_path):
    with pytest.raises(ValidationError, match="b:"):
        load_config(write(tmp_path / "c.yaml", "b: 0\n"))


def test_config_bad_entries_rejected(tmp_path):
    with pytest.raises(ValidationError, match="attacks"):
        load_config(write(tmp_path / "c.yaml", "attacks: [A9]\n"))
    with pytest.raises(ValidationError, match="responses"):
        load_config(write(tmp_path / "c.yaml", "responses: [R9]\n"))
    with pytest.raises(ValidationError, match="seeds"):
        load_config(write(tmp_path / "c.yaml", "seeds: [1.5]\n"))


def test_run_cell_writes_trace(tmp_path):
    cfg = ScenarioConfig(attacks=["A2"], responses=["R3"], seeds=[1],
                         horizon=2.0)
    path = tmp_path / "t.csv"
    L, z_sq, gamma_star = run_cell(cfg, "A2", "R3", 1, path)
    assert path.exists()
    assert np.isfinite(L) and z_sq >= 0.0


def test_cli_synthesize(tmp_path, capsys):
    cfg = write(tmp_path / "c.yaml", "attacks: [A2]\n")
    out = tmp_path / "gains.txt"
    assert main(["synthesize", "--config", cfg, "--output", str(out)]) == 0
    assert out.exists()
    text = capsys.readouterr().out
    assert "gamma_star" in text


def test_cli_run_and_exit_codes(tmp_path):
    cfg = write(tmp_path / "c.yaml",
                "attacks: [A2]\nresponses: [R3]\nhorizon: 2.0\n"
                f"output_dir: {tmp_path / 'out'}\n")
    assert main(["run", "--config", cfg, "--seed", "5"]) == 0
    assert (tmp_path / "out" / "trace_A2_R3_seed5.csv").exists()


def test_cli_missing_config_is_validation_error(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_cli_bad_config_is_validation_error(tmp_path):
    cfg = write(tmp_path / "c.yaml", "b: 0\n")
    assert main(["run", "--config", cfg]) == 2


def test_cli_infeasible_synthesis_is_exit_3(tmp_path):
    # a cost ratio this extreme pushes the achievable level beyond the
    # search cap, so synthesis must report infeasibility
    cfg = write(tmp_path / "c.yaml", "cost_ratio: 1.0e+14\n")
    assert main(["synthesize", "--config", cfg,
                 "--output", str(tmp_path / "g.txt")]) == 3


def test_cli_batch_summary(tmp_path):
    cfg = write(tmp_path / "c.yaml",
                "attacks: [A2]\nresponses: [R1, R3]\nseeds: [1, 2]\n"
                f"horizon: 2.0\noutput_dir: {tmp_path / 'out'}\n")
    assert main(["batch", "--config", cfg]) == 0
    summary = tmp_path / "out" / "summary.csv"
    lines = summary.read_text().splitlines()
    assert lines[0] == "attack,response,L,z_sq_integral,gamma_star"
    assert len(lines) == 3
    for attack, response in (("A2", "R1"), ("A2", "R3")):
        assert (tmp_path / "out" / f"trace_{attack}_{response}_seed1.csv").exists()
        assert (tmp_path / "out" / f"trace_{attack}_{response}_seed2.csv").exists()


def test_cli_figures(tmp_path):
    cfg = write(tmp_path / "c.yaml",
                "attacks: [A2]\nresponses: [R1]\nhorizon: 2.0\n"
                f"output_dir: {tmp_path / 'out'}\n")
    assert main(["figures", "--config", cfg, "--nodes", "1,2",
                 "--quantities", "x,u"]) == 0
    fx = tmp_path / "out" / "fig_A2_R1_x.csv"
    assert fx.exists()
    assert fx.read_text().splitlines()[0] == "time,x_1,x_2"


def test_rerun_byte_identical(tmp_path):
    cfg = write(tmp_path / "c.yaml",
                "attacks: [A2]\nresponses: [R3]\nseeds: [3]\nhorizon: 2.0\n"
                f"output_dir: {tmp_path / 'out'}\n")
    assert main(["batch", "--config", cfg]) == 0
    trace1 = (tmp_path / "out" / "trace_A2_R3_seed3.csv").read_bytes()
    summary1 = (tmp_path / "out" / "summary.csv").read_bytes()
    assert main(["batch", "--config", cfg]) == 0
    assert (tmp_path / "out" / "trace_A2_R3_seed3.csv").read_bytes() == trace1
    assert (tmp_path / "out" / "summary.csv").read_bytes() == summary1

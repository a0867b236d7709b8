import json
import os

import pytest

from nlsgpc.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION, main
from nlsgpc.config import PRESETS, ConfigError, RunConfig, load_config, parse_config
from nlsgpc.experiments import predict_next


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_config_materializes_defaults(tmp_path):
    p = write(tmp_path, "[experiment]\nkind = single\n[physics]\nepsilon = 0.5\nvelocity = 0.003\n")
    cfg = load_config(p)
    assert cfg.physics.epsilon == 0.5 and cfg.physics.velocity == 0.003
    assert cfg.grid.half_width == 40.0 and cfg.grid.n_points == 2048
    assert cfg.physics.amplitude == 1.0 and cfg.physics.phase == 0.0
    assert cfg.physics.x0 == -20.0 and cfg.solver.splitting == "strang"


def test_non_power_of_two_rejected(tmp_path):
    p = write(tmp_path, "[physics]\nvelocity = 0.1\n[grid]\nn_points = 1000\n")
    with pytest.raises(ConfigError, match="power of two"):
        load_config(p)


def test_table_preset():
    cfg = load_config(preset="table1-eps0.3")
    assert cfg.physics.epsilon == 0.3
    assert cfg.chaos.family == "legendre"
    assert cfg.chaos.n_list == (2, 4, 8, 12, 16, 20, 24)
    assert cfg.kind == "convergence"


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_all_presets_validate(name):
    load_config(preset=name)


def test_unknown_key_and_section(tmp_path):
    with pytest.raises(ConfigError, match="velocty"):
        load_config(write(tmp_path, "[physics]\nvelocty = 0.1\n"))
    with pytest.raises(ConfigError, match="phisics"):
        load_config(write(tmp_path, "[phisics]\nvelocity = 0.1\n"))


def test_parse_error_reports_line(tmp_path):
    with pytest.raises(ConfigError, match="line 2"):
        load_config(write(tmp_path, "[physics]\nthis is not a pair\n"))
    with pytest.raises(ConfigError):
        parse_config("velocity = 1\n")


def test_bad_value_names_key():
    with pytest.raises(ConfigError, match="dt"):
        load_config(overrides={"solver.dt": "fast", "physics.velocity": "0.1"})


def test_missing_file():
    with pytest.raises(ConfigError, match="does not exist"):
        load_config("/nonexistent/run.ini")


def test_layering_order(tmp_path):
    p = write(tmp_path, "[physics]\nepsilon = 0.7\n")
    cfg = load_config(p, preset="table1-eps0.3", overrides={"chaos.nodes": "5"})
    assert cfg.physics.epsilon == 0.7 and cfg.chaos.nodes == 5
    assert cfg.chaos.v_a == 0.0015


def test_ini_round_trip():
    cfg = load_config(preset="hermite-eps0.3")
    again = parse_config(cfg.to_ini())
    assert again == cfg


def test_kind_specific_requirements():
    with pytest.raises(ConfigError, match="v_a"):
        load_config(kind="critical")
    with pytest.raises(ConfigError, match="v_lo"):
        load_config(kind="oracle")
    with pytest.raises(ConfigError, match="threshold"):
        load_config(kind="critical", overrides={"model.kind": "step", "chaos.v_a": "0.1",
                                                "chaos.v_b": "0.2"})


def test_extrapolation_seed():
    assert predict_next([], 1.0) is None
    assert predict_next([(1.0, 0.02)], 2.0) == 0.02
    # power law V = 0.01 eps^2 is reproduced exactly
    hist = [(1.0, 0.01), (2.0, 0.04)]
    assert predict_next(hist, 3.0) == pytest.approx(0.09)


def _run(tmp_path, *args):
    return main(list(args))


def test_cli_single_free_soliton(tmp_path, capsys):
    out = tmp_path / "single"
    code = main(["single", "--set", "physics.velocity=0.5", "--set", "solver.checkpoint_stride=4000",
                 "--out", str(out), "--trajectory"])
    assert code == EXIT_OK
    rec = json.loads((out / "results.json").read_text())
    assert rec["schema_version"] == 1
    assert rec["records"][0]["outcome"] == "transmitted"
    header = (out / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,x,density"
    assert (out / "effective_config.ini").exists()
    assert load_config(out / "effective_config.ini").physics.velocity == 0.5


def test_cli_validation_exit_code(tmp_path, capsys):
    code = main(["single", "--set", "grid.n_points=1000", "--out", str(tmp_path / "bad")])
    assert code == EXIT_VALIDATION
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError"


def test_cli_numerical_exit_code(tmp_path, capsys):
    out = tmp_path / "nobracket"
    code = main(["oracle", "--set", "model.kind=step", "--set", "model.threshold=0.5",
                 "--set", "oracle.v_lo=0.1", "--set", "oracle.v_hi=0.2", "--out", str(out)])
    assert code == EXIT_NUMERICAL
    rec = json.loads((out / "error.json").read_text())
    assert rec["error"] == "BracketError"


def test_cli_oracle_and_critical_agree(tmp_path):
    common = ["--set", "model.kind=step", "--set", "model.threshold=0.1"]
    a, b = tmp_path / "oracle", tmp_path / "critical"
    assert main(["oracle", *common, "--set", "oracle.v_lo=0.05", "--set", "oracle.v_hi=0.15",
                 "--set", "oracle.tol=1e-5", "--out", str(a)]) == EXIT_OK
    assert main(["critical", *common, "--set", "chaos.v_a=0.05", "--set", "chaos.v_b=0.15",
                 "--set", "chaos.nodes=24", "--out", str(b)]) == EXIT_OK
    va = json.loads((a / "results.json").read_text())["records"][0]["V_c"]
    vb = json.loads((b / "results.json").read_text())["records"][0]["V_c"]
    assert abs(va - 0.1) < 1e-5
    assert abs(va - vb) < 5e-3
    assert (b / "mean_mode.csv").read_text().startswith("x,abs_u0\n")


def test_cli_sweep_writes_pairs(tmp_path):
    out = tmp_path / "sweep"
    code = main(["sweep", "--set", "model.kind=step", "--set", "model.threshold=0.1",
                 "--set", "sweep.epsilons=0.5, 1.0", "--set", "sweep.scan_min=0.01",
                 "--set", "sweep.scan_max=1.0", "--out", str(out)])
    assert code == EXIT_OK
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == "epsilon,V_c" and len(lines) == 3
    rec = json.loads((out / "results.json").read_text())["records"]
    assert rec[0]["bracket_source"] == "scan"
    assert rec[1]["bracket_source"] == "extrapolated"


def test_cli_presets_listing(capsys):
    assert main(["presets"]) == EXIT_OK
    assert "table1-eps0.3" in capsys.readouterr().out


@pytest.mark.slow
def test_cli_sweep_is_monotone(tmp_path):
    out = tmp_path / "fig6"
    assert main(["sweep", "--preset", "fig6-sweep", "--workers", str(os.cpu_count()),
                 "--out", str(out)]) == EXIT_OK
    rec = json.loads((out / "results.json").read_text())["records"]
    vc = [r["V_c"] for r in rec]
    assert all(b > a for a, b in zip(vc, vc[1:]))

import json
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import pytest

from orchestrator.config import CheckBoundsConfig, RunManifest, Settings, load_config
from orchestrator.main import EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, main
from orchestrator.orchestrator import Orchestrator
from orchestrator.plotting import loglog_figure, write_loglog_svg
from verifiers.errors import ConfigError
from verifiers.mest import MEstRecord, MEstReport

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(autouse=True)
def quick_env(monkeypatch):
    monkeypatch.setenv("UNIFORM_MC_DRAWS", "20000")
    monkeypatch.setenv("UNIFORM_THREADS", "2")
    monkeypatch.setenv("UNIFORM_LOG_LEVEL", "WARNING")


def _write_config(path: Path, payload: dict) -> str:
    path.write_text(json.dumps(payload))
    return str(path)


def test_settings_from_env(monkeypatch):
    monkeypatch.setenv("UNIFORM_OUT_DIR", "elsewhere")
    monkeypatch.setenv("UNIFORM_SEED", "5")
    settings = Settings.from_env()
    assert settings.out_dir == "elsewhere"
    assert settings.seed == 5
    assert settings.threads == 2
    assert settings.mc_draws == 20000
    assert settings.log_level == "WARNING"


def test_settings_from_env_rejects_garbage(monkeypatch):
    monkeypatch.setenv("UNIFORM_THREADS", "many")
    with pytest.raises(ConfigError):
        Settings.from_env()


def test_load_config_defaults_and_errors(tmp_path):
    config = load_config("check-bounds")
    assert isinstance(config, CheckBoundsConfig)
    assert config.source == "random"
    with pytest.raises(ConfigError):
        load_config("no-such-command")
    with pytest.raises(ConfigError):
        load_config("check-bounds", tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config("check-bounds", broken)
    with pytest.raises(ConfigError):
        load_config("check-bounds", _write_config(tmp_path / "extra.json", {"surprise": 1}))
    with pytest.raises(ConfigError):
        load_config("rates", _write_config(tmp_path / "rates.json", {"k": 2}))
    listed = tmp_path / "list.json"
    listed.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config("net", listed)


def test_manifest_written_atomically(tmp_path):
    target = RunManifest(command="net", seed=3, outputs=["a.csv"], passed=True).write(tmp_path / "run")
    assert target.name == "manifest.json"
    assert json.loads(target.read_text())["seed"] == 3
    assert [p.name for p in target.parent.iterdir()] == ["manifest.json"]


def test_appendix_verify(tmp_path):
    assert main(["appendix-verify", "--config", str(CONFIGS / "appendix.json"), "--out", str(tmp_path)]) == EXIT_PASS
    frame = pd.read_csv(tmp_path / "constants.csv")
    omega = frame[(frame["quantity"] == "Omega_n") & (frame["parameter"] == 1.0)]
    assert (omega["value"] == 80.0).all()
    sums = pd.read_csv(tmp_path / "constants_sums.csv")
    assert sums["holds"].all()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "appendix-verify"
    assert manifest["passed"] is True


def test_appendix_verify_with_defaults(tmp_path):
    assert main(["appendix-verify", "--out", str(tmp_path)]) == EXIT_PASS
    frame = pd.read_csv(tmp_path / "constants.csv")
    omega = frame[(frame["quantity"] == "Omega_n") & (frame["parameter"] == 1.0)]
    assert len(omega) > 0
    np.testing.assert_allclose(omega["value"], 80.0)


@pytest.mark.parametrize("name", ["check_bounds_identical.json", "check_bounds_silent.json"])
def test_check_bounds_configs(tmp_path, name):
    assert main(["check-bounds", "--config", str(CONFIGS / name), "--out", str(tmp_path)]) == EXIT_PASS
    frame = pd.read_csv(tmp_path / "check-bounds.csv")
    assert set(frame["rep"]) == set(range(5))
    assert "precondition" in frame.columns


def test_seed_flag_overrides_config(tmp_path):
    main(["check-bounds", "--config", str(CONFIGS / "check_bounds_identical.json"), "--out", str(tmp_path), "--seed", "99"])
    assert json.loads((tmp_path / "manifest.json").read_text())["seed"] == 99


def test_check_bounds_from_csv(tmp_path):
    from data_ingestion import save_dataset_csv
    from verifiers.data_gen import IndepSpec, gen_independent

    generator = {"type": "independent", "p": 4, "design": {"kind": "gaussian", "rho": 0.2}}
    d = gen_independent(IndepSpec(p=4, design={"kind": "gaussian", "rho": 0.2}), 500, 1, "csv")
    data_path = save_dataset_csv(d, tmp_path / "data.csv")
    config = _write_config(tmp_path / "cfg.json", {"source": "csv", "p": 4, "k": 2, "generator": generator, "data_path": str(data_path)})
    assert main(["check-bounds", "--config", config, "--out", str(tmp_path / "out")]) == EXIT_PASS


def test_config_errors_exit_two(tmp_path):
    assert main(["check-bounds", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == EXIT_CONFIG
    config = _write_config(tmp_path / "sample.json", {"source": "sample", "generator": {"type": "independent", "p": 4}})
    assert main(["check-bounds", "--config", config, "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["no-such-command"]) == EXIT_CONFIG
    assert not (tmp_path / "manifest.json").exists()


def test_orchestrator_failure_dict(tmp_path):
    result = Orchestrator(Settings.from_env()).run("net", str(tmp_path / "missing.json"), out=str(tmp_path))
    assert result["success"] is False
    assert result["kind"] == "ConfigError"


def test_rates_smoke(tmp_path):
    assert main(["rates", "--config", str(CONFIGS / "rates_smoke.json"), "--out", str(tmp_path)]) == EXIT_PASS
    rows = pd.read_csv(tmp_path / "rates.csv")
    assert sorted(rows["n"].unique()) == [250, 500, 1000]
    assert len(rows) == 15
    assert "<svg" in (tmp_path / "rates.svg").read_text()


def test_rates_default_windows():
    config = load_config("rates", CONFIGS / "rates_independent.json")
    assert config.slope_windows == {"sup_l2_err": (-0.6, -0.4), "sup_rep_err": (-1.15, -0.85)}
    smoke = load_config("rates", CONFIGS / "rates_smoke.json")
    assert smoke.slope_windows == {}


def test_rates_fails_outside_slope_window(tmp_path):
    config = _write_config(tmp_path / "rates.json", {
        "generator": {"type": "independent", "p": 4},
        "n_grid": [200, 400],
        "k": 1,
        "reps": 3,
        "seed": 2,
        "slope_windows": {"sup_l2_err": [5.0, 6.0]},
    })
    result = Orchestrator(Settings.from_env()).run("rates", config, out=str(tmp_path / "out"))
    assert result["success"]
    assert result["passed"] is False
    slopes = pd.read_csv(tmp_path / "out" / "rates_slopes.csv")
    assert not slopes.set_index("quantity").loc["sup_l2_err", "within"]
    assert main(["rates", "--config", config, "--out", str(tmp_path / "cli")]) == EXIT_FAIL


def test_tailcheck_writes_tails_csv(tmp_path):
    config = _write_config(tmp_path / "tails.json", {
        "experiment": "max-mean",
        "generator": {"type": "independent", "p": 10, "design": {"kind": "gaussian"}},
        "n_grid": [100],
        "reps": 2000,
        "t_grid": [1.0, 3.0],
        "diagnostics": False,
        "seed": 4,
    })
    assert main(["tailcheck", "--config", config, "--out", str(tmp_path)]) == EXIT_PASS
    assert len(pd.read_csv(tmp_path / "tails.csv")) > 0
    assert json.loads((tmp_path / "manifest.json").read_text())["outputs"] == [str(tmp_path / "tails.csv")]


def _failed_event_report(*args, **kwargs):
    record = MEstRecord(model="{0}", status="not_applicable", event=False)
    return MEstReport(loss="squared", k=1, n=50, records=[record])


@pytest.mark.parametrize("require_event, expected", [(True, EXIT_FAIL), (False, EXIT_PASS)])
def test_mest_exit_code_follows_event(tmp_path, monkeypatch, require_event, expected):
    monkeypatch.setattr("orchestrator.orchestrator.check_model_class", _failed_event_report)
    config = _write_config(tmp_path / "mest.json", {
        "generator": {"type": "independent", "p": 3},
        "loss": "squared",
        "n": 50,
        "k": 1,
        "seed": 5,
        "require_event": require_event,
    })
    assert main(["mest", "--config", config, "--out", str(tmp_path)]) == expected
    assert (tmp_path / "mest.csv").exists()


def test_depnorm_memoryless_process(tmp_path):
    assert main(["depnorm", "--config", str(CONFIGS / "depnorm_independent.json"), "--out", str(tmp_path)]) == EXIT_PASS
    deltas = pd.read_csv(tmp_path / "depnorm.csv")
    beyond = deltas[deltas["s"] >= 1]
    assert len(beyond) > 0
    assert (beyond["delta"] == 0.0).all()
    assert (deltas[deltas["s"] == 0]["delta"] > 0.0).all()


def test_depnorm_rejects_independent_generator(tmp_path):
    config = _write_config(tmp_path / "dep.json", {"generator": {"type": "independent", "p": 3}})
    assert main(["depnorm", "--config", config, "--out", str(tmp_path)]) == EXIT_CONFIG


def test_net_command(tmp_path):
    config = _write_config(tmp_path / "net.json", {"p": 4, "k": 1, "samples": 2000, "trials": 20, "save_points": True, "seed": 3})
    assert main(["net", "--config", config, "--out", str(tmp_path / "out")]) == EXIT_PASS
    summary = pd.read_csv(tmp_path / "out" / "net.csv")
    assert list(summary["eps"]) == [0.5, 0.25]
    assert (summary["discretization_failures"] == 0).all()
    assert (tmp_path / "out" / "net_points_eps0.5.csv").exists()


def test_loglog_figure():
    fig = loglog_figure({"err": ([100, 1000], [0.1, 0.01])}, {"err": (-1.0, 2.3)}, title="rates")
    ax = fig.axes[0]
    assert ax.get_xscale() == "log"
    assert len(ax.lines) == 2
    assert ax.get_title() == "rates"
    plt.close(fig)


def test_svg_written_when_every_point_is_dropped(tmp_path):
    path = write_loglog_svg(tmp_path / "plots" / "x.svg", {"err": ([0, 10], [1.0, 0.0])})
    assert "<svg" in path.read_text()

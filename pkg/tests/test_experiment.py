import json

import pytest

from msdn.data import synth_xor
from msdn.experiment import (
    DEFAULT_GRID,
    ConfigError,
    ExperimentConfig,
    grid_points,
    make_estimator,
    run_benchmark,
    select_and_fit,
)


def test_default_grid_is_the_reference_grid():
    cfg = ExperimentConfig()
    assert cfg.msdn_grid == DEFAULT_GRID
    assert len(grid_points(cfg.msdn_grid)) == 10 * 3 * 6
    assert cfg.selection_metric == "ema" and cfg.repeats == 5 and cfg.train_frac == 0.75


def test_config_file_with_overrides(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"models": ["br"], "repeats": 2, "datasets": [{"path": "x.mlc"}]}))
    cfg = ExperimentConfig.from_file(path, repeats=3, seed=None)
    assert cfg.models == ["br"] and cfg.repeats == 3 and cfg.seed == 0
    assert json.loads(cfg.to_json())["repeats"] == 3


def test_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"modles": ["br"]}))
    with pytest.raises(ConfigError, match="modles"):
        ExperimentConfig.from_file(path)


@pytest.mark.parametrize("change", [
    {"models": []},
    {"models": ["svm"]},
    {"datasets": []},
    {"repeats": 0},
    {"msdn_grid": {"dropout": [0.0, 1.0]}},
    {"msdn_grid": {"learning_rate": []}},
    {"base": {"learning_rate": -1.0}},
    {"selection_metric": "hamming"},
])
def test_validation_errors(change):
    cfg = ExperimentConfig(datasets=[{"synth": {"N": 20, "m": 2, "d": 2}}])
    for k, v in change.items():
        setattr(cfg, k, v)
    with pytest.raises(ConfigError):
        cfg.validate()


def test_make_estimator_passes_seed_and_settings():
    cfg = ExperimentConfig(msdn={"hidden_dim": 16}, base={"interactions": True}, budget_seconds=5.0)
    est = make_estimator("msdn", cfg, {"dropout": 0.25}, seed=7)
    assert (est.hidden_dim, est.dropout, est.random_state, est.budget_seconds) == (16, 0.25, 7, 5.0)
    cc = make_estimator("cc", cfg, {"learning_rate": 0.1}, seed=3)
    assert cc.base_estimator.interactions and cc.base_estimator.learning_rate == 0.1
    assert cc.base_estimator.random_state == 3


def test_grid_search_is_deterministic():
    ds = synth_xor(200, 4, 3, 0.05, seed=2)
    cfg = ExperimentConfig(base={"interactions": True}, base_grid={"learning_rate": [0.001, 0.05]})
    est_a, hp_a = select_and_fit("cc", ds.X, ds.Y, cfg, seed=1, stream=(0,))
    est_b, hp_b = select_and_fit("cc", ds.X, ds.Y, cfg, seed=1, stream=(0,))
    assert hp_a == hp_b == {"learning_rate": 0.05}
    assert (est_a.predict(ds.X) == est_b.predict(ds.X)).all()


def test_parallel_grid_search_matches_serial():
    ds = synth_xor(120, 4, 2, 0.05, seed=2)
    grid = {"learning_rate": [0.005, 0.01], "dropout": [0.0, 0.25]}
    fixed = {"hidden_dim": 6, "n_kernels": 3, "max_epochs": 5}
    serial = ExperimentConfig(msdn=fixed, msdn_grid=grid, jobs=1)
    parallel = ExperimentConfig(msdn=fixed, msdn_grid=grid, jobs=2)
    a, hp_a = select_and_fit("msdn", ds.X, ds.Y, serial, seed=4)
    b, hp_b = select_and_fit("msdn", ds.X, ds.Y, parallel, seed=4)
    assert hp_a == hp_b
    assert (a.network_.flat_params() == b.network_.flat_params()).all()


def test_failed_cells_are_reported_not_aggregated(tmp_path):
    cfg = ExperimentConfig(datasets=[{"synth": {"N": 60, "m": 4, "d": 3, "noise": 0.0, "seed": 0}}],
                           models=["br", "pcc"], repeats=2, pcc_max_labels=2, save_models=False,
                           output=str(tmp_path))
    rep = run_benchmark(cfg)
    assert [f[1] for f in rep.failures] == ["pcc", "pcc"]
    assert "ExponentialCostError" in rep.failures[0][3]
    assert {r.model for r in rep.records} == {"br"}

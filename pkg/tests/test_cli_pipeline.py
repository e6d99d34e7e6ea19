import pytest

from cli.cache import read_json
from cli.config import load_config, replace_out_dir
from cli.main import exit_code
from cli.pipeline import Pipeline, StageError, reproduce_command, rho_series, run_pipeline
from cli.sweep import sweep
from trajcore.errors import (
    ArgumentError, ConfigError, FormatError, InternalError, RefusalError, TrainingError,
)

TINY = [
    "eval.n_demos=4", "eval.n_id=3", "eval.n_ood=3", "indicator.epochs=5", "indicator.heldout=2",
    "indicator.hidden_dim=4", "policy.vision_hidden=8", "policy.proprio_hidden=4",
    "policy.head_hidden=8", "train.epochs=2", "train.batch_size=16", "run.seeds=0",
    "run.modes=vision,concat,gap",
]


@pytest.fixture
def cache_dir(tmp_path, monkeypatch):
    path = tmp_path / "cache"
    monkeypatch.setenv("GAP_CACHE_DIR", str(path))
    return path


def test_dry_run_touches_nothing(tmp_path, cache_dir):
    cfg = replace_out_dir(load_config(), tmp_path / "out")
    plan = run_pipeline(cfg, dry_run=True)
    assert not cache_dir.exists()
    assert not (tmp_path / "out").exists()
    # demos, segment, indicator, then policy + evaluate for six modes
    assert len(plan) == 5 * (3 + 2 * 6)
    assert [s.name for s in plan[:5]] == ["demos", "segment", "indicator", "policy", "evaluate"]
    assert not any(s.cached for s in plan)
    assert all(s.artifact.parent.parent == cache_dir for s in plan)


def test_plan_optional_stages(tmp_path, cache_dir):
    cfg = load_config(None, ["run.seeds=0", "run.modes=vision,concat",
                             "eval.intervention=true", "eval.probe=true"])
    names = [(s.name, s.mode) for s in Pipeline(cfg).plan()]
    assert ("indicator", None) not in names
    assert ("intervene", "concat") in names and ("intervene", "gap") not in names
    assert ("probe", "untrained") in names and ("probe", "concat") in names
    assert ("probe", "gap") not in names


def test_reproduce_command_lists_changed_values():
    cfg = load_config(None, ["train.lam=0.5"])
    command = reproduce_command(cfg, 3, "gap")
    assert command.startswith("python -m cli run")
    assert "--set train.lam=0.5" in command
    assert "--set run.seeds=3" in command and "--set run.modes=gap" in command
    assert "segment.alpha" not in command


def test_stage_failures_carry_a_reproduce_command(cache_dir):
    pipeline = Pipeline(load_config())

    def fail():
        raise TrainingError("loss diverged", epoch=7)

    with pytest.raises(StageError) as info:
        pipeline._guard("policy", 2, "gap", fail)
    assert info.value.stage == "policy"
    assert isinstance(info.value.cause, TrainingError)
    assert "run.seeds=2" in info.value.command
    assert exit_code(info.value) == 4


def test_rho_series_needs_its_inputs(tiny_dataset):
    cfg = load_config()
    with pytest.raises(ConfigError):
        rho_series(cfg, "gap", tiny_dataset, None, None)
    with pytest.raises(ConfigError):
        rho_series(cfg, "smooth", tiny_dataset, None, None)
    assert rho_series(cfg, "concat", tiny_dataset, None, None) is None
    fixed = rho_series(cfg, "fixed", tiny_dataset, [(2,), (3,), ()], None)
    assert [len(s) for s in fixed] == [6, 8, 7]


@pytest.mark.parametrize("error, code", [
    (ConfigError("x"), 2), (ArgumentError("x"), 2), (FormatError("x", "f", 3), 3),
    (TrainingError("x", 1), 4), (InternalError("x", 0), 5), (RefusalError("x"), 5),
    (KeyError("x"), 1),
])
def test_exit_codes(error, code):
    assert exit_code(error) == code


def test_sweep_rejects_bad_requests(tmp_path):
    cfg = replace_out_dir(load_config(), tmp_path)
    with pytest.raises(ConfigError):
        sweep(cfg, "dropout", [0.1])
    with pytest.raises(ConfigError):
        sweep(cfg, "lambda", [])


@pytest.mark.slow
def test_tiny_end_to_end_run(tmp_path, cache_dir):
    cfg = replace_out_dir(load_config(None, TINY + ["eval.intervention=true",
                                                    "eval.intervene_rollouts=1",
                                                    "eval.stride=40", "eval.probe=true",
                                                    "eval.probe_epochs=1"]),
                          tmp_path / "out")
    rep = run_pipeline(cfg)
    out = tmp_path / "out"
    assert rep.missing == []
    assert read_json(out / "plan.json")["modes"] == ["vision", "concat", "gap"]
    assert (out / "config.ini").exists()
    for mode in cfg.modes:
        assert (out / "cells" / mode / "seed0" / "episodes.jsonl").exists()
    for name in ("success", "ordering", "segmentation", "indicator", "intervention", "probe"):
        assert name in rep.tables
    assert len(rep.tables["success"]) == 3 * 2

    assert all(s.cached for s in Pipeline(cfg).plan())
    again = run_pipeline(cfg)
    assert again.tables["success"].equals(rep.tables["success"])


@pytest.mark.slow
def test_sweep_shares_upstream_stages(tmp_path, cache_dir):
    cfg = replace_out_dir(load_config(None, TINY + ["run.modes=gap"]), tmp_path)
    result = sweep(cfg, "lambda", [0.1, 0.5])
    table = result.tables["sweep"]
    assert sorted(set(table["value"])) == ["0.1", "0.5"]
    assert len(list((cache_dir / "demos").iterdir())) == 1
    assert len(list((cache_dir / "policy").glob("*.ckpt"))) == 2
    assert (tmp_path / "sweep-lambda" / "report" / "sweep.csv").exists()


ACCEPTANCE = ["run.modes=vision,concat,gap", "eval.intervention=true", "eval.probe=true"]


def _clean_run(root):
    with pytest.MonkeyPatch.context() as mp:
        mp.setenv("GAP_CACHE_DIR", str(root / "cache"))
        mp.chdir(root)
        return run_pipeline(load_config(None, ACCEPTANCE))


@pytest.fixture(scope="module")
def default_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("first")
    return root, _clean_run(root)


@pytest.mark.slow
def test_ood_ordering_replicates(default_run):
    _, rep = default_run
    assert rep.missing == []
    ood = rep.tables["ordering"].set_index("dist").loc["ood"]
    assert bool(ood["mean_order_holds"])
    assert ood["gap_minus_concat"] >= 0.10
    assert ood["gap_minus_vision"] >= 0.0
    assert ood["n_seeds"] == 5
    assert ood["seeds_order_holds"] >= 4


@pytest.mark.slow
def test_transition_windows_carry_the_intervention_drop(default_run):
    _, rep = default_run
    drops = rep.tables["intervention"].groupby("alt")[["transition_drop",
                                                       "consistent_drop"]].mean()
    concat, gap = drops.loc["concat"], drops.loc["gap"]
    assert concat["transition_drop"] - concat["consistent_drop"] >= 0.05
    assert gap["transition_drop"] < concat["transition_drop"]


@pytest.mark.slow
def test_frozen_gap_vision_features_transfer_better_out_of_distribution(default_run):
    _, rep = default_run
    probe = rep.tables["probe"].set_index(["source", "dist"])["mean"]
    assert probe.loc[("gap", "ood")] > probe.loc[("concat", "ood")]


@pytest.mark.slow
def test_clean_reruns_write_identical_reports(default_run, tmp_path):
    first, _ = default_run
    _clean_run(tmp_path)
    first_report = first / "runs" / "default" / "report"
    second_report = tmp_path / "runs" / "default" / "report"
    names = sorted(p.name for p in first_report.iterdir())
    assert names == sorted(p.name for p in second_report.iterdir())
    assert "report.json" in names
    for name in names:
        assert (first_report / name).read_bytes() == (second_report / name).read_bytes(), name

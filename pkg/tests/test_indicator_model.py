import numpy as np
import pytest

from indicator.evaluation import transition_auc
from indicator.labels import build_labels
from indicator.model import (
    IndicatorHyper, IndicatorModel, load_indicator, predict_rho, save_indicator,
    train_indicator,
)
from nnkit.checkpoint import save_checkpoint
from nnkit.rng import make_rng
from segment.noise import inject_index_noise
from tests.conftest import random_trajectory
from trajcore.errors import ArgumentError, FormatError
from trajcore.motion import delta_matrix
from trajcore.types import Trajectory

QUICK = IndicatorHyper(epochs=5, lr=1e-2, hidden_dim=6, seed=3, batch_size=4)


def _pairs(trajectories, indices):
    return [(delta_matrix(t), build_labels(i, len(t))) for t, i in zip(trajectories, indices)]


def two_regime(rng, n=20):
    """Constant velocity that turns to a new direction at n // 2."""
    turn = n // 2
    v1, v2 = rng.normal(size=2), rng.normal(size=2)
    steps = np.vstack([np.tile(v1, (turn, 1)), np.tile(v2, (n - 1 - turn, 1))])
    positions = np.vstack([np.zeros(2), np.cumsum(steps, axis=0)])
    traj = Trajectory(positions, None, np.full(n, 0.5), np.zeros((n, 3)), np.zeros((n, 2)))
    return traj, (turn,)


def test_training_is_bit_reproducible(rng):
    trajectories = [random_trajectory(rng, 12) for _ in range(6)]
    data = _pairs(trajectories, [(4,), (6,), (), (3, 8), (5,), (9,)])
    first = train_indicator(data, QUICK)
    second = train_indicator(data, QUICK)
    for key, value in first.group.params.items():
        np.testing.assert_array_equal(value, second.group.params[key])
    assert first.loss_curve == second.loss_curve
    assert len(first.loss_curve) == QUICK.epochs


def test_all_negative_targets_drive_rho_down(rng):
    trajectories = [random_trajectory(rng, 10) for _ in range(4)]
    data = _pairs(trajectories, [()] * 4)
    model = train_indicator(data, IndicatorHyper(epochs=200, lr=2e-2, hidden_dim=8, seed=0))
    for traj in trajectories:
        assert predict_rho(model, traj).rho.max() < 0.1


def test_prediction_shape_and_range(rng):
    model = IndicatorModel(3, 5, rng)
    traj = random_trajectory(rng, 9)
    series = predict_rho(model, traj)
    assert len(series) == 9
    assert series.source == "learned"
    assert series.rho[0] == series.rho[1]
    assert np.all((series.rho > 0) & (series.rho < 1))


def test_prediction_is_deterministic(rng):
    model = IndicatorModel(3, 5, rng)
    constant = Trajectory(np.ones((7, 2)), None, np.full(7, 0.4), np.zeros((7, 1)),
                          np.zeros((7, 1)))
    np.testing.assert_array_equal(predict_rho(model, constant).rho,
                                  predict_rho(model, constant).rho)


def test_dimension_mismatch(rng):
    model = IndicatorModel(3, 5, rng)
    with pytest.raises(ArgumentError):
        predict_rho(model, random_trajectory(rng, 6, dim_theta=3))


def test_training_arguments(rng):
    traj = random_trajectory(rng, 8)
    with pytest.raises(ArgumentError):
        train_indicator([], QUICK)
    with pytest.raises(ArgumentError):
        train_indicator([(delta_matrix(traj), build_labels([3], 9))], QUICK)
    other = random_trajectory(rng, 8, dim_theta=3)
    with pytest.raises(ArgumentError):
        train_indicator(_pairs([traj, other], [(3,), (3,)]), QUICK)


def test_checkpoint_round_trip(tmp_path, rng):
    trajectories = [random_trajectory(rng, 10) for _ in range(3)]
    model = train_indicator(_pairs(trajectories, [(4,), (5,), (6,)]), QUICK)
    path = tmp_path / "indicator.ckpt"
    save_indicator(model, path, {"seed": 3})
    loaded = load_indicator(path)
    assert loaded.loss_curve == model.loss_curve
    for traj in trajectories:
        np.testing.assert_array_equal(predict_rho(loaded, traj).rho, predict_rho(model, traj).rho)


def test_loading_a_foreign_checkpoint(tmp_path, rng):
    model = IndicatorModel(3, 4, rng)
    path = tmp_path / "other.ckpt"
    save_checkpoint([model.group], path, {"kind": "policy"})
    with pytest.raises(FormatError):
        load_indicator(path)


def _synthetic_auc(seed, noise=0.0):
    rng = make_rng(seed, "two-regime")
    train = [two_regime(rng) for _ in range(200)]
    held_out = [two_regime(rng) for _ in range(50)]
    noise_rng = make_rng(seed, "label-noise")
    data = [(delta_matrix(t), build_labels(inject_index_noise(i, noise, noise_rng, len(t)), len(t)))
            for t, i in train]
    model = train_indicator(data, IndicatorHyper(epochs=150, lr=1e-2, hidden_dim=32, seed=seed))
    return transition_auc([predict_rho(model, t).rho for t, _ in held_out],
                          [i for _, i in held_out], window=3)


@pytest.mark.slow
def test_synthetic_transitions_are_detected():
    assert _synthetic_auc(0) >= 0.9


@pytest.mark.slow
def test_label_noise_costs_little_auc():
    clean = np.mean([_synthetic_auc(s) for s in range(5)])
    noisy = np.mean([_synthetic_auc(s, noise=0.5) for s in range(5)])
    assert clean - noisy < 0.1

import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import chisquare

from sim.env import (
    APPROACH, GRASP, PLACE, ROTATE, TRANSPORT, EnvConfig, EnvState, Region, cell_index,
    expert_phase, render, reset, step,
)
from trajcore.errors import ArgumentError, ConfigError


def test_dimensions_per_task(env_cfg, rotate_cfg):
    assert (env_cfg.action_dim, env_cfg.proprio_dim, env_cfg.obs_dim) == (3, 3, 768)
    assert (rotate_cfg.action_dim, rotate_cfg.proprio_dim, rotate_cfg.obs_dim) == (4, 6, 768)
    assert rotate_cfg.schema.dim_theta == 3


def test_reset_is_deterministic(env_cfg):
    first, obs_a = reset(env_cfg, "id", 17)
    second, obs_b = reset(env_cfg, "id", 17)
    assert first == second
    np.testing.assert_array_equal(obs_a.visual, obs_b.visual)
    assert first.phase == APPROACH
    assert not first.held and first.g == 1.0


def test_id_spawns_are_uniform(env_cfg):
    region = env_cfg.object_spawn
    bins = 4
    counts = np.zeros((bins, bins))
    for seed in range(2000):
        x, y = reset(env_cfg, "id", seed)[0].obj
        assert region.contains((x, y))
        i = min(int((x - region.x0) / (region.x1 - region.x0) * bins), bins - 1)
        j = min(int((y - region.y0) / (region.y1 - region.y0) * bins), bins - 1)
        counts[i, j] += 1
    assert chisquare(counts.ravel()).pvalue > 1e-3


def test_ood_spawns_stay_out_of_the_training_region(env_cfg):
    for seed in range(500):
        obj = reset(env_cfg, "ood", seed)[0].obj
        assert env_cfg.ood_spawn.contains(obj)
        assert not env_cfg.object_spawn.contains(obj)


def test_proprio_carries_no_object_information(env_cfg):
    id_state, id_obs = reset(env_cfg, "id", 3)
    ood_state, ood_obs = reset(env_cfg, "ood", 3)
    assert not np.array_equal(id_state.obj, ood_state.obj)
    np.testing.assert_array_equal(id_obs.proprio.as_vector(), ood_obs.proprio.as_vector())


def test_overlapping_regions_are_rejected():
    with pytest.raises(ConfigError):
        EnvConfig(object_spawn=Region(0.2, 0.6, 0.2, 0.6), ood_spawn=Region(0.5, 0.9, 0.5, 0.9))
    with pytest.raises(ConfigError):
        EnvConfig(task="stack")


def test_zero_action_keeps_proprio(env_cfg):
    state, _ = reset(env_cfg, "id", 0)
    after, _, done, success = step(state, np.zeros(3), env_cfg)
    np.testing.assert_array_equal(after.p, state.p)
    assert after.g == state.g
    assert after.steps == 1 and after.rest == 1
    assert not done and not success


def test_closing_far_from_object_grasps_nothing(env_cfg):
    state, _ = reset(env_cfg, "id", 0)
    after, _, _, _ = step(state, [0.0, 0.0, -1.0], env_cfg)
    assert after.g == 0.0
    assert not after.held
    np.testing.assert_array_equal(after.obj, state.obj)


def test_step_clamps_to_workspace(env_cfg):
    state, _ = reset(env_cfg, "id", 0)
    after, _, _, _ = step(state, [-10.0, -10.0, 5.0], env_cfg)
    np.testing.assert_array_equal(after.p, [0.0, 0.0])
    assert after.g == 1.0


def test_rotation_is_clamped(rotate_cfg):
    state, _ = reset(rotate_cfg, "id", 0)
    for _ in range(30):
        state, _, _, _ = step(state, [0.0, 0.0, 1.0, 0.0], rotate_cfg)
    assert state.phi == pytest.approx(math.pi)
    assert len(state.proprio(rotate_cfg).as_vector()) == 6


def test_bad_actions(env_cfg):
    state, _ = reset(env_cfg, "id", 0)
    with pytest.raises(ArgumentError):
        step(state, np.zeros(4), env_cfg)
    with pytest.raises(ArgumentError):
        step(state, [np.nan, 0.0, 0.0], env_cfg)


def test_episode_ends_at_max_steps():
    cfg = EnvConfig(max_steps=3)
    state, _ = reset(cfg, "id", 0)
    for _ in range(2):
        state, _, done, _ = step(state, np.zeros(3), cfg)
        assert not done
    state, _, done, success = step(state, np.zeros(3), cfg)
    assert done and not success
    with pytest.raises(ArgumentError):
        step(state, np.zeros(3), cfg)


@pytest.mark.parametrize("render_mode", ["bilinear", "nearest"])
def test_brightest_cell_contains_each_point(render_mode):
    cfg = EnvConfig(render=render_mode)
    for seed in range(50):
        state, _ = reset(cfg, "id", seed)
        grid = render(state, cfg).reshape(3, cfg.grid, cfg.grid)
        for channel, (x, y) in enumerate((state.obj, cfg.target, state.p)):
            row, col = np.unravel_index(np.argmax(grid[channel]), grid[channel].shape)
            assert (row, col) == (cell_index(y, cfg.grid), cell_index(x, cfg.grid))
            assert grid[channel].sum() == pytest.approx(1.0)


def test_cell_index_edges():
    assert cell_index(0.0, 16) == 0
    assert cell_index(1.0, 16) == 15
    assert cell_index(0.5, 16) == 8


def test_phase_of_fresh_state(env_cfg):
    state, _ = reset(env_cfg, "ood", 5)
    assert expert_phase(state, env_cfg) == APPROACH


def test_held_object_at_target_is_placed(env_cfg, rotate_cfg):
    target = np.array(env_cfg.target)
    for g in (0.0, 0.2, 0.3, 0.45):
        state = EnvState(p=target, phi=0.0, g=g, obj=target, held=True)
        assert expert_phase(state, env_cfg) == PLACE
    turning = EnvState(p=target, phi=0.0, g=0.3, obj=target, held=True)
    assert expert_phase(turning, rotate_cfg) == ROTATE
    assert expert_phase(replace(turning, phi=rotate_cfg.rot_target, g=0.0), rotate_cfg) == PLACE


def test_held_object_away_from_target(env_cfg):
    p = np.array([0.5, 0.5])
    assert expert_phase(EnvState(p=p, phi=0.0, g=0.4, obj=p, held=True), env_cfg) == GRASP
    assert expert_phase(EnvState(p=p, phi=0.0, g=0.2, obj=p, held=True), env_cfg) == TRANSPORT

import numpy as np
import pytest

from indicator.model import IndicatorModel, save_indicator
from nnkit.rng import make_rng
from policy.config import PolicyConfig, TrainConfig, configure_mode
from policy.network import VPPolicy, head_split_check, load_policy, load_vision_group, save_policy
from policy.samples import build_samples, chunk_indices, window_indices
from trajcore.errors import ArgumentError, ConfigError, FormatError

CFG = PolicyConfig(mode="concat", H=2, L=3, vision_hidden=6, proprio_hidden=4, head_hidden=5)


def _policy(cfg=CFG, seed=0):
    return VPPolicy(cfg, obs_dim=5, proprio_dim=3, action_dim=2, rng=make_rng(seed, "net"))


def _windows(rng, batch=4, H=2):
    return rng.normal(size=(batch, H, 5)), rng.normal(size=(batch, H, 3))


def test_zero_final_layer_outputs_bias(rng):
    policy = _policy()
    last = policy.head_net.affines[-1]
    policy.head.params[last.w_key][...] = 0.0
    obs, prop = _windows(rng)
    out = policy.forward(obs, prop)
    assert out.shape == (4, 3, 2)
    for row in out:
        np.testing.assert_array_equal(row.ravel(), last.b)


def test_forward_is_deterministic(rng):
    policy = _policy()
    obs, prop = _windows(rng)
    np.testing.assert_array_equal(policy.forward(obs, prop), policy.forward(obs, prop))


def test_head_split_identity(rng):
    policy = _policy()
    for _ in range(100):
        f_v = rng.normal(size=(3, CFG.vision_hidden))
        f_s = rng.normal(size=(3, CFG.proprio_hidden))
        assert head_split_check(policy, f_v, f_s) < 1e-12
    assert head_split_check(policy, f_v, np.zeros_like(f_s)) < 1e-12


def test_head_split_needs_proprio_branch(rng):
    vision = _policy(PolicyConfig(mode="vision_only", H=2, L=3, vision_hidden=6))
    with pytest.raises(ArgumentError):
        head_split_check(vision, np.zeros((1, 6)), np.zeros((1, 4)))


def test_vision_only_policy_ignores_proprio(rng):
    policy = _policy(PolicyConfig(mode="vision_only", H=2, L=3, vision_hidden=6))
    assert policy.proprio is None
    assert policy.head_first.in_dim == 6
    obs, prop = _windows(rng)
    np.testing.assert_array_equal(policy.forward(obs, prop), policy.forward(obs, prop * 100.0))
    np.testing.assert_array_equal(policy.forward(obs, prop), policy.forward(obs))


def test_window_shapes_are_checked(rng):
    policy = _policy()
    obs, prop = _windows(rng, H=3)
    with pytest.raises(ArgumentError):
        policy.forward(obs, prop)
    obs, _ = _windows(rng)
    with pytest.raises(ArgumentError):
        policy.forward(obs, None)


def test_checkpoint_round_trip(tmp_path, rng):
    policy = _policy()
    path = tmp_path / "policy.ckpt"
    save_policy(policy, path, {"mode": "gap"})
    loaded = load_policy(path)
    obs, prop = _windows(rng)
    np.testing.assert_array_equal(loaded.forward(obs, prop), policy.forward(obs, prop))
    vision = load_vision_group(path)
    assert vision.tag == "vision"
    np.testing.assert_array_equal(vision.params["vision.0.W"], policy.vision.params["vision.0.W"])


def test_loading_a_non_policy_checkpoint(tmp_path):
    path = tmp_path / "indicator.ckpt"
    save_indicator(IndicatorModel(3, 4, make_rng(0, "x")), path)
    with pytest.raises(FormatError):
        load_policy(path)


def test_sample_windows_clamp_at_edges():
    assert window_indices(0, 3).tolist() == [0, 0, 0]
    assert window_indices(4, 3).tolist() == [2, 3, 4]
    assert chunk_indices(5, 3, 7).tolist() == [5, 6, 6]


def test_build_samples_shapes(tiny_dataset):
    samples = build_samples(tiny_dataset, H=2, L=3)
    assert len(samples) == 6 + 8 + 7
    assert samples.obs.shape == (21, 2, 5)
    assert samples.proprio.shape == (21, 2, 3)
    assert samples.actions.shape == (21, 3, 3)
    assert samples.rho is None
    assert samples.timestep[:7].tolist() == [0, 1, 2, 3, 4, 5, 0]


def test_configure_mode():
    base_p, base_t = PolicyConfig(), TrainConfig(mask_prob=0.2)
    p, t = configure_mode("vision", base_p, base_t)
    assert p.mode == "vision_only" and t.rho_source == "none" and t.mask_prob == 0.0
    p, t = configure_mode("gap", base_p, base_t)
    assert p.mode == "concat" and t.rho_source == "learned"
    _, t = configure_mode("mask", base_p, base_t)
    assert t.mask_prob == 0.2 and t.rho_source == "none"
    assert configure_mode("smooth", base_p, base_t)[1].rho_source == "smooth"
    with pytest.raises(ConfigError):
        configure_mode("dagger", base_p, base_t)


def test_train_config_defaults_and_validation():
    tcfg = TrainConfig()
    assert tcfg.lam == 0.3
    assert tcfg.gap_epochs == 50
    assert tcfg.multiplier(0.0) == pytest.approx(0.3)
    assert TrainConfig(adjust_rule="one_minus_lambda_rho", lam=0.5).multiplier(1.0) == 0.5
    for bad in ({"gap_epochs": 200}, {"lam": 0.0}, {"mask_prob": 1.5}, {"rho_source": "oracle"}):
        with pytest.raises(ArgumentError):
            TrainConfig(**bad)


def _grads(policy, dout, *args):
    for group in policy.groups:
        group.zero_grad()
    policy.backward(dout, *args)
    return {g.name: {k: v.copy() for k, v in g.grads.items()} for g in policy.groups}


def test_head_proprio_rows_scale_by_multiplier(rng):
    policy = _policy()
    obs, prop = _windows(rng)
    dout = rng.normal(size=policy.forward(obs, prop).shape)
    key, dv, m = policy.head_first.w_key, CFG.vision_hidden, 0.35
    base = _grads(policy, dout)

    policy.scale_head_proprio_grads(m)
    scaled = policy.head.grads[key]
    np.testing.assert_array_equal(scaled[dv:], m * base["head"][key][dv:])
    np.testing.assert_array_equal(scaled[:dv], base["head"][key][:dv])

    rows = _grads(policy, dout, np.full(4, m), True)
    np.testing.assert_allclose(rows["head"][key][dv:], m * base["head"][key][dv:], rtol=1e-10,
                               atol=1e-12)
    np.testing.assert_array_equal(rows["head"][key][:dv], base["head"][key][:dv])
    for name in ("vision", "head"):
        for k, value in base[name].items():
            if (name, k) != ("head", key):
                np.testing.assert_array_equal(rows[name][k], value)
    for k, value in base["proprio"].items():
        np.testing.assert_allclose(rows["proprio"][k], m * value, rtol=1e-10, atol=1e-12)


def test_per_sample_scale_without_head_flag_leaves_head(rng):
    policy = _policy()
    obs, prop = _windows(rng)
    dout = rng.normal(size=policy.forward(obs, prop).shape)
    base = _grads(policy, dout)
    rows = _grads(policy, dout, np.array([0.0, 0.5, 1.0, 0.25]))
    for k, value in base["head"].items():
        np.testing.assert_array_equal(rows["head"][k], value)
    for k, value in base["vision"].items():
        np.testing.assert_array_equal(rows["vision"][k], value)

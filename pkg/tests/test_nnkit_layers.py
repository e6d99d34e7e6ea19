import numpy as np
import pytest

from nnkit.layers import LSTM, MLP, Affine, Concat, ReLU
from nnkit.losses import mse_loss, weighted_bce_loss, weighted_bce_with_logits
from nnkit.params import ParamGroup
from trajcore.errors import ArgumentError


def test_identity_affine_passes_input_through(rng):
    group = ParamGroup("g", "head")
    layer = Affine(group, "fc", 4, 4, rng)
    group.load_state({"fc.W": np.eye(4), "fc.b": np.zeros(4)})
    x = rng.normal(size=(3, 4))
    np.testing.assert_array_equal(layer.forward(x), x)


def test_affine_gradients_accumulate(rng):
    group = ParamGroup("g", "head")
    layer = Affine(group, "fc", 2, 3, rng)
    x = rng.normal(size=(5, 2))
    dy = rng.normal(size=(5, 3))
    layer.forward(x)
    layer.backward(dy)
    layer.backward(dy)
    np.testing.assert_allclose(group.grads["fc.W"], 2 * x.T @ dy)
    group.zero_grad()
    assert not group.grads["fc.b"].any()


def test_affine_rejects_wrong_width(rng):
    layer = Affine(ParamGroup("g", "head"), "fc", 3, 2, rng)
    with pytest.raises(ArgumentError):
        layer.forward(np.zeros((2, 4)))


def test_affine_needs_rng_for_fresh_group():
    with pytest.raises(ArgumentError):
        Affine(ParamGroup("g", "head"), "fc", 3, 2)


def test_layers_reuse_existing_parameters(rng):
    group = ParamGroup("g", "vision")
    first = MLP(group, "mlp", [3, 4, 2], rng)
    second = MLP(group, "mlp", [3, 4, 2])
    x = rng.normal(size=(2, 3))
    np.testing.assert_array_equal(first.forward(x), second.forward(x))
    assert group.num_params() == 3 * 4 + 4 + 4 * 2 + 2


def test_relu_masks_negative_inputs():
    relu = ReLU()
    out = relu.forward(np.array([[-1.0, 2.0]]))
    assert out.tolist() == [[0.0, 2.0]]
    assert relu.backward(np.ones((1, 2))).tolist() == [[0.0, 1.0]]


def test_concat_splits_gradient_back():
    layer = Concat()
    a, b = np.ones((2, 3)), np.zeros((2, 1))
    assert layer.forward(a, b).shape == (2, 4)
    da, db = layer.backward(np.arange(8.0).reshape(2, 4))
    assert da.shape == (2, 3) and db.tolist() == [[3.0], [7.0]]
    with pytest.raises(ArgumentError):
        layer.forward(np.ones((2, 1)), np.ones((3, 1)))


def test_lstm_forget_bias_starts_at_one(rng):
    group = ParamGroup("g", "indicator")
    LSTM(group, "lstm", 3, 5, rng)
    np.testing.assert_array_equal(group.params["lstm.b"][5:10], np.ones(5))


def test_lstm_shapes(rng):
    lstm = LSTM(ParamGroup("g", "indicator"), "lstm", 3, 5, rng)
    hs = lstm.forward(rng.normal(size=(2, 7, 3)))
    assert hs.shape == (2, 7, 5)
    assert np.all(np.abs(hs) < 1)
    with pytest.raises(ArgumentError):
        lstm.forward(np.zeros((2, 7, 4)))


def test_mse_of_identical_inputs(rng):
    x = rng.normal(size=(4, 3))
    value, grad = mse_loss(x, x.copy())
    assert value == 0.0
    assert not grad.any()
    with pytest.raises(ArgumentError):
        mse_loss(x, x[:2])


def test_bce_forms_agree(rng):
    logits = rng.normal(size=10)
    target = (rng.random(10) > 0.5).astype(float)
    weights = rng.uniform(0.1, 1.0, size=10)
    p_value, _ = weighted_bce_loss(1 / (1 + np.exp(-logits)), target, weights)
    z_value, _ = weighted_bce_with_logits(logits, target, weights)
    assert p_value == pytest.approx(z_value, rel=1e-10)


def test_zero_weights_get_no_gradient(rng):
    logits = rng.normal(size=6)
    weights = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
    _, grad = weighted_bce_with_logits(logits, np.zeros(6), weights)
    assert not grad[3:].any()


def test_group_rejects_unknown_tag():
    with pytest.raises(ArgumentError):
        ParamGroup("g", "critic")

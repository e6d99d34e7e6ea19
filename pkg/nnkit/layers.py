"""
Layers with exact backward passes.

Every layer caches what its backward pass needs during ``forward`` and
accumulates (+=) parameter gradients into its ParamGroup during ``backward``;
callers zero the group gradients between steps. Inputs are batched:
(B, features) for feed-forward layers and (B, T, features) for the LSTM.
"""
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import expit

from nnkit.params import ParamGroup
from trajcore.errors import ArgumentError


def uniform_init(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Affine:
    """y = x W + b."""

    def __init__(self, group: ParamGroup, prefix: str, in_dim: int, out_dim: int,
                 rng: Optional[np.random.Generator] = None):
        self.group = group
        self.w_key = f"{prefix}.W"
        self.b_key = f"{prefix}.b"
        self.in_dim = in_dim
        self.out_dim = out_dim
        if self.w_key not in group.params:
            if rng is None:
                raise ArgumentError(f"rng required to initialize {prefix}")
            group.add(self.w_key, uniform_init(rng, in_dim, (in_dim, out_dim)))
            group.add(self.b_key, uniform_init(rng, in_dim, (out_dim,)))
        self._x = None

    @property
    def W(self) -> np.ndarray:
        return self.group.params[self.w_key]

    @property
    def b(self) -> np.ndarray:
        return self.group.params[self.b_key]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ArgumentError(f"affine {self.w_key} expects (B, {self.in_dim}), got {x.shape}")
        self._x = x
        return x @ self.W + self.b

    def backward(self, dy: np.ndarray) -> np.ndarray:
        self.group.grads[self.w_key] += self._x.T @ dy
        self.group.grads[self.b_key] += dy.sum(axis=0)
        return dy @ self.W.T


class ReLU:
    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return dy * self._mask


class Tanh:
    def forward(self, x: np.ndarray) -> np.ndarray:
        self._y = np.tanh(x)
        return self._y

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return dy * (1.0 - self._y ** 2)


class Sigmoid:
    def forward(self, x: np.ndarray) -> np.ndarray:
        self._y = expit(x)
        return self._y

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return dy * self._y * (1.0 - self._y)


class Concat:
    """Concatenate along the feature axis; backward splits the gradient back."""

    def forward(self, *xs: np.ndarray) -> np.ndarray:
        batch = {x.shape[0] for x in xs}
        if len(batch) != 1:
            raise ArgumentError(f"cannot concatenate batches of sizes {sorted(batch)}")
        self._sizes = [x.shape[1] for x in xs]
        return np.concatenate(xs, axis=1)

    def backward(self, dy: np.ndarray) -> List[np.ndarray]:
        return np.split(dy, np.cumsum(self._sizes)[:-1], axis=1)


_ACTIVATIONS = {"relu": ReLU, "tanh": Tanh, "sigmoid": Sigmoid}


class MLP:
    """Affine layers with an activation between them (none after the last by default)."""

    def __init__(self, group: ParamGroup, prefix: str, sizes: Sequence[int],
                 rng: Optional[np.random.Generator] = None, activation: str = "relu",
                 final_activation: Optional[str] = None):
        if len(sizes) < 2:
            raise ArgumentError("an MLP needs at least input and output sizes")
        self.sizes = list(sizes)
        self.layers = []
        for i, (d_in, d_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            self.layers.append(Affine(group, f"{prefix}.{i}", d_in, d_out, rng))
            last = i == len(sizes) - 2
            act = final_activation if last else activation
            if act is not None:
                self.layers.append(_ACTIVATIONS[act]())

    @property
    def affines(self) -> List[Affine]:
        return [layer for layer in self.layers if isinstance(layer, Affine)]

    def forward(self, x: np.ndarray, start: int = 0) -> np.ndarray:
        for layer in self.layers[start:]:
            x = layer.forward(x)
        return x

    def backward(self, dy: np.ndarray, start: int = 0) -> np.ndarray:
        for layer in reversed(self.layers[start:]):
            dy = layer.backward(dy)
        return dy


class LSTM:
    """
    Single-layer LSTM over (B, T, D) inputs, gates ordered (input, forget,
    candidate, output). Forget-gate bias starts at 1.
    """

    def __init__(self, group: ParamGroup, prefix: str, input_dim: int, hidden_dim: int,
                 rng: Optional[np.random.Generator] = None):
        self.group = group
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.wx_key = f"{prefix}.Wx"
        self.wh_key = f"{prefix}.Wh"
        self.b_key = f"{prefix}.b"
        if self.wx_key not in group.params:
            if rng is None:
                raise ArgumentError(f"rng required to initialize {prefix}")
            h = hidden_dim
            group.add(self.wx_key, uniform_init(rng, input_dim, (input_dim, 4 * h)))
            group.add(self.wh_key, uniform_init(rng, h, (h, 4 * h)))
            bias = uniform_init(rng, h, (4 * h,))
            bias[h:2 * h] = 1.0
            group.add(self.b_key, bias)

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 3 or x.shape[2] != self.input_dim:
            raise ArgumentError(f"LSTM expects (B, T, {self.input_dim}), got {x.shape}")
        B, T, _ = x.shape
        H = self.hidden_dim
        Wx = self.group.params[self.wx_key]
        Wh = self.group.params[self.wh_key]
        b = self.group.params[self.b_key]
        h = np.zeros((B, H))
        c = np.zeros((B, H))
        self._x = x
        self._cache = []
        hs = np.empty((B, T, H))
        for t in range(T):
            a = x[:, t] @ Wx + h @ Wh + b
            i = expit(a[:, :H])
            f = expit(a[:, H:2 * H])
            g = np.tanh(a[:, 2 * H:3 * H])
            o = expit(a[:, 3 * H:])
            c_new = f * c + i * g
            tanh_c = np.tanh(c_new)
            h_new = o * tanh_c
            self._cache.append((h, c, i, f, g, o, tanh_c))
            h, c = h_new, c_new
            hs[:, t] = h
        return hs

    def backward(self, dhs: np.ndarray) -> np.ndarray:
        x = self._x
        B, T, _ = x.shape
        H = self.hidden_dim
        Wx = self.group.params[self.wx_key]
        Wh = self.group.params[self.wh_key]
        dWx = np.zeros_like(Wx)
        dWh = np.zeros_like(Wh)
        db = np.zeros(4 * H)
        dx = np.empty_like(x)
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        for t in reversed(range(T)):
            h_prev, c_prev, i, f, g, o, tanh_c = self._cache[t]
            dh = dhs[:, t] + dh_next
            do = dh * tanh_c
            dc = dc_next + dh * o * (1.0 - tanh_c ** 2)
            da = np.concatenate([
                dc * g * i * (1.0 - i),
                dc * c_prev * f * (1.0 - f),
                dc * i * (1.0 - g ** 2),
                do * o * (1.0 - o),
            ], axis=1)
            dWx += x[:, t].T @ da
            dWh += h_prev.T @ da
            db += da.sum(axis=0)
            dx[:, t] = da @ Wx.T
            dh_next = da @ Wh.T
            dc_next = dc * f
        self.group.grads[self.wx_key] += dWx
        self.group.grads[self.wh_key] += dWh
        self.group.grads[self.b_key] += db
        return dx

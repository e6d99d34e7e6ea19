"""
Recurrent motion-transition indicator.

A single-layer LSTM reads the normalized proprio deltas Δs_0..Δs_{N-2} and an
affine + sigmoid readout turns every hidden state into ρ. The prediction for
Δs_i belongs to timestep i + 1; timestep 0 reuses the value of timestep 1.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit
from sklearn.preprocessing import StandardScaler

from indicator.labels import IndicatorLabels
from indicator.series import IndicatorSeries
from nnkit.checkpoint import load_checkpoint, save_checkpoint
from nnkit.layers import LSTM, Affine
from nnkit.losses import weighted_bce_with_logits
from nnkit.optim import OptimizerState, optimizer_step
from nnkit.params import ParamGroup
from nnkit.rng import make_rng
from trajcore.errors import ArgumentError, FormatError, TrainingError
from trajcore.motion import delta_matrix
from trajcore.types import Motion, Trajectory

logger = logging.getLogger(__name__)

_RHO_EPS = 1e-12
CHECKPOINT_KIND = "indicator"


@dataclass(frozen=True)
class IndicatorHyper:
    epochs: int = 200
    lr: float = 1e-3
    hidden_dim: int = 32
    seed: int = 0
    batch_size: int = 32
    window: int = 3
    w_low: float = 0.2
    optimizer: str = "adam"
    log_every: int = 50

    def __post_init__(self):
        if self.epochs < 1 or self.hidden_dim < 1 or self.batch_size < 1:
            raise ArgumentError("epochs, hidden_dim and batch_size must be positive")
        if self.lr <= 0:
            raise ArgumentError(f"learning rate must be positive, got {self.lr}")


class IndicatorModel:
    """LSTM + readout with the delta normalizer it was trained with."""

    def __init__(self, input_dim: int, hidden_dim: int = 32,
                 rng: Optional[np.random.Generator] = None,
                 group: Optional[ParamGroup] = None,
                 normalizer: Optional[ParamGroup] = None):
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.group = group if group is not None else ParamGroup("indicator", "indicator")
        self.lstm = LSTM(self.group, "lstm", input_dim, hidden_dim, rng)
        self.readout = Affine(self.group, "readout", hidden_dim, 1, rng)
        if normalizer is None:
            normalizer = ParamGroup("normalizer", "indicator",
                                    {"mean": np.zeros(input_dim), "scale": np.ones(input_dim)})
        self.normalizer = normalizer
        self.loss_curve: List[float] = []

    @property
    def final_loss(self) -> float:
        return self.loss_curve[-1] if self.loss_curve else float("nan")

    def fit_normalizer(self, deltas: Sequence[np.ndarray]) -> None:
        scaler = StandardScaler().fit(np.vstack(deltas))
        self.normalizer.load_state({"mean": scaler.mean_, "scale": scaler.scale_})

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.normalizer.params["mean"]) / self.normalizer.params["scale"]

    def logits(self, x: np.ndarray) -> np.ndarray:
        """(B, T, D) normalized deltas -> (B, T) logits."""
        B, T, _ = x.shape
        hs = self.lstm.forward(x)
        return self.readout.forward(hs.reshape(B * T, self.hidden_dim)).reshape(B, T)

    def backward(self, dlogits: np.ndarray) -> np.ndarray:
        B, T = dlogits.shape
        dh = self.readout.backward(dlogits.reshape(B * T, 1))
        return self.lstm.backward(dh.reshape(B, T, self.hidden_dim))

    def loss(self, x: np.ndarray, targets: np.ndarray, weights: np.ndarray,
             backward: bool = False) -> float:
        value, dlogits = weighted_bce_with_logits(self.logits(x), targets, weights)
        if backward:
            self.backward(dlogits)
        return value

    def rho(self, deltas: np.ndarray) -> np.ndarray:
        """Per-delta probabilities for one (N-1, D) delta matrix."""
        deltas = np.asarray(deltas, dtype=np.float64)
        if deltas.ndim != 2 or deltas.shape[1] != self.input_dim:
            raise ArgumentError(f"indicator expects deltas of dimension {self.input_dim}, "
                                f"got shape {deltas.shape}")
        z = self.logits(self.normalize(deltas)[None])[0]
        return np.clip(expit(z), _RHO_EPS, 1.0 - _RHO_EPS)


def _as_matrix(deltas) -> np.ndarray:
    if len(deltas) and isinstance(deltas[0], Motion):
        return np.vstack([m.as_vector() for m in deltas])
    return np.asarray(deltas, dtype=np.float64)


def _pad_batch(items: Sequence[Tuple[np.ndarray, np.ndarray, np.ndarray]]):
    T = max(x.shape[0] for x, _, _ in items)
    D = items[0][0].shape[1]
    x = np.zeros((len(items), T, D))
    y = np.zeros((len(items), T))
    w = np.zeros((len(items), T))
    for b, (xi, yi, wi) in enumerate(items):
        n = xi.shape[0]
        x[b, :n] = xi
        y[b, :n] = yi
        w[b, :n] = wi
    return x, y, w


def train_indicator(data: Sequence[Tuple[object, IndicatorLabels]],
                    hyper: IndicatorHyper = IndicatorHyper()) -> IndicatorModel:
    """
    Fit the indicator on (delta sequence, labels) pairs by minimizing the
    weighted BCE over y_1..y_{N-1}. Padded steps carry weight 0.
    """
    if not data:
        raise ArgumentError("train_indicator needs at least one sequence")
    seqs = []
    for deltas, labels in data:
        x = _as_matrix(deltas)
        if len(labels) != x.shape[0] + 1:
            raise ArgumentError(f"labels of length {len(labels)} do not match "
                                f"{x.shape[0]} deltas")
        seqs.append((x, labels.targets[1:], labels.weights[1:]))
    dims = {x.shape[1] for x, _, _ in seqs}
    if len(dims) != 1:
        raise ArgumentError(f"delta sequences have differing dimensions {sorted(dims)}")

    model = IndicatorModel(dims.pop(), hyper.hidden_dim,
                           rng=make_rng(hyper.seed, "indicator", "init"))
    model.fit_normalizer([x for x, _, _ in seqs])
    seqs = [(model.normalize(x), y, w) for x, y, w in seqs]
    opt = OptimizerState(kind=hyper.optimizer, lr=hyper.lr)
    shuffle = make_rng(hyper.seed, "indicator", "shuffle")

    for epoch in range(hyper.epochs):
        order = shuffle.permutation(len(seqs))
        losses = []
        for start in range(0, len(order), hyper.batch_size):
            x, y, w = _pad_batch([seqs[i] for i in order[start:start + hyper.batch_size]])
            model.group.zero_grad()
            value = model.loss(x, y, w, backward=True)
            if not np.isfinite(value):
                raise TrainingError("indicator loss is not finite", epoch)
            optimizer_step(model.group, opt)
            losses.append(value)
        model.loss_curve.append(float(np.mean(losses)))
        if (epoch + 1) % hyper.log_every == 0 or epoch == hyper.epochs - 1:
            logger.info("indicator epoch %d/%d loss %.6f", epoch + 1, hyper.epochs,
                        model.loss_curve[-1])
    return model


def predict_rho(model: IndicatorModel, traj: Trajectory) -> IndicatorSeries:
    per_delta = model.rho(delta_matrix(traj))
    return IndicatorSeries(np.concatenate([per_delta[:1], per_delta]), "learned")


def save_indicator(model: IndicatorModel, path, meta: Optional[dict] = None) -> None:
    header = {
        "kind": CHECKPOINT_KIND,
        "input_dim": model.input_dim,
        "hidden_dim": model.hidden_dim,
        "loss_curve": model.loss_curve,
    }
    header.update(meta or {})
    save_checkpoint([model.group, model.normalizer], path, header)


def load_indicator(path) -> IndicatorModel:
    ckpt = load_checkpoint(path)
    if ckpt.meta.get("kind") != CHECKPOINT_KIND:
        raise FormatError(f"not an indicator checkpoint (kind {ckpt.meta.get('kind')!r})", path)
    groups = {g.name: g for g in ckpt.groups}
    try:
        model = IndicatorModel(int(ckpt.meta["input_dim"]), int(ckpt.meta["hidden_dim"]),
                               group=groups["indicator"], normalizer=groups["normalizer"])
    except (KeyError, ArgumentError) as e:
        raise FormatError(f"indicator checkpoint is incomplete: {e}", path) from None
    model.loss_curve = [float(v) for v in ckpt.meta.get("loss_curve", [])]
    return model

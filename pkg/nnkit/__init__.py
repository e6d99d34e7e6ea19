# Minimal deterministic neural-network engine on numpy
from nnkit.params import TAGS, ParamGroup
from nnkit.layers import LSTM, MLP, Affine, Concat, ReLU, Sigmoid, Tanh
from nnkit.losses import mse_loss, weighted_bce_loss, weighted_bce_with_logits
from nnkit.optim import OptimizerState, adam_step, optimizer_step, sgd_step
from nnkit.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from nnkit.rng import make_rng

__all__ = [
    "TAGS", "ParamGroup",
    "LSTM", "MLP", "Affine", "Concat", "ReLU", "Sigmoid", "Tanh",
    "mse_loss", "weighted_bce_loss", "weighted_bce_with_logits",
    "OptimizerState", "adam_step", "optimizer_step", "sgd_step",
    "Checkpoint", "load_checkpoint", "save_checkpoint",
    "make_rng",
]

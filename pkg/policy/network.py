"""
Two-branch vision + proprioception policy.

f_v = phi_v(obs window), f_s = phi_s(proprio window), a = psi(concat(f_v, f_s)).
The first affine layer of psi acts on the concatenation, so its weight rows
split into the vision-facing block psi_v (first vision_hidden rows) and the
proprio-facing block psi_s; everything after it is the shared part.
"""
import logging
from dataclasses import asdict
from typing import List, Optional, Tuple

import numpy as np

from nnkit.checkpoint import load_checkpoint, save_checkpoint
from nnkit.layers import MLP, Concat
from nnkit.params import ParamGroup
from policy.config import PolicyConfig
from trajcore.errors import ArgumentError, FormatError

logger = logging.getLogger(__name__)

CHECKPOINT_KIND = "policy"


class VPPolicy:
    def __init__(self, cfg: PolicyConfig, obs_dim: int, proprio_dim: int, action_dim: int,
                 rng: Optional[np.random.Generator] = None,
                 vision: Optional[ParamGroup] = None,
                 proprio: Optional[ParamGroup] = None,
                 head: Optional[ParamGroup] = None):
        self.cfg = cfg
        self.obs_dim = obs_dim
        self.proprio_dim = proprio_dim
        self.action_dim = action_dim
        H = cfg.H
        self.vision = vision if vision is not None else ParamGroup("vision", "vision")
        self.vision_net = MLP(self.vision, "vision", [H * obs_dim, cfg.vision_hidden,
                                                     cfg.vision_hidden],
                              rng, final_activation="relu")
        self.proprio = None
        self.proprio_net = None
        head_in = cfg.vision_hidden
        if cfg.uses_proprio:
            self.proprio = proprio if proprio is not None else ParamGroup("proprio", "proprio")
            self.proprio_net = MLP(self.proprio, "proprio",
                                   [H * proprio_dim, cfg.proprio_hidden, cfg.proprio_hidden],
                                   rng, final_activation="relu")
            head_in += cfg.proprio_hidden
        self.head = head if head is not None else ParamGroup("head", "head")
        sizes = [head_in, cfg.head_hidden, cfg.L * action_dim] if cfg.head_hidden \
            else [head_in, cfg.L * action_dim]
        self.head_net = MLP(self.head, "head", sizes, rng)
        self.concat = Concat()
        self._fs = None

    @property
    def groups(self) -> List[ParamGroup]:
        return [g for g in (self.vision, self.proprio, self.head) if g is not None]

    @property
    def head_first(self):
        return self.head_net.affines[0]

    def _check_window(self, x: np.ndarray, dim: int, name: str) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[1] != self.cfg.H or x.shape[2] != dim:
            raise ArgumentError(f"{name} window must have shape (B, {self.cfg.H}, {dim}), "
                                f"got {x.shape}")
        return x.reshape(x.shape[0], -1)

    def features(self, obs_window: np.ndarray,
                 proprio_window: Optional[np.ndarray] = None) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        f_v = self.vision_net.forward(self._check_window(obs_window, self.obs_dim, "observation"))
        if not self.cfg.uses_proprio:
            return f_v, None
        if proprio_window is None:
            raise ArgumentError("concat policy needs a proprio window")
        x_s = self._check_window(proprio_window, self.proprio_dim, "proprio")
        if x_s.shape[0] != f_v.shape[0]:
            raise ArgumentError("observation and proprio windows differ in batch size")
        return f_v, self.proprio_net.forward(x_s)

    def forward(self, obs_window: np.ndarray,
                proprio_window: Optional[np.ndarray] = None) -> np.ndarray:
        """(B, H, obs_dim), (B, H, proprio_dim) -> (B, L, action_dim)."""
        f_v, f_s = self.features(obs_window, proprio_window)
        self._fs = f_s
        z = f_v if f_s is None else self.concat.forward(f_v, f_s)
        out = self.head_net.forward(z)
        return out.reshape(out.shape[0], self.cfg.L, self.action_dim)

    def backward(self, dout: np.ndarray, proprio_row_scale: Optional[np.ndarray] = None,
                 head_proprio_row_scale: bool = False) -> None:
        """
        Accumulate gradients of all groups for the last forward pass.

        ``proprio_row_scale`` (B,) multiplies each sample's gradient flowing
        into phi_s; with ``head_proprio_row_scale`` the same per-sample factors
        weight that sample's contribution to the psi_s rows of the head.
        """
        dout = dout.reshape(dout.shape[0], -1)
        d_first = self.head_net.backward(dout, start=1)
        first = self.head_first
        dz = first.backward(d_first)
        if not self.cfg.uses_proprio:
            self.vision_net.backward(dz)
            return
        d_fv, d_fs = self.concat.backward(dz)
        self.vision_net.backward(d_fv)
        if proprio_row_scale is not None:
            factor = np.asarray(proprio_row_scale, dtype=np.float64)[:, None]
            d_fs = d_fs * factor
            if head_proprio_row_scale:
                dv = self.cfg.vision_hidden
                correction = (self._fs * (factor - 1.0)).T @ d_first
                self.head.grads[first.w_key][dv:] += correction
        self.proprio_net.backward(d_fs)

    def scale_head_proprio_grads(self, factor: float) -> None:
        """Multiply the gradient of the psi_s rows of the first head layer."""
        dv = self.cfg.vision_hidden
        self.head.grads[self.head_first.w_key][dv:] *= factor

    def act(self, obs_window: np.ndarray, proprio_window: Optional[np.ndarray] = None) -> np.ndarray:
        """Action chunk (L, action_dim) for a single unbatched window."""
        prop = None if proprio_window is None else np.asarray(proprio_window)[None]
        return self.forward(np.asarray(obs_window)[None], prop)[0]


def head_split_check(policy: VPPolicy, f_v: np.ndarray, f_s: np.ndarray) -> float:
    """
    Max abs difference between the head on concat(f_v, f_s) and the split
    form psi_v(f_v) + psi_s(f_s) + b fed through the shared layers.
    """
    if not policy.cfg.uses_proprio:
        raise ArgumentError("head split check needs a concat policy")
    f_v = np.atleast_2d(np.asarray(f_v, dtype=np.float64))
    f_s = np.atleast_2d(np.asarray(f_s, dtype=np.float64))
    whole = policy.head_net.forward(np.concatenate([f_v, f_s], axis=1))
    first = policy.head_first
    dv = policy.cfg.vision_hidden
    psi_v = f_v @ first.W[:dv]
    psi_s = f_s @ first.W[dv:]
    split = policy.head_net.forward(psi_v + psi_s + first.b, start=1)
    return float(np.max(np.abs(whole - split)))


def save_policy(policy: VPPolicy, path, meta: Optional[dict] = None) -> None:
    header = {
        "kind": CHECKPOINT_KIND,
        "config": asdict(policy.cfg),
        "obs_dim": policy.obs_dim,
        "proprio_dim": policy.proprio_dim,
        "action_dim": policy.action_dim,
    }
    header.update(meta or {})
    save_checkpoint(policy.groups, path, header)


def _policy_checkpoint(path):
    ckpt = load_checkpoint(path)
    if ckpt.meta.get("kind") != CHECKPOINT_KIND:
        raise FormatError(f"not a policy checkpoint (kind {ckpt.meta.get('kind')!r})", path)
    return ckpt


def load_policy(path) -> VPPolicy:
    ckpt = _policy_checkpoint(path)
    groups = {g.tag: g for g in ckpt.groups}
    try:
        cfg = PolicyConfig(**ckpt.meta["config"])
        return VPPolicy(cfg, int(ckpt.meta["obs_dim"]), int(ckpt.meta["proprio_dim"]),
                        int(ckpt.meta["action_dim"]), vision=groups["vision"],
                        proprio=groups.get("proprio"), head=groups["head"])
    except (KeyError, TypeError, ArgumentError) as e:
        raise FormatError(f"policy checkpoint is incomplete: {e}", path) from None


def load_vision_group(path) -> ParamGroup:
    """The vision chunk of a policy checkpoint, for linear probing."""
    ckpt = _policy_checkpoint(path)
    for group in ckpt.groups:
        if group.tag == "vision":
            return group
    raise FormatError("policy checkpoint has no vision group", path)

"""
Behavior cloning with phase-guided gradient adjustment.

During the first ``gap_epochs`` epochs of an adjusted run every batch
computes rho_bar, the mean rho of its samples, and the proprio group's
gradient is multiplied by lambda * (1 - rho_bar) before the optimizer step.
Vision and head groups always step with their raw gradient.
"""
import logging
from dataclasses import replace
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd

from indicator.series import IndicatorSeries
from nnkit.losses import mse_loss
from nnkit.optim import OptimizerState, optimizer_step
from nnkit.params import ParamGroup
from nnkit.rng import make_rng
from policy.config import PolicyConfig, TrainConfig
from policy.network import VPPolicy
from policy.samples import SampleSet, build_samples
from trajcore.errors import ConfigError, FormatError, TrainingError
from trajcore.types import Dataset

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ["epoch", "train_loss", "rho_mean"]


class BCResult(NamedTuple):
    policy: VPPolicy
    curve: pd.DataFrame


def _fit(policy: VPPolicy, samples: SampleSet, tcfg: TrainConfig,
         trainable: Sequence[ParamGroup], stream: str) -> pd.DataFrame:
    opt = OptimizerState(kind=tcfg.optimizer, lr=tcfg.lr)
    shuffle = make_rng(tcfg.seed, stream, "shuffle")
    masker = make_rng(tcfg.seed, stream, "mask")
    uses_proprio = policy.cfg.uses_proprio
    rows = []
    for epoch in range(tcfg.epochs):
        adjusting = tcfg.adjusted and uses_proprio and epoch < tcfg.gap_epochs
        order = shuffle.permutation(len(samples))
        losses: List[float] = []
        rho_means: List[float] = []
        for start in range(0, len(order), tcfg.batch_size):
            idx = order[start:start + tcfg.batch_size]
            prop = None
            if uses_proprio:
                prop = samples.proprio[idx]
                if tcfg.mask_prob > 0.0:
                    keep = masker.random(len(idx)) >= tcfg.mask_prob
                    prop = prop * keep[:, None, None]
            for group in policy.groups:
                group.zero_grad()
            pred = policy.forward(samples.obs[idx], prop)
            value, grad = mse_loss(pred, samples.actions[idx])
            if not np.isfinite(value):
                raise TrainingError("behavior-cloning loss is not finite", epoch)

            row_scale = None
            proprio_scale = 1.0
            if samples.rho is not None:
                rho_bar = float(np.mean(samples.rho[idx]))
                rho_means.append(rho_bar)
                if adjusting and tcfg.per_sample_rho:
                    row_scale = tcfg.multiplier(samples.rho[idx])
                elif adjusting:
                    proprio_scale = tcfg.multiplier(rho_bar)
            policy.backward(grad, row_scale, tcfg.adjust_head_proprio)
            if adjusting and tcfg.adjust_head_proprio and row_scale is None:
                policy.scale_head_proprio_grads(proprio_scale)
            for group in trainable:
                optimizer_step(group, opt, proprio_scale if group is policy.proprio else 1.0)
            losses.append(value)

        rho_mean = float(np.mean(rho_means)) if rho_means else float("nan")
        rows.append((epoch, float(np.mean(losses)), rho_mean))
        if (epoch + 1) % tcfg.log_every == 0 or epoch == tcfg.epochs - 1:
            logger.info("%s epoch %d/%d loss %.6f rho_mean %.4f%s", stream, epoch + 1,
                        tcfg.epochs, rows[-1][1], rho_mean, " (adjusted)" if adjusting else "")
    return pd.DataFrame(rows, columns=CURVE_COLUMNS)


def bc_train(data: Dataset, cfg: PolicyConfig, tcfg: TrainConfig,
             rho: Optional[Sequence[IndicatorSeries]] = None) -> BCResult:
    """Train a fresh policy on every timestep of ``data``."""
    if tcfg.adjusted and rho is None:
        raise ConfigError(f"rho_source={tcfg.rho_source!r} requires a rho series per trajectory")
    if tcfg.adjusted and not cfg.uses_proprio:
        raise ConfigError("gradient adjustment needs a policy with a proprio branch")
    if not tcfg.adjusted and rho is not None:
        logger.debug("rho given but rho_source is 'none'; ignoring it")
        rho = None
    schema = data.schema
    samples = build_samples(data, cfg.H, cfg.L, rho)
    policy = VPPolicy(cfg, schema.obs_dim, schema.proprio_dim, schema.action_dim,
                      rng=make_rng(tcfg.seed, "policy", "init"))
    logger.info("training %s policy on %d samples (%s)", cfg.mode, len(samples),
                tcfg.rho_source if tcfg.adjusted else "unadjusted")
    curve = _fit(policy, samples, tcfg, policy.groups, "policy")
    return BCResult(policy, curve)


def linear_probe(frozen_vision: ParamGroup, data: Dataset, tcfg: TrainConfig,
                 cfg: PolicyConfig = PolicyConfig()) -> BCResult:
    """
    Fit a linear head on top of a frozen vision chunk. The chunk is copied,
    so the caller's parameters are never touched.
    """
    schema = data.schema
    try:
        w0 = frozen_vision.params["vision.0.W"]
        w1 = frozen_vision.params["vision.1.W"]
    except KeyError as e:
        raise FormatError(f"vision group is missing {e}") from None
    if w0.shape[0] != cfg.H * schema.obs_dim or w1.shape != (w0.shape[1], w0.shape[1]):
        raise FormatError(f"vision group shapes {w0.shape}, {w1.shape} do not fit "
                          f"H={cfg.H} and obs_dim={schema.obs_dim}")
    probe_cfg = replace(cfg, mode="vision_only", head_hidden=0, vision_hidden=w0.shape[1])
    probe_tcfg = replace(tcfg, rho_source="none", mask_prob=0.0)
    policy = VPPolicy(probe_cfg, schema.obs_dim, schema.proprio_dim, schema.action_dim,
                      rng=make_rng(tcfg.seed, "probe", "init"),
                      vision=frozen_vision.copy())
    samples = build_samples(data, probe_cfg.H, probe_cfg.L)
    curve = _fit(policy, samples, probe_tcfg, [policy.head], "probe")
    return BCResult(policy, curve)

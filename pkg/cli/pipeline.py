"""
End-to-end experiment pipeline.

Per seed: generate demos -> segment them -> train the transition indicator
-> train one policy per mode -> evaluate in- and out-of-distribution, with
optional intervention and linear-probe stages. Every stage artifact is
cached under a key that hashes the stage-relevant configuration, so reruns
and sweeps only recompute what changed. Cell outputs are then written to
``paths.out_dir`` and consolidated by cli.report.
"""
import logging
import shlex
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import pandas as pd
from tqdm import tqdm

from cli import report as reporting
from cli.cache import (
    ArtifactCache, atomic_write_text, read_frame_lines, read_json, write_frame_lines,
    write_json, write_lines,
)
from cli.config import DEFAULTS, RunConfig, unparse
from indicator.labels import build_labels
from indicator.model import (
    IndicatorModel, load_indicator, predict_rho, save_indicator, train_indicator,
)
from indicator.evaluation import transition_auc
from indicator.series import fixed_rho, fixed_rho_at, smooth_rho
from nnkit.params import ParamGroup
from nnkit.rng import make_rng
from policy.config import configure_mode
from policy.network import VPPolicy, load_policy, save_policy
from policy.train import bc_train, linear_probe
from segment.cpd import segment_dp
from segment.io import change_index_sets, load_segmentations, save_segmentations
from segment.metrics import boundary_precision_recall
from segment.noise import inject_index_noise
from sim.demos import gen_demos
from sim.evaluate import episode_seeds, evaluate
from sim.intervene import CONSISTENT, TRANSITION, intervention_experiment
from trajcore.dataset import load_dataset, save_dataset
from trajcore.errors import ConfigError, GapError
from trajcore.motion import delta_matrix
from trajcore.types import Dataset

logger = logging.getLogger(__name__)

PROBE_SOURCES = ("gap", "concat")
INTERVENTION_ALTS = ("concat", "gap")


class StageError(GapError):
    """A pipeline stage failed; carries what is needed to reproduce it."""

    def __init__(self, stage: str, seed: int, command: str, cause: Exception):
        self.stage = stage
        self.seed = seed
        self.command = command
        self.cause = cause
        super().__init__(f"stage '{stage}' failed for seed {seed}: {cause}\n"
                         f"  reproduce with: {command}")


@dataclass(frozen=True)
class PlannedStage:
    name: str
    seed: int
    mode: Optional[str]
    key: str
    artifact: Path
    cached: bool

    def describe(self) -> str:
        what = self.name if self.mode is None else f"{self.name}[{self.mode}]"
        state = "cached" if self.cached else "run"
        return f"seed {self.seed:>3}  {what:<22} {state:<6} {self.artifact}"


def reproduce_command(cfg: RunConfig, seed: int, mode: Optional[str] = None) -> str:
    args = ["python", "-m", "cli", "run"]
    for section, keys in cfg.values.items():
        for key, value in keys.items():
            if section == "run":
                continue
            text = unparse(value)
            if text != DEFAULTS[section][key][1]:
                args += ["--set", f"{section}.{key}={text}"]
    args += ["--set", f"run.seeds={seed}"]
    if mode is not None:
        args += ["--set", f"run.modes={mode}"]
    return " ".join(shlex.quote(a) for a in args)


def fit_indicator(cfg: RunConfig, seed: int, data: Dataset, segments) -> IndicatorModel:
    """Train the transition indicator on CPD labels, optionally shifted by index noise."""
    hyper = cfg.indicator_hyper(seed)
    noise_p = cfg.get("indicator", "noise_p")
    noise_rng = make_rng(seed, "indicator", "label-noise")
    pairs = []
    for traj, indices in zip(data, segments):
        if noise_p > 0.0:
            indices = inject_index_noise(indices, noise_p, noise_rng, len(traj))
        labels = build_labels(indices, len(traj), hyper.window, hyper.w_low)
        pairs.append((delta_matrix(traj), labels))
    return train_indicator(pairs, hyper)


def rho_series(cfg: RunConfig, mode: str, data: Dataset, segments,
               model: Optional[IndicatorModel]):
    """Per-trajectory rho for a training mode; None for modes that take none."""
    if mode == "gap":
        if model is None:
            raise ConfigError("mode 'gap' needs a trained indicator")
        return [predict_rho(model, traj) for traj in data]
    if mode in ("smooth", "fixed") and segments is None:
        raise ConfigError(f"mode {mode!r} needs change indices for every demonstration")
    if mode == "smooth":
        sigma = cfg.get("indicator", "sigma")
        return [smooth_rho(idx, len(traj), sigma) for traj, idx in zip(data, segments)]
    if mode == "fixed":
        value = cfg.get("train", "rho_fixed")
        if cfg.get("train", "rho_fixed_scope") == "change_points":
            return [fixed_rho_at(idx, len(traj), value) for traj, idx in zip(data, segments)]
        return [fixed_rho(value, len(traj)) for traj in data]
    return None


class Pipeline:
    def __init__(self, cfg: RunConfig, cache: Optional[ArtifactCache] = None,
                 progress: bool = False):
        self.cfg = cfg
        self.cache = cache or ArtifactCache(cfg.cache_dir)
        self.progress = progress
        self.env = cfg.env_config()
        self.out_dir = cfg.out_dir.resolve()

    # -- planning ---------------------------------------------------------

    def _artifact(self, stage: str, seed: int, mode: Optional[str], suffix: str) -> Tuple[str, Path]:
        key = self.cfg.stage_key(stage, seed, mode)
        return key, self.cache.path(stage, key, suffix)

    def _needs_indicator(self) -> bool:
        return "gap" in self.cfg.modes

    def plan(self) -> List[PlannedStage]:
        stages = []

        def add(name, seed, mode, suffix):
            key, path = self._artifact(name, seed, mode, suffix)
            stages.append(PlannedStage(name, seed, mode, key, path, path.exists()))

        for seed in self.cfg.seeds:
            add("demos", seed, None, ".jsonl")
            add("segment", seed, None, ".jsonl")
            if self._needs_indicator():
                add("indicator", seed, None, ".ckpt")
            for mode in self.cfg.modes:
                add("policy", seed, mode, ".ckpt")
                add("evaluate", seed, mode, ".jsonl")
            if self.cfg.get("eval", "intervention") and "vision" in self.cfg.modes:
                for alt in INTERVENTION_ALTS:
                    if alt in self.cfg.modes:
                        add("intervene", seed, alt, ".jsonl")
            if self.cfg.get("eval", "probe"):
                for source in ("untrained",) + PROBE_SOURCES:
                    if source == "untrained" or source in self.cfg.modes:
                        add("probe", seed, source, ".json")
        return stages

    # -- stages -----------------------------------------------------------

    def _guard(self, stage: str, seed: int, mode: Optional[str], fn, *args):
        try:
            return fn(*args)
        except StageError:
            raise
        except GapError as e:
            raise StageError(stage, seed, reproduce_command(self.cfg, seed, mode), e) from e

    def demos(self, seed: int) -> Dataset:
        _, path = self._artifact("demos", seed, None, ".jsonl")
        if path.exists():
            logger.info("demos seed %d: cache hit %s", seed, path)
            return load_dataset(path)
        data = gen_demos(self.env, self.cfg.get("eval", "n_demos"), seed,
                         progress=self.progress)
        save_dataset(data, path)
        logger.info("demos seed %d: wrote %s", seed, path)
        return data

    def heldout(self, seed: int) -> Dataset:
        return gen_demos(self.env, self.cfg.get("indicator", "heldout"), seed, stream="heldout")

    def segments(self, seed: int, data: Dataset) -> List[Tuple[int, ...]]:
        _, path = self._artifact("segment", seed, None, ".jsonl")
        if path.exists():
            logger.info("segment seed %d: cache hit %s", seed, path)
            return change_index_sets(load_segmentations(path))
        params = self.cfg.seg_params()
        results = [segment_dp(traj, params) for traj in
                   tqdm(data, desc="segment", disable=not self.progress)]
        save_segmentations(path, results, params)
        logger.info("segment seed %d: wrote %s", seed, path)
        return [r.change_indices for r in results]

    def indicator(self, seed: int, data: Dataset, segments) -> IndicatorModel:
        _, path = self._artifact("indicator", seed, None, ".ckpt")
        if path.exists():
            logger.info("indicator seed %d: cache hit %s", seed, path)
            return load_indicator(path)
        model = fit_indicator(self.cfg, seed, data, segments)
        save_indicator(model, path, {"seed": seed, "noise_p": self.cfg.get("indicator", "noise_p")})
        logger.info("indicator seed %d: wrote %s", seed, path)
        return model

    def rho(self, mode: str, data: Dataset, segments, model: Optional[IndicatorModel]):
        return rho_series(self.cfg, mode, data, segments, model)

    def policy(self, mode: str, seed: int, data: Dataset, segments,
               model: Optional[IndicatorModel]) -> VPPolicy:
        _, path = self._artifact("policy", seed, mode, ".ckpt")
        curve_path = path.with_suffix(".curve.jsonl")
        if path.exists() and curve_path.exists():
            logger.info("policy %s seed %d: cache hit %s", mode, seed, path)
            return load_policy(path)
        pcfg, tcfg = configure_mode(mode, self.cfg.policy_config(), self.cfg.train_config(seed))
        result = bc_train(data, pcfg, tcfg, self.rho(mode, data, segments, model))
        write_frame_lines(curve_path, result.curve)
        save_policy(result.policy, path, {"mode": mode, "seed": seed})
        logger.info("policy %s seed %d: wrote %s", mode, seed, path)
        return result.policy

    def evaluate(self, mode: str, seed: int, policy: VPPolicy):
        _, path = self._artifact("evaluate", seed, mode, ".jsonl")
        if path.exists():
            logger.info("evaluate %s seed %d: cache hit %s", mode, seed, path)
            return read_frame_lines(path)
        frames = [evaluate(policy, self.env, self.cfg.get("eval", f"n_{dist}"), dist, seed,
                           progress=self.progress).episodes for dist in ("id", "ood")]
        episodes = pd.concat(frames, ignore_index=True)
        write_frame_lines(path, episodes)
        return episodes

    def intervene(self, seed: int, alt_mode: str, base: VPPolicy, alt: VPPolicy) -> Dict:
        _, path = self._artifact("intervene", seed, alt_mode, ".jsonl")
        summary_path = path.with_suffix(".summary.json")
        if path.exists() and summary_path.exists():
            logger.info("intervene %s seed %d: cache hit %s", alt_mode, seed, path)
            return {"pairs": read_frame_lines(path), "summary": read_json(summary_path)}
        e = self.cfg.values["eval"]
        result = intervention_experiment(
            base, alt, self.env, window_width=e["window_width"],
            seeds=episode_seeds(seed, e["intervene_rollouts"], "id"), stride=e["stride"],
            margin=e["margin"], progress=self.progress)
        summary = {
            "baseline_rate": result.baseline_rate,
            "transition_drop": result.drop(TRANSITION),
            "consistent_drop": result.drop(CONSISTENT),
        }
        write_frame_lines(path, result.pairs)
        write_json(summary_path, summary)
        return {"pairs": result.pairs, "summary": summary}

    def probe(self, seed: int, source: str, vision: ParamGroup, data: Dataset) -> Dict:
        _, path = self._artifact("probe", seed, source, ".json")
        if path.exists():
            logger.info("probe %s seed %d: cache hit %s", source, seed, path)
            return read_json(path)
        tcfg = self.cfg.train_config(seed)
        tcfg = replace(tcfg, epochs=self.cfg.get("eval", "probe_epochs"), gap_epochs=0)
        result = linear_probe(vision, data, tcfg, self.cfg.policy_config())
        rates = {dist: evaluate(result.policy, self.env, self.cfg.get("eval", f"n_{dist}"),
                                dist, seed).success_rate for dist in ("id", "ood")}
        write_json(path, rates)
        return rates

    def untrained_vision(self, seed: int, data: Dataset) -> ParamGroup:
        pcfg, _ = configure_mode("vision", self.cfg.policy_config(), self.cfg.train_config(seed))
        s = data.schema
        return VPPolicy(pcfg, s.obs_dim, s.proprio_dim, s.action_dim,
                        rng=make_rng(seed, "probe", "untrained")).vision

    # -- driver -----------------------------------------------------------

    def run_seed(self, seed: int) -> None:
        cell_root = self.out_dir / "cells"
        data = self._guard("demos", seed, None, self.demos, seed)
        segments = self._guard("segment", seed, None, self.segments, seed, data)
        tolerance = self.cfg.get("segment", "tolerance")
        seg_rows = []
        for traj_id, (traj, indices) in enumerate(zip(data, segments)):
            precision, recall = boundary_precision_recall(indices, traj.boundaries, tolerance)
            seg_rows.append({"seed": seed, "traj_id": traj_id, "n_changes": len(indices),
                             "n_boundaries": len(traj.boundaries),
                             "precision": precision, "recall": recall})
        write_lines(self.out_dir / "segmentation" / f"seed{seed}.jsonl", seg_rows)

        model = None
        if self._needs_indicator():
            model = self._guard("indicator", seed, None, self.indicator, seed, data, segments)
            self._indicator_outputs(seed, model)

        policies = {}
        for mode in self.cfg.modes:
            policy = self._guard("policy", seed, mode, self.policy, mode, seed, data,
                                 segments, model)
            policies[mode] = policy
            episodes = self._guard("evaluate", seed, mode, self.evaluate, mode, seed, policy)
            cell = cell_root / mode / f"seed{seed}"
            write_frame_lines(cell / "episodes.jsonl", episodes)
            _, ckpt = self._artifact("policy", seed, mode, ".ckpt")
            write_frame_lines(cell / "curve.jsonl",
                              read_frame_lines(ckpt.with_suffix(".curve.jsonl")))
            write_json(cell / "cell.json", {"task": self.env.task, "mode": mode, "seed": seed,
                                            "key": self.cfg.stage_key("evaluate", seed, mode)})

        if self.cfg.get("eval", "intervention") and "vision" in policies:
            for alt in INTERVENTION_ALTS:
                if alt in policies:
                    out = self._guard("intervene", seed, alt, self.intervene, seed, alt,
                                      policies["vision"], policies[alt])
                    write_frame_lines(self.out_dir / "intervention" / f"seed{seed}_{alt}.jsonl",
                                      out["pairs"])
                    write_json(self.out_dir / "intervention" / f"seed{seed}_{alt}.json",
                               out["summary"])

        if self.cfg.get("eval", "probe"):
            sources = {"untrained": self.untrained_vision(seed, data)}
            sources.update({m: policies[m].vision for m in PROBE_SOURCES if m in policies})
            rows = []
            for source, vision in sources.items():
                rates = self._guard("probe", seed, source, self.probe, seed, source, vision, data)
                rows += [{"seed": seed, "source": source, "dist": d, "success_rate": r}
                         for d, r in sorted(rates.items())]
            write_lines(self.out_dir / "probe" / f"seed{seed}.jsonl", rows)

    def _indicator_outputs(self, seed: int, model: IndicatorModel) -> None:
        heldout = self.heldout(seed)
        window = self.cfg.get("indicator", "window")
        series = [predict_rho(model, traj).rho for traj in heldout]
        auc = transition_auc(series, [traj.boundaries for traj in heldout], window)
        root = self.out_dir / "indicator"
        write_json(root / f"seed{seed}.json", {"seed": seed, "auc": auc,
                                               "final_loss": model.final_loss})
        write_lines(root / f"seed{seed}_curve.jsonl",
                    [{"epoch": i, "loss": v} for i, v in enumerate(model.loss_curve)])
        first = heldout[0]
        write_lines(root / f"seed{seed}_rho.jsonl",
                    [{"t": t, "rho": float(r), "boundary": t in first.boundaries}
                     for t, r in enumerate(series[0])])
        logger.info("indicator seed %d: held-out transition AUC %.3f", seed, auc)

    def run(self) -> "reporting.ExperimentReport":
        write_json(self.out_dir / "plan.json", {
            "config_hash": self.cfg.hash,
            "task": self.env.task,
            "seeds": self.cfg.seeds,
            "modes": self.cfg.modes,
        })
        atomic_write_text(self.out_dir / "config.ini", self.cfg.to_ini())
        for seed in tqdm(self.cfg.seeds, desc="seeds", disable=not self.progress):
            self.run_seed(seed)
        return reporting.report(self.out_dir)


def run_pipeline(cfg: RunConfig, dry_run: bool = False, progress: bool = False):
    """Run every stage (or, with ``dry_run``, return the stage plan without touching disk)."""
    pipeline = Pipeline(cfg, progress=progress)
    if dry_run:
        return pipeline.plan()
    return pipeline.run()

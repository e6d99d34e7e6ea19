"""
Consolidated experiment report.

Reads the cell outputs a pipeline run left in its output directory, loads
the raw per-episode logs into an EpisodeStore and aggregates them with SQL,
so every number in a table can be recomputed from those logs. Tables are
written as CSV, figures as standalone plotly HTML. Nothing time-dependent
is written, so a report is a pure function of the cell outputs.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List

import pandas as pd
import plotly.graph_objects as go

import cli
from analytics.stats import (
    compute_summary_stats, ordering_holds, paired_difference, summarize_over_seeds,
    wilson_interval,
)
from cli.cache import atomic_write_text, read_frame_lines, read_json, write_json
from storage.store import EpisodeStore

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.10g"
# modes in the order the OOD comparison expects their means to fall
OOD_ORDER = ("gap", "vision", "concat")


@dataclass
class ExperimentReport:
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    provenance: Dict = field(default_factory=dict)
    missing: List[str] = field(default_factory=list)
    figures: Dict[str, go.Figure] = field(default_factory=dict)

    def write(self, root) -> Path:
        out = Path(root) / "report"
        for name, table in sorted(self.tables.items()):
            atomic_write_text(out / f"{name}.csv",
                              table.to_csv(index=False, float_format=FLOAT_FORMAT,
                                           lineterminator="\n"))
        for name, fig in sorted(self.figures.items()):
            atomic_write_text(out / f"{name}.html",
                              fig.to_html(include_plotlyjs="cdn", full_html=True, div_id=name))
        write_json(out / "report.json", {
            "provenance": self.provenance,
            "missing": self.missing,
            "tables": sorted(self.tables),
        })
        logger.info("report written to %s (%d tables, %d missing cells)", out,
                    len(self.tables), len(self.missing))
        return out


def _frames(paths, **extra) -> pd.DataFrame:
    frames = []
    for path in paths:
        df = read_frame_lines(path)
        for key, fn in extra.items():
            df[key] = fn(path)
        frames.append(df)
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()


def _seed_of(path: Path) -> int:
    return int(path.stem.split("_")[0].replace("seed", ""))


def _success_tables(store: EpisodeStore, tables: Dict[str, pd.DataFrame]) -> pd.DataFrame:
    per_seed = store.seed_rates()
    tables["success_per_seed"] = per_seed
    summary = summarize_over_seeds(per_seed, ["task", "mode", "dist"])
    pooled = store.pooled_counts()
    bounds = [wilson_interval(s, n) for s, n in zip(pooled["successes"], pooled["episodes"])]
    pooled["wilson_low"] = [b[0] for b in bounds]
    pooled["wilson_high"] = [b[1] for b in bounds]
    tables["success"] = summary.merge(pooled, on=["task", "mode", "dist"], how="left")
    return per_seed


def _ordering_table(per_seed: pd.DataFrame) -> pd.DataFrame:
    rows = []
    for (task, dist), group in per_seed.groupby(["task", "dist"], sort=True):
        means = group.groupby("mode")["success_rate"].mean().to_dict()
        gap_concat = paired_difference(group, "gap", "concat")
        gap_vision = paired_difference(group, "gap", "vision")
        per_seed_order = group.pivot_table(index="seed", columns="mode", values="success_rate")
        holds = sum(ordering_holds(row.to_dict(), OOD_ORDER)
                    for _, row in per_seed_order.iterrows())
        rows.append({
            "task": task,
            "dist": dist,
            "gap_minus_concat": gap_concat.mean() if len(gap_concat) else float("nan"),
            "gap_minus_vision": gap_vision.mean() if len(gap_vision) else float("nan"),
            "mean_order_holds": ordering_holds(means, OOD_ORDER),
            "seeds_order_holds": int(holds),
            "n_seeds": int(len(per_seed_order)),
        })
    return pd.DataFrame(rows)


def _loss_figure(curves: pd.DataFrame) -> go.Figure:
    fig = go.Figure()
    mean = curves.groupby(["mode", "epoch"], sort=True)["train_loss"].mean().reset_index()
    for mode, group in mean.groupby("mode", sort=True):
        fig.add_trace(go.Scatter(x=group["epoch"], y=group["train_loss"], mode="lines",
                                 name=mode))
    fig.update_layout(title="Training loss (mean over seeds)", xaxis_title="epoch",
                      yaxis_title="MSE", yaxis_type="log")
    return fig


def _intervention_figure(windows: pd.DataFrame) -> go.Figure:
    fig = go.Figure()
    for alt, group in windows.groupby("alt", sort=True):
        fig.add_trace(go.Scatter(x=group["t0"], y=group["success_rate"],
                                 mode="lines+markers", name=f"vision + {alt} window"))
    fig.update_layout(title="Success with substituted actions", xaxis_title="window start",
                      yaxis_title="success rate")
    return fig


def _rho_figure(traces: pd.DataFrame) -> go.Figure:
    fig = go.Figure()
    for seed, group in traces.groupby("seed", sort=True):
        fig.add_trace(go.Scatter(x=group["t"], y=group["rho"], mode="lines",
                                 name=f"seed {seed}"))
        marks = group[group["boundary"]]
        fig.add_trace(go.Scatter(x=marks["t"], y=marks["rho"], mode="markers",
                                 name=f"boundaries (seed {seed})", marker_symbol="x"))
    fig.update_layout(title="Transition indicator on a held-out demonstration",
                      xaxis_title="t", yaxis_title="rho")
    return fig


def build_report(root) -> ExperimentReport:
    """Aggregate whatever cells exist under ``root``; expected but absent cells are listed."""
    root = Path(root)
    plan = read_json(root / "plan.json") if (root / "plan.json").exists() else {}
    report = ExperimentReport(provenance={
        "config_hash": plan.get("config_hash"),
        "code_version": cli.__version__,
    })
    tables = report.tables

    store = EpisodeStore()
    cells = sorted((root / "cells").glob("*/seed*/cell.json"))
    found = set()
    for cell_file in cells:
        cell = read_json(cell_file)
        episodes_path = cell_file.parent / "episodes.jsonl"
        if not episodes_path.exists():
            continue
        store.insert_episodes(cell["task"], cell["mode"], cell["seed"],
                              read_frame_lines(episodes_path))
        found.add((cell["mode"], int(cell["seed"])))
    for mode in plan.get("modes", []):
        for seed in plan.get("seeds", []):
            if (mode, seed) not in found:
                report.missing.append(f"{mode}/seed{seed}")
    report.provenance["cells"] = len(found)

    if found:
        per_seed = _success_tables(store, tables)
        tables["ordering"] = _ordering_table(per_seed)
    store.close()

    curve_paths = sorted((root / "cells").glob("*/seed*/curve.jsonl"))
    if curve_paths:
        curves = _frames(curve_paths, mode=lambda p: p.parent.parent.name,
                         seed=lambda p: int(p.parent.name.replace("seed", "")))
        tables["loss_curves"] = curves[["mode", "seed", "epoch", "train_loss", "rho_mean"]]
        report.figures["loss_curves"] = _loss_figure(curves)

    seg_paths = sorted((root / "segmentation").glob("seed*.jsonl"))
    if seg_paths:
        seg = _frames(seg_paths)
        seg["recovered"] = (seg["precision"] == 1.0) & (seg["recall"] == 1.0)
        tables["segmentation"] = (seg.groupby("seed", sort=True)
                                  .agg(precision=("precision", "mean"),
                                       recall=("recall", "mean"),
                                       mean_changes=("n_changes", "mean"),
                                       recovered_share=("recovered", "mean"))
                                  .reset_index())

    ind_paths = sorted((root / "indicator").glob("seed*.json"))
    ind_paths = [p for p in ind_paths if "_" not in p.stem]
    if ind_paths:
        ind = pd.DataFrame([read_json(p) for p in ind_paths]).sort_values("seed")
        stats = compute_summary_stats(ind["auc"])
        ind_summary = pd.DataFrame([{"seed": "mean", "auc": stats["mean"],
                                     "final_loss": ind["final_loss"].mean()}])
        tables["indicator"] = pd.concat([ind.astype({"seed": str}), ind_summary],
                                        ignore_index=True)
        rho_paths = sorted((root / "indicator").glob("seed*_rho.jsonl"))
        if rho_paths:
            report.figures["rho_traces"] = _rho_figure(_frames(rho_paths, seed=_seed_of))

    iv_paths = sorted((root / "intervention").glob("seed*_*.json"))
    if iv_paths:
        rows = []
        for p in iv_paths:
            seed_part, alt = p.stem.split("_", 1)
            rows.append({"seed": int(seed_part.replace("seed", "")), "alt": alt, **read_json(p)})
        tables["intervention"] = pd.DataFrame(rows).sort_values(["alt", "seed"])
        pairs = _frames(sorted((root / "intervention").glob("seed*_*.jsonl")),
                        alt=lambda p: p.stem.split("_", 1)[1])
        pairs["success"] = pairs["success"].astype(float)
        windows = (pairs.groupby(["alt", "t0"], sort=True)["success"].mean()
                   .rename("success_rate").reset_index())
        tables["intervention_windows"] = windows
        report.figures["intervention"] = _intervention_figure(windows)

    probe_paths = sorted((root / "probe").glob("seed*.jsonl"))
    if probe_paths:
        probe = _frames(probe_paths)
        tables["probe"] = summarize_over_seeds(probe, ["source", "dist"])

    return report


def report(root) -> ExperimentReport:
    """Build and write the report for ``root``."""
    rep = build_report(root)
    rep.write(root)
    if rep.missing:
        logger.warning("missing cells: %s", ", ".join(rep.missing))
    return rep

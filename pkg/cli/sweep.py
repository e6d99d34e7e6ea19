"""One pipeline run per value of a single hyperparameter, combined into one table."""
import logging
from typing import Sequence

import pandas as pd

import cli
from cli.config import RunConfig, replace_out_dir, unparse, with_value
from cli.pipeline import run_pipeline
from cli.report import ExperimentReport
from trajcore.errors import ConfigError

logger = logging.getLogger(__name__)

# sweep name -> (section, key)
SWEEP_PARAMETERS = {
    "alpha": ("segment", "alpha"),
    "beta": ("segment", "beta"),
    "lambda": ("train", "lam"),
    "x": ("train", "gap_epochs"),
    "mask_prob": ("train", "mask_prob"),
    "rho_fixed": ("train", "rho_fixed"),
}


def sweep(cfg: RunConfig, parameter: str, values: Sequence, progress: bool = False
          ) -> ExperimentReport:
    """
    Run the configured matrix once per value. Stage caches are keyed on the
    config subset a stage reads, so unaffected stages (demos, and segmentation
    unless alpha or beta move) are shared between values.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"unknown sweep parameter {parameter!r}; "
                          f"expected one of {sorted(SWEEP_PARAMETERS)}")
    values = list(values)
    if not values:
        raise ConfigError(f"sweep over {parameter} needs at least one value")
    section, key = SWEEP_PARAMETERS[parameter]
    root = cfg.out_dir / f"sweep-{parameter}"

    frames = []
    missing = []
    hashes = {}
    for value in values:
        text = unparse(value)
        cell_cfg = with_value(cfg, section, key, text)
        cell_cfg = replace_out_dir(cell_cfg, root / text)
        logger.info("sweep %s=%s -> %s", parameter, text, cell_cfg.out_dir)
        report = run_pipeline(cell_cfg, progress=progress)
        hashes[text] = cell_cfg.hash
        missing += [f"{text}:{cell}" for cell in report.missing]
        if "success" in report.tables:
            table = report.tables["success"].copy()
            table.insert(0, "value", text)
            table.insert(0, "parameter", parameter)
            frames.append(table)

    combined = ExperimentReport(
        tables={"sweep": pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()},
        provenance={"parameter": parameter, "config_hashes": hashes,
                    "code_version": cli.__version__},
        missing=missing,
    )
    combined.write(root)
    return combined

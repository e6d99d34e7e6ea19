"""
Demonstration file I/O.

Line-delimited JSON, UTF-8. Line 1 is the header
``{"version": 1, "D_p", "D_theta", "action_dim", "obs_dim"}``; every further
line is one timestep ``{"traj_id", "t", "p", ["theta"], "g", "action", "obs"}``.
The t = 0 record of a trajectory additionally carries its ``meta`` object.
Floats are written with ``repr`` precision, so load(save(ds)) == ds bit-exactly.
"""
import json
import logging
import os
from pathlib import Path

import numpy as np

from trajcore.errors import FormatError
from trajcore.types import Dataset, DatasetSchema, Trajectory

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

_SEPARATORS = (",", ":")


def _floats(values):
    return [float(v) for v in values]


def _encode_header(schema: DatasetSchema) -> str:
    return json.dumps({
        "version": FORMAT_VERSION,
        "D_p": schema.dim_p,
        "D_theta": schema.dim_theta,
        "action_dim": schema.action_dim,
        "obs_dim": schema.obs_dim,
    }, separators=_SEPARATORS)


def _encode_records(traj_id: int, traj: Trajectory):
    for t in range(len(traj)):
        record = {"traj_id": traj_id, "t": t, "p": _floats(traj.positions[t])}
        if traj.dim_theta:
            record["theta"] = _floats(traj.orientations[t])
        record["g"] = float(traj.openings[t])
        record["action"] = _floats(traj.actions[t])
        record["obs"] = _floats(traj.obs[t])
        if t == 0 and traj.meta:
            record["meta"] = traj.meta
        yield json.dumps(record, separators=_SEPARATORS)


def save_dataset(ds: Dataset, path) -> None:
    """Write ``ds`` to ``path`` atomically (temp file + rename)."""
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_encode_header(ds.schema) + "\n")
        for traj_id, traj in enumerate(ds.trajectories):
            for line in _encode_records(traj_id, traj):
                fh.write(line + "\n")
    os.replace(tmp, path)
    logger.debug("wrote %d trajectories to %s", len(ds), path)


def _require(record: dict, key: str, path, line_no: int):
    if key not in record:
        raise FormatError(f"record is missing '{key}'", path, line_no)
    return record[key]


def _vector(record, key, dim, path, line_no) -> list:
    values = _require(record, key, path, line_no)
    if not isinstance(values, list) or len(values) != dim:
        raise FormatError(f"'{key}' must be a list of {dim} numbers", path, line_no)
    try:
        return [float(v) for v in values]
    except (TypeError, ValueError):
        raise FormatError(f"'{key}' contains a non-numeric value", path, line_no) from None


def _parse_header(line: str, path) -> DatasetSchema:
    try:
        header = json.loads(line)
    except json.JSONDecodeError as e:
        raise FormatError(f"header is not valid JSON ({e.msg})", path, 1) from None
    if not isinstance(header, dict):
        raise FormatError("header must be a JSON object", path, 1)
    version = header.get("version")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version!r}", path, 1)
    try:
        return DatasetSchema(int(header["D_p"]), int(header["D_theta"]),
                             int(header["action_dim"]), int(header["obs_dim"]))
    except KeyError as e:
        raise FormatError(f"header is missing {e}", path, 1) from None
    except ValueError as e:
        raise FormatError(f"schema mismatch: {e}", path, 1) from None


class _TrajectoryBuilder:
    def __init__(self, traj_id: int, meta: dict):
        self.traj_id = traj_id
        self.meta = meta
        self.p, self.theta, self.g, self.action, self.obs = [], [], [], [], []

    def build(self, schema: DatasetSchema, path, line_no: int) -> Trajectory:
        try:
            return Trajectory(
                np.array(self.p).reshape(len(self.p), schema.dim_p),
                np.array(self.theta).reshape(len(self.p), schema.dim_theta),
                np.array(self.g),
                np.array(self.action).reshape(len(self.p), schema.action_dim),
                np.array(self.obs).reshape(len(self.p), schema.obs_dim),
                self.meta,
            )
        except ValueError as e:
            raise FormatError(f"trajectory {self.traj_id} is invalid: {e}", path, line_no) from None


def load_dataset(path) -> Dataset:
    """Read a demonstration file; any defect raises FormatError naming the line."""
    path = Path(path)
    trajectories = []
    builder = None
    last_line = 1
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first:
            raise FormatError("file is empty (missing header)", path, 1)
        schema = _parse_header(first, path)
        for line_no, line in enumerate(fh, start=2):
            last_line = line_no
            if not line.strip():
                raise FormatError("blank line", path, line_no)
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise FormatError(f"malformed record ({e.msg})", path, line_no) from None
            if not isinstance(record, dict):
                raise FormatError("record must be a JSON object", path, line_no)
            traj_id = _require(record, "traj_id", path, line_no)
            t = _require(record, "t", path, line_no)
            if builder is None or traj_id != builder.traj_id:
                if builder is not None:
                    trajectories.append(builder.build(schema, path, line_no - 1))
                if traj_id != len(trajectories):
                    raise FormatError(f"expected traj_id {len(trajectories)}, got {traj_id}",
                                      path, line_no)
                builder = _TrajectoryBuilder(traj_id, record.get("meta", {}))
            if t != len(builder.p):
                raise FormatError(f"expected t = {len(builder.p)}, got {t}", path, line_no)
            builder.p.append(_vector(record, "p", schema.dim_p, path, line_no))
            if schema.dim_theta:
                builder.theta.append(_vector(record, "theta", schema.dim_theta, path, line_no))
            elif "theta" in record:
                raise FormatError("'theta' present although D_theta = 0", path, line_no)
            g = _require(record, "g", path, line_no)
            if not isinstance(g, (int, float)) or isinstance(g, bool):
                raise FormatError("'g' must be a number", path, line_no)
            builder.g.append(float(g))
            builder.action.append(_vector(record, "action", schema.action_dim, path, line_no))
            builder.obs.append(_vector(record, "obs", schema.obs_dim, path, line_no))
    if builder is not None:
        trajectories.append(builder.build(schema, path, last_line))
    logger.debug("loaded %d trajectories from %s", len(trajectories), path)
    return Dataset(schema, tuple(trajectories))

import json

import numpy as np
import pytest

from tests.conftest import random_trajectory
from trajcore.dataset import load_dataset, save_dataset
from trajcore.errors import ArgumentError, FormatError
from trajcore.types import Dataset, DatasetSchema, Trajectory


def test_empty_dataset_round_trips(tmp_path):
    ds = Dataset(DatasetSchema(2, 0, 3, 4))
    path = tmp_path / "empty.jsonl"
    save_dataset(ds, path)
    assert path.read_text().count("\n") == 1
    loaded = load_dataset(path)
    assert loaded.schema == ds.schema
    assert len(loaded) == 0


def test_single_short_trajectory_round_trips(tmp_path, rng):
    ds = Dataset.from_trajectories([random_trajectory(rng, 3)])
    path = tmp_path / "one.jsonl"
    save_dataset(ds, path)
    assert len(path.read_text().splitlines()) == 4
    assert load_dataset(path) == ds


def test_random_datasets_round_trip_byte_identical(tmp_path, rng):
    trajectories = [random_trajectory(rng, int(rng.integers(2, 12)), dim_theta=3,
                                      meta={"seed": i, "boundaries": [1]})
                    for i in range(100)]
    ds = Dataset.from_trajectories(trajectories)
    first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    save_dataset(ds, first)
    loaded = load_dataset(first)
    assert loaded == ds
    save_dataset(loaded, second)
    assert first.read_bytes() == second.read_bytes()


def test_theta_omitted_without_orientation(tmp_path, rng):
    path = tmp_path / "flat.jsonl"
    save_dataset(Dataset.from_trajectories([random_trajectory(rng, 3)]), path)
    records = [json.loads(line) for line in path.read_text().splitlines()[1:]]
    assert all("theta" not in r for r in records)


def _write(path, lines):
    path.write_text("".join(json.dumps(line) + "\n" for line in lines))


HEADER = {"version": 1, "D_p": 2, "D_theta": 0, "action_dim": 1, "obs_dim": 1}


def _record(t, **overrides):
    record = {"traj_id": 0, "t": t, "p": [0.0, 0.0], "g": 0.5, "action": [0.0], "obs": [0.0]}
    record.update(overrides)
    return record


def test_version_mismatch_names_line_one(tmp_path):
    path = tmp_path / "v2.jsonl"
    _write(path, [dict(HEADER, version=2)])
    with pytest.raises(FormatError) as info:
        load_dataset(path)
    assert info.value.line == 1


def test_malformed_record_names_its_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    _write(path, [HEADER, _record(0), _record(1, p=[0.0])])
    with pytest.raises(FormatError) as info:
        load_dataset(path)
    assert info.value.line == 3


def test_non_json_record(tmp_path):
    path = tmp_path / "garbage.jsonl"
    path.write_text(json.dumps(HEADER) + "\n" + "{not json\n")
    with pytest.raises(FormatError) as info:
        load_dataset(path)
    assert info.value.line == 2


def test_schema_mismatch_in_header(tmp_path):
    path = tmp_path / "schema.jsonl"
    _write(path, [dict(HEADER, D_p=4)])
    with pytest.raises(FormatError):
        load_dataset(path)


def test_dataset_rejects_nonconforming_trajectory(rng):
    with pytest.raises(ArgumentError):
        Dataset(DatasetSchema(2, 0, 3, 4), (random_trajectory(rng, 3, obs_dim=5),))


def test_scaling_rejects_openings_above_one():
    traj = Trajectory(np.zeros((3, 2)), None, np.full(3, 0.6), np.zeros((3, 3)), np.zeros((3, 4)))
    assert np.array_equal(traj.scaled(1.5).openings, np.full(3, 0.6) * 1.5)
    with pytest.raises(ArgumentError):
        traj.scaled(2.0)
    with pytest.raises(ArgumentError):
        traj.scaled(0.0)

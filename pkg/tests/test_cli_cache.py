import json

import numpy as np
import pandas as pd

from cli.cache import (
    ArtifactCache, atomic_write_text, read_frame_lines, read_json, read_lines,
    write_frame_lines, write_json, write_lines,
)


def test_artifact_paths_use_a_key_prefix(tmp_path):
    cache = ArtifactCache(tmp_path)
    path = cache.path("policy", "0123456789abcdef0123", ".ckpt")
    assert path == tmp_path / "policy" / "0123456789abcdef.ckpt"
    assert not cache.has(path)
    atomic_write_text(path, "x")
    assert cache.has(path)


def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "nested" / "out.txt"
    atomic_write_text(target, "first")
    atomic_write_text(target, "second")
    assert target.read_text() == "second"
    assert [p.name for p in target.parent.iterdir()] == ["out.txt"]


def test_json_is_sorted_and_indented(tmp_path):
    path = tmp_path / "a.json"
    write_json(path, {"b": 1, "a": [1, 2]})
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert text.endswith("}\n")
    assert read_json(path) == {"a": [1, 2], "b": 1}


def test_nan_becomes_null(tmp_path):
    path = tmp_path / "rows.jsonl"
    write_lines(path, [{"x": float("nan"), "y": np.float64(1.5), "n": np.int64(3)}])
    assert json.loads(path.read_text()) == {"x": None, "y": 1.5, "n": 3}
    assert read_lines(path) == [{"x": None, "y": 1.5, "n": 3}]


def test_frame_lines_round_trip(tmp_path):
    path = tmp_path / "frame.jsonl"
    df = pd.DataFrame({"seed": [0, 1], "success": [True, False], "steps": [12, 80]})
    write_frame_lines(path, df)
    pd.testing.assert_frame_equal(read_frame_lines(path), df)

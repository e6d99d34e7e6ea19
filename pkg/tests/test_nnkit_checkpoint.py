import hashlib
import json

import numpy as np
import pytest

from nnkit.checkpoint import decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from nnkit.params import ParamGroup
from trajcore.errors import FormatError


def _groups(rng):
    return [
        ParamGroup("vision", "vision", {"fc.W": rng.normal(size=(4, 3)), "fc.b": rng.normal(size=3)}),
        ParamGroup("proprio", "proprio", {"fc.W": rng.normal(size=(2, 3))}),
        ParamGroup("normalizer", "indicator", {"mean": np.zeros(0)}),
    ]


def test_empty_group_list_round_trips(tmp_path):
    path = tmp_path / "empty.ckpt"
    save_checkpoint([], path)
    ckpt = load_checkpoint(path)
    assert ckpt.groups == [] and ckpt.meta == {}


def test_parameters_tags_and_meta_round_trip(tmp_path, rng):
    groups = _groups(rng)
    path = tmp_path / "model.ckpt"
    save_checkpoint(groups, path, {"mode": "gap", "lam": 1.0})
    ckpt = load_checkpoint(path)
    assert [(g.name, g.tag) for g in ckpt.groups] == [(g.name, g.tag) for g in groups]
    assert ckpt.meta == {"mode": "gap", "lam": 1.0}
    for original, loaded in zip(groups, ckpt.groups):
        for key, value in original.params.items():
            np.testing.assert_array_equal(loaded.params[key], value)
    assert encode_checkpoint(ckpt.groups, ckpt.meta) == path.read_bytes()


def test_flipped_byte_is_detected(tmp_path, rng):
    path = tmp_path / "model.ckpt"
    save_checkpoint(_groups(rng), path)
    blob = bytearray(path.read_bytes())
    blob[len(blob) // 2] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(FormatError):
        load_checkpoint(path)


def test_truncated_file(tmp_path):
    path = tmp_path / "short.ckpt"
    path.write_bytes(b"{}")
    with pytest.raises(FormatError):
        load_checkpoint(path)


def _sealed(header, payload=b""):
    body = json.dumps(header).encode("utf-8") + b"\n" + payload
    return body + hashlib.sha256(body).digest()


def test_version_mismatch():
    with pytest.raises(FormatError, match="version"):
        decode_checkpoint(_sealed({"version": 2, "groups": [], "meta": {}}))


def test_payload_length_must_match_header():
    header = {"version": 1, "groups": [{"name": "g", "tag": "head",
                                        "tensors": [{"name": "w", "shape": [2]}]}]}
    with pytest.raises(FormatError):
        decode_checkpoint(_sealed(header, np.zeros(3).tobytes()))
    with pytest.raises(FormatError):
        decode_checkpoint(_sealed(header, np.zeros(1).tobytes()))

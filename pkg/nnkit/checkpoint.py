"""
Checkpoint files.

Layout: one UTF-8 JSON header line
``{"version", "groups": [{"name", "tag", "tensors": [{"name", "shape"}]}], "meta"}``,
then every tensor as raw little-endian float64 in declaration order, then a
32-byte SHA-256 digest of everything before it.
"""
import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional

import numpy as np

from nnkit.params import ParamGroup
from trajcore.errors import FormatError

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
_DIGEST_SIZE = 32
_LE_F64 = np.dtype("<f8")


class Checkpoint(NamedTuple):
    groups: List[ParamGroup]
    meta: Dict


def encode_checkpoint(groups: List[ParamGroup], meta: Optional[Dict] = None) -> bytes:
    header = {
        "version": CHECKPOINT_VERSION,
        "groups": [
            {"name": g.name, "tag": g.tag,
             "tensors": [{"name": k, "shape": list(v.shape)} for k, v in g.params.items()]}
            for g in groups
        ],
        "meta": meta or {},
    }
    body = json.dumps(header, separators=(",", ":")).encode("utf-8") + b"\n"
    body += b"".join(np.ascontiguousarray(v, dtype=_LE_F64).tobytes()
                     for g in groups for v in g.params.values())
    return body + hashlib.sha256(body).digest()


def decode_checkpoint(blob: bytes, path=None) -> Checkpoint:
    if len(blob) < _DIGEST_SIZE + 2:
        raise FormatError("checkpoint is truncated", path)
    body, digest = blob[:-_DIGEST_SIZE], blob[-_DIGEST_SIZE:]
    if hashlib.sha256(body).digest() != digest:
        raise FormatError("checkpoint checksum mismatch (corrupt file)", path)
    newline = body.find(b"\n")
    if newline < 0:
        raise FormatError("checkpoint header is not terminated", path)
    try:
        header = json.loads(body[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise FormatError("checkpoint header is not valid JSON", path) from None
    if header.get("version") != CHECKPOINT_VERSION:
        raise FormatError(f"unsupported checkpoint version {header.get('version')!r}", path)
    payload = body[newline + 1:]
    offset = 0
    groups = []
    try:
        for entry in header["groups"]:
            params = {}
            for tensor in entry["tensors"]:
                shape = tuple(tensor["shape"])
                count = int(np.prod(shape, dtype=np.int64))
                end = offset + count * _LE_F64.itemsize
                if end > len(payload):
                    raise FormatError("checkpoint payload is shorter than declared", path)
                params[tensor["name"]] = np.frombuffer(
                    payload[offset:end], dtype=_LE_F64).astype(np.float64).reshape(shape)
                offset = end
            groups.append(ParamGroup(entry["name"], entry["tag"], params))
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, FormatError):
            raise
        raise FormatError(f"checkpoint header is malformed: {e}", path) from None
    if offset != len(payload):
        raise FormatError("checkpoint payload is longer than declared", path)
    return Checkpoint(groups, header.get("meta", {}))


def save_checkpoint(groups: List[ParamGroup], path, meta: Optional[Dict] = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(encode_checkpoint(groups, meta))
    os.replace(tmp, path)
    logger.debug("saved checkpoint with %d groups to %s", len(groups), path)


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    return decode_checkpoint(path.read_bytes(), path)

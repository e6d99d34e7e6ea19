"""
Content-addressed artifact cache.

Artifacts live at ``<root>/<stage>/<key[:16]><suffix>``. Every writer goes
through a temp file and ``os.replace``, so concurrent writers of the same key
leave one complete file behind.
"""
import json
import logging
import os
from pathlib import Path
from typing import Iterable, List

import pandas as pd

logger = logging.getLogger(__name__)

KEY_CHARS = 16


class ArtifactCache:
    def __init__(self, root):
        self.root = Path(root)

    def path(self, stage: str, key: str, suffix: str) -> Path:
        return self.root / stage / f"{key[:KEY_CHARS]}{suffix}"

    def has(self, *paths: Path) -> bool:
        return all(p.exists() for p in paths)


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f"{path.name}.{os.getpid()}.tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _jsonable(value):
    if isinstance(value, float) and value != value:
        return None
    if hasattr(value, "item"):
        return _jsonable(value.item())
    return value


def write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def write_lines(path, records: Iterable[dict]) -> None:
    """Line-delimited JSON; NaN becomes null."""
    lines = [json.dumps({k: _jsonable(v) for k, v in r.items()}, separators=(",", ":"))
             for r in records]
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def write_frame_lines(path, df: pd.DataFrame) -> None:
    write_lines(path, df.to_dict(orient="records"))


def read_lines(path) -> List[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def read_frame_lines(path) -> pd.DataFrame:
    return pd.DataFrame(read_lines(path))

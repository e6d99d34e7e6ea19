"""
Segmentation result files: one JSON object per line,
``{"traj_id", "change_indices", "total_cost", "params_echo"}``.
"""
import json
import os
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

from segment.cpd import SegmentationResult
from segment.params import SegParams
from trajcore.errors import FormatError


def save_segmentations(path, results: Sequence[SegmentationResult], params: SegParams) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        for traj_id, result in enumerate(results):
            fh.write(json.dumps(result.to_record(traj_id, params), separators=(",", ":")) + "\n")
    os.replace(tmp, path)


def load_segmentations(path) -> List[Dict]:
    """Records in traj_id order; each has change_indices as a tuple."""
    path = Path(path)
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            try:
                record = json.loads(line)
                if record["traj_id"] != len(records):
                    raise FormatError(f"expected traj_id {len(records)}", path, line_no)
                record["change_indices"] = tuple(int(c) for c in record["change_indices"])
                float(record["total_cost"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                if isinstance(e, FormatError):
                    raise
                raise FormatError(f"malformed segmentation record: {e}", path, line_no) from None
            records.append(record)
    return records


def change_index_sets(records: Sequence[Dict]) -> List[Tuple[int, ...]]:
    return [r["change_indices"] for r in records]

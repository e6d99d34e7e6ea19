from typing import Sequence, Tuple


def boundary_precision_recall(detected: Sequence[int], reference: Sequence[int],
                              tolerance: int = 2) -> Tuple[float, float]:
    """
    Precision and recall of detected change indices against reference
    boundaries, matching each reference to at most one detection within
    ``tolerance`` steps (closest first). Empty sets score 1.0.
    """
    detected = sorted(detected)
    reference = sorted(reference)
    pairs = sorted((abs(d - r), i, j) for i, d in enumerate(detected)
                   for j, r in enumerate(reference) if abs(d - r) <= tolerance)
    used_d, used_r = set(), set()
    for _, i, j in pairs:
        if i not in used_d and j not in used_r:
            used_d.add(i)
            used_r.add(j)
    matched = len(used_d)
    precision = matched / len(detected) if detected else 1.0
    recall = matched / len(reference) if reference else 1.0
    return precision, recall

from typing import Iterable, Tuple, Union

import numpy as np

from nnkit.rng import make_rng


def inject_index_noise(indices: Iterable[int], p_shift: float,
                       rng: Union[int, np.random.Generator], n: int) -> Tuple[int, ...]:
    """
    Perturb change indices: each index moves one step with probability
    ``p_shift`` in a randomly chosen direction, and keeps moving in that
    direction with the same probability after every step. Results are clamped
    to [1, n-1] and deduplicated.
    """
    if isinstance(rng, (int, np.integer)):
        rng = make_rng(int(rng), "index_noise")
    shifted = set()
    for index in sorted(indices):
        steps = 0
        direction = 0
        while rng.random() < p_shift:
            if direction == 0:
                direction = 1 if rng.random() >= 0.5 else -1
            steps += 1
        shifted.add(int(min(max(index + direction * steps, 1), n - 1)))
    return tuple(sorted(shifted))

"""
Seeded random streams.

Every stream is a numpy PCG64 generator seeded through a SeedSequence built
from the run seed and a tuple of stream names, so independent consumers
(shuffling, masking, initialization, environment resets) never share state
and results do not depend on call order between them.
"""
import hashlib

import numpy as np


def _stream_key(part) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError(f"stream keys must be non-negative, got {part}")
        return int(part)
    digest = hashlib.sha256(str(part).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def make_rng(seed: int, *stream) -> np.random.Generator:
    """Generator for the named sub-stream of ``seed``."""
    entropy = [_stream_key(seed)] + [_stream_key(s) for s in stream]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def derive_seed(seed: int, *stream) -> int:
    """A 32-bit child seed, for APIs that take integers instead of generators."""
    return int(make_rng(seed, *stream).integers(0, 2**31 - 1))

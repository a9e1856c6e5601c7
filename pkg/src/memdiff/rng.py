"""Counter-based random streams for reproducible parallel Monte Carlo.

Every consumer of randomness derives its own Philox stream from a user
seed plus a tuple of tags (experiment name, epsilon index, kernel level,
...).  Streams with distinct tags are statistically independent and their
draws do not depend on the order in which other streams are consumed, so
results are bit-identical no matter how work is scheduled.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["stream", "tag_to_int"]


def tag_to_int(tag) -> int:
    """Map an arbitrary tag to a stable 64-bit integer."""
    if isinstance(tag, (int, np.integer)):
        return int(tag) & 0xFFFFFFFFFFFFFFFF
    digest = hashlib.sha256(str(tag).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stream(seed: int, *tags) -> np.random.Generator:
    """Return the Philox generator keyed by ``(seed, *tags)``.

    The same (seed, tags) always yields the same stream; any change in
    either yields an unrelated one.
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [tag_to_int(t) for t in tags]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))

"""
Counter-based random streams keyed by (seed, stream id).
"""
import hashlib
from typing import Hashable

import numpy as np


def stream_id(*labels: Hashable) -> int:
    """Stable 64-bit id for a tuple of labels (platform and run independent)."""
    digest = hashlib.blake2b(repr(labels).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream(seed: int, *labels: Hashable, offset: int = 0) -> np.random.Generator:
    """
    Generator on a Philox stream keyed by the seed and the labels.

    Args:
        seed: user seed (any nonnegative int below 2**64)
        labels: purpose tags, e.g. ("rates", n, rep)
        offset: number of Philox blocks to skip before the first draw

    Returns:
        numpy Generator
    """
    key = np.array([int(seed) % 2 ** 64, stream_id(*labels)], dtype=np.uint64)
    bit_generator = np.random.Philox(key=key)
    if offset:
        bit_generator = bit_generator.advance(offset)
    return np.random.Generator(bit_generator)

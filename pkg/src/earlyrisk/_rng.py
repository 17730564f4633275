"""Named random substreams derived from one seed."""
from __future__ import annotations

import zlib

import numpy as np


def _key(name) -> int:
    if isinstance(name, (int, np.integer)):
        return int(name)
    return zlib.crc32(str(name).encode())


def substream(seed: int, *names) -> np.random.Generator:
    """Independent generator for ``(seed, *names)``; names may be strings or ints."""
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(_key(n) for n in names))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *names) -> int:
    """A 32-bit integer seed for libraries that want one (e.g. scikit-learn)."""
    return int(substream(seed, *names).integers(0, 2**31 - 1))

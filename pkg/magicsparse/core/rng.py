"""
Seeded random streams.

Every stream is a Philox (counter-based) generator keyed by the user seed
plus a purpose label and an index, so a block of samples always sees the
same numbers no matter which worker produces it or in what order.
"""
import zlib
from typing import Tuple, Union

import numpy as np

SEED_MASK = (1 << 64) - 1

KeyPart = Union[int, str]


def _key_ints(key: Tuple[KeyPart, ...]) -> Tuple[int, ...]:
    out = []
    for part in key:
        if isinstance(part, str):
            out.append(zlib.crc32(part.encode("utf-8")))
        else:
            out.append(int(part))
    return tuple(out)


def _sequence(seed: int, key: Tuple[KeyPart, ...]) -> np.random.SeedSequence:
    if not 0 <= int(seed) <= SEED_MASK:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.SeedSequence(int(seed), spawn_key=_key_ints(key))


def substream(seed: int, *key: KeyPart) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(_sequence(seed, key)))


def derive_seed(seed: int, *key: KeyPart) -> int:
    """Fresh 64-bit seed for a nested pipeline (one run, one attempt, one bench cell)."""
    return int(_sequence(seed, key).generate_state(1, dtype=np.uint64)[0])

"""Deterministic seed derivation so that work units never share a stream."""

from datetime import date

import numpy as np

# stream tags, kept distinct so window fits and bootstrap draws never collide
FIT = 1
RESAMPLE = 2
REFIT = 3


def derive_seed(base: int, *parts) -> int:
    """Hash ``base`` and ``parts`` (ints or dates) into a 63-bit seed."""
    entropy = [int(base) & 0xFFFFFFFFFFFFFFFF]
    for part in parts:
        entropy.append(part.toordinal() if isinstance(part, date) else int(part))
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 31 | int(state[1]) >> 1

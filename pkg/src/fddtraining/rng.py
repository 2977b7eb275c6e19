"""Counter-keyed random substreams.

Every random draw in a simulation is taken from a generator seeded by the
tuple ``(master_seed, iteration, block, purpose)``, so results do not depend
on how iterations are distributed over workers.
"""
from __future__ import annotations

import enum

import numpy as np


class Purpose(enum.IntEnum):
    CHANNEL = 0
    NOISE = 1
    SHUFFLE = 2
    CODEBOOK = 3


def substream(master_seed: int, iteration: int = 0, block: int = 0,
              purpose: int = Purpose.CHANNEL) -> np.random.Generator:
    key = [int(master_seed), int(iteration), int(block), int(purpose)]
    if min(key) < 0:
        raise ValueError(f"substream keys must be non-negative, got {key}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))


def complex_normal(rng: np.random.Generator, size) -> np.ndarray:
    """CN(0, 1) samples: real and imaginary parts each have variance 1/2."""
    xy = rng.standard_normal((2,) + tuple(np.atleast_1d(size)))
    return (xy[0] + 1j * xy[1]) / np.sqrt(2.0)

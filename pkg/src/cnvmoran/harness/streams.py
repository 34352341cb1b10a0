"""Deterministic random streams.

Every stream is a ``numpy.random.SeedSequence`` with entropy ``master_seed`` and
spawn key ``(crc32(experiment), *path)``, where ``path`` is a tuple of small
integers naming the purpose (see the PURPOSE constants), the population size or
repetition, and the replicate index.  Distinct paths give independent streams,
so nothing is shared between replicates or experiments, and a replicate's
stream does not depend on how many others run or on which thread runs it.
"""
from __future__ import annotations

import zlib

import numpy as np

INIT = 0      # initial states
KERNEL = 1    # seeds for the compiled event loop
SDE = 2       # diffusion ensembles
CHAIN = 3     # birth-death chain seeds


def experiment_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def seed_sequence(master_seed: int, experiment: str, *path: int) -> np.random.SeedSequence:
    if master_seed < 0:
        raise ValueError("master seed must be nonnegative")
    return np.random.SeedSequence(int(master_seed),
                                  spawn_key=(experiment_key(experiment), *map(int, path)))


def generator(master_seed: int, experiment: str, *path: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(master_seed, experiment, *path)))


def kernel_seeds(master_seed: int, experiment: str, *path: int, count: int) -> np.ndarray:
    """One 32-bit seed per replicate for the compiled simulator's Mersenne Twister."""
    return np.array([seed_sequence(master_seed, experiment, *path, i).generate_state(1, np.uint32)[0]
                     for i in range(count)], dtype=np.int64)

"""Deterministic per-component RNG derivation.

Every stochastic component of the pipeline (parameter sampling, RR jitter,
background noise, artifact generators, ...) draws from its own generator,
derived from the master seed and a stable component tag. Toggling one
component on/off therefore never shifts the random stream consumed by any
other component.
"""

import zlib

import numpy as np


def component_seed(master_seed: int, component: str) -> np.random.SeedSequence:
    tag = zlib.crc32(component.encode("utf-8"))
    return np.random.SeedSequence([int(master_seed), tag])


def component_rng(master_seed: int, component: str) -> np.random.Generator:
    return np.random.default_rng(component_seed(master_seed, component))


def sample_seed(master_seed: int, index: int) -> int:
    """Derived per-recording seed for batch generation."""
    ss = np.random.SeedSequence([int(master_seed), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])

"""Named RNG derivation so every pipeline stage is replayable on its own.

Each consumer asks for a stream by (root seed, domain name, index).  Streams
are independent SeedSequence spawns, so adding draws in one stage never
shifts the randomness seen by another.
"""

from __future__ import annotations

import numpy as np

_DOMAINS = {
    "xor": 0,
    "split": 1,
    "tree": 2,
    "restart": 3,
    "round": 4,
    "dataset": 5,
}


def derive_rng(seed: int, domain: str, index: int = 0) -> np.random.Generator:
    """Return the generator for one named stage of the pipeline."""
    if domain not in _DOMAINS:
        raise KeyError(f"unknown rng domain {domain!r}; expected one of {sorted(_DOMAINS)}")
    if index < 0:
        raise ValueError("rng index must be non-negative")
    seq = np.random.SeedSequence(seed, spawn_key=(_DOMAINS[domain], index))
    return np.random.default_rng(seq)


def derive_seed(seed: int, domain: str, index: int = 0) -> int:
    """Stable child seed for stages that derive their own streams."""
    return int(derive_rng(seed, domain, index).integers(0, 2**63 - 1))

"""
Splittable random number key schedule.

Every random draw in the laboratory is keyed by
(master_seed, purpose_tag, replica, *extra) and produced by a counter-based
Philox generator, so any stream can be rebuilt from its key without storing it.
"""
import hashlib
from typing import Iterable, List

import numpy as np


def purpose_tag(purpose: str) -> int:
    """Stable 64-bit integer for a purpose string."""
    digest = hashlib.sha256(purpose.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def seed_sequence(master_seed: int, purpose: str, replica: int = 0, *extra: int) -> np.random.SeedSequence:
    """
    Build the seed sequence for one keyed stream.

    Args:
        master_seed: Experiment-wide seed
        purpose: Purpose tag (e.g. "disorder", "white-noise", "gibbs")
        replica: Replica index
        *extra: Further integer coordinates (mesh index, grid cell, site...)

    Returns:
        SeedSequence whose entropy is the full key
    """
    entropy = [int(master_seed), purpose_tag(purpose), int(replica)] + [int(e) for e in extra]
    return np.random.SeedSequence(entropy)


def generator(master_seed: int, purpose: str, replica: int = 0, *extra: int) -> np.random.Generator:
    """Counter-based generator for one keyed stream."""
    return np.random.Generator(np.random.Philox(seed_sequence(master_seed, purpose, replica, *extra)))


def replica_generators(master_seed: int, purpose: str, replicas: Iterable[int], *extra: int) -> List[np.random.Generator]:
    """Independent generators for a list of replicas."""
    return [generator(master_seed, purpose, r, *extra) for r in replicas]


def numba_seed(rng: np.random.Generator) -> int:
    """Draw a 31-bit seed for a compiled kernel's internal generator."""
    return int(rng.integers(0, 2**31 - 1))


def site_values(master_seed: int, purpose: str, replica: int, sites: np.ndarray, n_sites: int) -> np.ndarray:
    """
    Reproduce the standard-normal values of chosen sites of a keyed stream.

    Args:
        master_seed: Experiment-wide seed
        purpose: Purpose tag
        replica: Replica index
        sites: Site indices to return
        n_sites: Length of the full stream

    Returns:
        Values of the stream at the requested sites
    """
    stream = generator(master_seed, purpose, replica).standard_normal(n_sites)
    return stream[np.asarray(sites, dtype=np.int64)]

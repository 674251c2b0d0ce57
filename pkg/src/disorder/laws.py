"""
Disorder laws for the i.i.d. random field omega.
"""
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from scipy import stats

from ..lattice.domain import Lattice
from ..persistence import load_array, save_array
from .. import rng as keyed

logger = logging.getLogger(__name__)

SQRT3 = np.sqrt(3.0)


class DisorderLaw(str, Enum):
    """Centred unit-variance laws with finite exponential moments."""
    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"
    UNIFORM = "uniform"


# E|omega|^3 for each law
THIRD_ABSOLUTE_MOMENT: Dict[DisorderLaw, float] = {
    DisorderLaw.GAUSSIAN: 2.0 * np.sqrt(2.0 / np.pi),
    DisorderLaw.RADEMACHER: 1.0,
    DisorderLaw.UNIFORM: 3.0 * SQRT3 / 4.0,
}


def third_absolute_moment(law: DisorderLaw) -> float:
    """E|omega|^3 of a law, the third-moment constant of the Lindeberg swap bound."""
    return THIRD_ABSOLUTE_MOMENT[DisorderLaw(law)]


SeedLike = Union[int, np.random.Generator]


def _as_generator(seed: SeedLike, purpose: str, replica: int = 0) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return keyed.generator(int(seed), purpose, replica)


def draw(law: DisorderLaw, size, rng: np.random.Generator) -> np.ndarray:
    """Draw i.i.d. values of a law."""
    law = DisorderLaw(law)
    if law is DisorderLaw.GAUSSIAN:
        return rng.standard_normal(size)
    if law is DisorderLaw.RADEMACHER:
        return 2.0 * rng.integers(0, 2, size=size) - 1.0
    return rng.uniform(-SQRT3, SQRT3, size=size)


def disorder_from_uniforms(u: np.ndarray, law: DisorderLaw) -> np.ndarray:
    """
    Inverse-CDF transform of uniforms into a disorder law.

    Two laws driven by the same uniforms give a monotone coupling.
    """
    law = DisorderLaw(law)
    u = np.clip(np.asarray(u, dtype=float), 1e-16, 1 - 1e-16)
    if law is DisorderLaw.GAUSSIAN:
        return stats.norm.ppf(u)
    if law is DisorderLaw.RADEMACHER:
        return np.where(u < 0.5, -1.0, 1.0)
    return SQRT3 * (2.0 * u - 1.0)


def sample_disorder(
    lattice: Lattice,
    law: DisorderLaw = DisorderLaw.GAUSSIAN,
    seed: SeedLike = 0,
    replica: int = 0,
    replicas: Optional[int] = None,
) -> np.ndarray:
    """
    Sample the random field omega on the interior sites.

    Args:
        lattice: Lattice
        law: Disorder law
        seed: Master seed or a ready generator
        replica: Replica index for the keyed stream
        replicas: If given, draw this many independent replicas

    Returns:
        Array of shape (n_sites,) or (replicas, n_sites)
    """
    rng = _as_generator(seed, "disorder", replica)
    size = lattice.n_sites if replicas is None else (replicas, lattice.n_sites)
    return draw(law, size, rng)


def save_disorder_snapshot(omega: np.ndarray, path: Path, metadata: Dict[str, Any]):
    """Export omega as little-endian float64 in row-major site order plus a JSON sidecar."""
    save_array(omega, path, metadata)
    logger.info(f"Saved disorder snapshot of {np.size(omega)} values to {path}")


def load_disorder_snapshot(path: Path) -> Tuple[np.ndarray, Dict[str, Any]]:
    """Import a snapshot written by save_disorder_snapshot."""
    return load_array(path)

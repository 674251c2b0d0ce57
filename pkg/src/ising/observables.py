"""
Magnetisation fields and block magnetisation observables.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Union

import numpy as np

from ..disorder.field import H_EXPONENT, MAGNETISATION_EXPONENT
from ..disorder.profiles import Profile, cell_integrals
from ..lattice.blocks import BlockGrid
from ..lattice.domain import Lattice
from .model import SpinConfig

logger = logging.getLogger(__name__)


class Representation(str, Enum):
    """How spins are turned into a distribution on the plane."""
    PIECEWISE_CONSTANT = "piecewise_constant"
    ATOMIC = "atomic"


@dataclass(frozen=True, eq=False)
class MagnetisationField:
    """
    Rescaled magnetisation of one configuration or a batch of configurations.

    Piecewise constant: density a^{-1/8} sigma_x on S_a(x).
    Atomic: mass a^{15/8} sigma_x at x.
    """
    lattice: Lattice
    spins: np.ndarray
    representation: Representation = Representation.PIECEWISE_CONSTANT

    @property
    def densities(self) -> np.ndarray:
        """Cell densities a^{-1/8} sigma_x of the piecewise constant field."""
        return self.lattice.mesh ** (-MAGNETISATION_EXPONENT) * np.asarray(self.spins, dtype=float)

    @property
    def masses(self) -> np.ndarray:
        """Point masses a^{15/8} sigma_x of the atomic field."""
        return self.lattice.mesh ** H_EXPONENT * np.asarray(self.spins, dtype=float)

    def pair(self, phi: Profile, integrals: Optional[np.ndarray] = None) -> Union[float, np.ndarray]:
        """<Phi, phi> for the chosen representation (per configuration for a batch)."""
        if self.representation == Representation.ATOMIC:
            return self.masses @ phi.at(self.lattice.interior_sites)
        if integrals is None:
            integrals = cell_integrals(phi, self.lattice)
        return self.densities @ integrals

    def as_representation(self, representation: Representation) -> 'MagnetisationField':
        return MagnetisationField(self.lattice, self.spins, representation)


@dataclass
class BlockMagnetisation:
    """Block sums Σ_{x in B_ij} a^{15/8} lambda(x)² sigma_x and test-function pairings."""
    N: int
    blocks: np.ndarray
    pairings: Dict[str, Union[float, np.ndarray]] = field(default_factory=dict)


def magnetisation_observables(
    config: Union[SpinConfig, np.ndarray],
    grid: BlockGrid,
    lam: Profile,
    test_functions: Optional[Dict[str, Profile]] = None,
) -> BlockMagnetisation:
    """
    Coarse magnetisation per block plus <Phi^a, phi> for test functions.

    Args:
        config: One SpinConfig, or a spin array (n_sites,) / (n_samples, n_sites)
        grid: Block grid over the same lattice
        lam: Disorder strength profile lambda
        test_functions: Named test functions to pair with the piecewise constant field

    Returns:
        BlockMagnetisation with blocks of shape (N, N) or (n_samples, N, N)
    """
    spins = config.spins if isinstance(config, SpinConfig) else np.asarray(config)
    lattice = grid.lattice
    lam2 = lam.at(lattice.interior_sites) ** 2
    weights = lattice.mesh ** H_EXPONENT * lam2 * np.asarray(spins, dtype=float)
    blocks = grid.block_sums(weights)
    pairings = {}
    if test_functions:
        magnetisation = MagnetisationField(lattice, spins)
        for name, phi in test_functions.items():
            pairings[name] = magnetisation.pair(phi)
    return BlockMagnetisation(N=grid.N, blocks=blocks, pairings=pairings)

"""
White-noise cell averages with exact dyadic refinement.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..lattice.domain import Lattice
from .. import rng as keyed
from .profiles import Profile, cell_integrals

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class WhiteNoiseGrid:
    """
    Standard Gaussian cell averages theta_x = a^{-1} W(S_a(x)) on a regular grid.

    values[r, c] belongs to the cell with lower-left corner
    origin + (c, r) * mesh. Refinement splits each cell into its 4 dyadic
    children with theta_parent = ½ Σ theta_children exactly.
    """
    mesh: float
    origin: Tuple[float, float]
    values: np.ndarray
    seed: int
    replica: int = 0
    depth: int = 0

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    def cell_centers(self) -> np.ndarray:
        """Centers of all cells, shape (rows, cols, 2)."""
        rows, cols = self.shape
        cx = self.origin[0] + (np.arange(cols) + 0.5) * self.mesh
        cy = self.origin[1] + (np.arange(rows) + 0.5) * self.mesh
        gx, gy = np.meshgrid(cx, cy)
        return np.stack([gx, gy], axis=-1)

    def refine(self) -> 'WhiteNoiseGrid':
        """
        Children at mesh a/2, conditioned on the parent values.

        Each child is parent/2 + (Z_k - mean Z) with fresh i.i.d. normals Z,
        which makes children i.i.d. standard Gaussian and sums them to 2*parent.
        """
        rng = keyed.generator(self.seed, "white-noise-refine", self.replica, self.depth + 1)
        rows, cols = self.shape
        z = rng.standard_normal((rows, cols, 2, 2))
        z -= z.mean(axis=(2, 3), keepdims=True)
        children = 0.5 * self.values[:, :, None, None] + z
        fine = children.transpose(0, 2, 1, 3).reshape(2 * rows, 2 * cols)
        return WhiteNoiseGrid(
            mesh=0.5 * self.mesh, origin=self.origin, values=fine,
            seed=self.seed, replica=self.replica, depth=self.depth + 1,
        )

    def coarsen(self) -> 'WhiteNoiseGrid':
        """Parents at mesh 2a: ½ Σ of the 4 children."""
        rows, cols = self.shape
        blocks = self.values.reshape(rows // 2, 2, cols // 2, 2)
        coarse = 0.5 * blocks.sum(axis=(1, 3))
        return WhiteNoiseGrid(
            mesh=2.0 * self.mesh, origin=self.origin, values=coarse,
            seed=self.seed, replica=self.replica, depth=self.depth - 1,
        )

    def cell_masses(self) -> np.ndarray:
        """W(S_a(x)) = a * theta_x for every cell."""
        return self.mesh * self.values

    def site_values(self, lattice: Lattice) -> np.ndarray:
        """theta at the interior sites of a lattice with the same mesh and cell layout."""
        if not np.isclose(lattice.mesh, self.mesh):
            raise ValueError(f"grid mesh {self.mesh} does not match lattice mesh {lattice.mesh}")
        pts = lattice.interior_sites
        cols = np.floor((pts[:, 0] - self.origin[0]) / self.mesh + 1e-9).astype(np.int64)
        rows = np.floor((pts[:, 1] - self.origin[1]) / self.mesh + 1e-9).astype(np.int64)
        return self.values[rows, cols]


def sample_white_noise_grid(lattice: Lattice, seed: int, replica: int = 0) -> WhiteNoiseGrid:
    """
    Sample i.i.d. standard Gaussian cell averages, one cell per lattice site.

    Args:
        lattice: Lattice whose cells S_a(x) tile the grid
        seed: Master seed
        replica: Replica index

    Returns:
        WhiteNoiseGrid covering the bounding box of the interior sites
    """
    a = lattice.mesh
    i_min, j_min = lattice.interior_ij.min(axis=0)
    i_max, j_max = lattice.interior_ij.max(axis=0)
    rows, cols = int(j_max - j_min + 1), int(i_max - i_min + 1)
    rng = keyed.generator(seed, "white-noise", replica)
    values = rng.standard_normal((rows, cols))
    origin = (float(i_min * a - 0.5 * a), float(j_min * a - 0.5 * a))
    return WhiteNoiseGrid(mesh=a, origin=origin, values=values, seed=int(seed), replica=int(replica))


def pair_white_noise(lattice: Lattice, noise: np.ndarray, phi: Profile, integrals: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Pairing <W^{omega,a}, phi> = a^{-1} Σ_x omega_x ∫_{S_a(x)} phi.

    Args:
        lattice: Lattice
        noise: Per-site values, shape (n_sites,) or (replicas, n_sites)
        phi: Test function
        integrals: Precomputed cell integrals of phi

    Returns:
        Scalar or per-replica array
    """
    if integrals is None:
        integrals = cell_integrals(phi, lattice)
    return np.asarray(noise) @ integrals / lattice.mesh


def white_noise_pairing_variance(lattice: Lattice, phi: Profile) -> float:
    """Var <W^a, phi> = Σ_x a^{-2} (∫_{S_a(x)} phi)² for unit-variance cells."""
    integrals = cell_integrals(phi, lattice)
    return float(np.sum(integrals ** 2) / lattice.mesh ** 2)

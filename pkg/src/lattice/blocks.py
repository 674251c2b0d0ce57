"""
Dyadic block grids B^N_{i,j} over the unit square and their annuli.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from ..errors import AnnulusOutsideDomain
from .domain import Lattice

logger = logging.getLogger(__name__)

_ASSIGN_EPS = 1e-9


@dataclass(frozen=True)
class Annulus:
    """Side-3 dilation D of a block B with the ring D minus B."""
    block: Tuple[int, int]
    inner_box: Tuple[float, float, float, float]
    outer_box: Tuple[float, float, float, float]
    inner_sites: np.ndarray
    ring_sites: np.ndarray


@dataclass(frozen=True, eq=False)
class BlockGrid:
    """
    Partition of the unit square into N x N blocks of side 1/N.

    Block indices are 1-based: site x belongs to (i, j) with
    x in [(i-1)/N, i/N) x [(j-1)/N, j/N) (lower-left inclusive).
    """
    N: int
    lattice: Lattice
    assignment: np.ndarray

    @property
    def flat_index(self) -> np.ndarray:
        """Per-site block index (i-1)*N + (j-1)."""
        return (self.assignment[:, 0] - 1) * self.N + (self.assignment[:, 1] - 1)

    @property
    def block_cells(self) -> Dict[Tuple[int, int], Tuple[float, float, float, float]]:
        """Rectangles B^N_{i,j} as (x0, x1, y0, y1)."""
        n = self.N
        return {
            (i, j): ((i - 1) / n, i / n, (j - 1) / n, j / n)
            for i in range(1, n + 1) for j in range(1, n + 1)
        }

    def sites_in(self, i: int, j: int) -> np.ndarray:
        """Interior site indices of block (i, j)."""
        return np.flatnonzero((self.assignment[:, 0] == i) & (self.assignment[:, 1] == j))

    def counts(self) -> np.ndarray:
        """Site count per block, shape (N, N) indexed [i-1, j-1]."""
        return np.bincount(self.flat_index, minlength=self.N * self.N).reshape(self.N, self.N)

    def block_sums(self, values: np.ndarray) -> np.ndarray:
        """
        Sum per-site values over each block.

        Args:
            values: Array of shape (n_sites,) or (n_samples, n_sites)

        Returns:
            Array of shape (N, N) or (n_samples, N, N)
        """
        values = np.asarray(values)
        nb = self.N * self.N
        if values.ndim == 1:
            return np.bincount(self.flat_index, weights=values, minlength=nb).reshape(self.N, self.N)
        indicator = np.zeros((self.lattice.n_sites, nb))
        indicator[np.arange(self.lattice.n_sites), self.flat_index] = 1.0
        return (values @ indicator).reshape(values.shape[0], self.N, self.N)

    def refine(self) -> 'BlockGrid':
        """Grid with 2N blocks per side over the same lattice."""
        return build_block_grid(self.lattice, 2 * self.N)

    def annulus(self, i: int, j: int) -> Annulus:
        """
        Annulus around block (i, j): D is the 3 x 3 block neighborhood.

        Raises:
            AnnulusOutsideDomain: if D leaves the unit square
        """
        if not (2 <= i <= self.N - 1 and 2 <= j <= self.N - 1):
            raise AnnulusOutsideDomain(f"annulus of block ({i}, {j}) leaves the unit square for N={self.N}")
        n = self.N
        bi, bj = self.assignment[:, 0], self.assignment[:, 1]
        in_outer = (np.abs(bi - i) <= 1) & (np.abs(bj - j) <= 1)
        in_inner = (bi == i) & (bj == j)
        return Annulus(
            block=(i, j),
            inner_box=((i - 1) / n, i / n, (j - 1) / n, j / n),
            outer_box=((i - 2) / n, (i + 1) / n, (j - 2) / n, (j + 1) / n),
            inner_sites=np.flatnonzero(in_inner),
            ring_sites=np.flatnonzero(in_outer & ~in_inner),
        )

    def disjoint_annuli(self) -> List[Tuple[int, int]]:
        """
        Blocks whose annuli are pairwise disjoint: centers on a stride-3 sublattice.

        Returns at least (N-2)^2/9 blocks.
        """
        centers = list(range(2, self.N, 3))
        return [(i, j) for i in centers for j in centers]


def build_block_grid(lattice: Lattice, N: int) -> BlockGrid:
    """
    Assign every interior site to its block of the N x N grid.

    Args:
        lattice: Lattice of a domain normalized to the unit square
        N: Blocks per side, a power of two

    Returns:
        BlockGrid
    """
    if N < 1 or (N & (N - 1)) != 0:
        raise ValueError(f"N must be a power of two, got {N}")
    pts = lattice.interior_sites
    if pts.min() < -_ASSIGN_EPS or pts.max() > 1 + _ASSIGN_EPS:
        raise ValueError("block grids need a domain normalized to the unit square")
    idx = np.floor(N * pts + _ASSIGN_EPS).astype(np.int64) + 1
    idx = np.clip(idx, 1, N)
    grid = BlockGrid(N=N, lattice=lattice, assignment=idx)
    logger.debug(f"Built {N}x{N} block grid over {lattice.n_sites} sites")
    return grid

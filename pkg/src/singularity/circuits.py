"""
Plus circuits in block annuli via union-find over minus clusters.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from ..lattice.blocks import BlockGrid

logger = logging.getLogger(__name__)


class UnionFind:
    """Disjoint sets over 0..size-1 with path compression and union by size."""

    def __init__(self, size: int):
        self.size = size
        self.parents = list(range(size))
        self.sizes = [1] * size
        self.num_components = size

    def find(self, elem: int) -> int:
        root = elem
        while root != self.parents[root]:
            root = self.parents[root]
        # compress the path to the root
        while elem != root:
            self.parents[elem], elem = root, self.parents[elem]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.sizes[ra] < self.sizes[rb]:
            ra, rb = rb, ra
        self.parents[rb] = ra
        self.sizes[ra] += self.sizes[rb]
        self.num_components -= 1
        return True

    def connected(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)


def annulus_plus_circuit(spins: np.ndarray, grid: BlockGrid, block: Tuple[int, int]) -> bool:
    """
    Whether the ring D minus B around block (i, j) separates B from the outside of D by + spins.

    True iff no 4-connected path of minus spins inside the ring joins a site
    adjacent to B to a site adjacent to the complement of D (sites outside
    the lattice count as outside D).

    Raises:
        AnnulusOutsideDomain: if D leaves the unit square
    """
    annulus = grid.annulus(*block)
    lattice = grid.lattice
    ring = annulus.ring_sites
    minus = ring[np.asarray(spins)[ring] < 0]
    if len(minus) == 0:
        return True
    inner = set(annulus.inner_sites.tolist())
    in_outer = np.zeros(lattice.n_sites, dtype=bool)
    in_outer[annulus.inner_sites] = True
    in_outer[ring] = True
    local = {int(s): k for k, s in enumerate(minus)}
    inner_node, outer_node = len(minus), len(minus) + 1
    uf = UnionFind(len(minus) + 2)
    neighbors = lattice.interior_neighbors
    for s, k in local.items():
        for t in neighbors[s]:
            t = int(t)
            if t < 0 or not in_outer[t]:
                uf.union(k, outer_node)
            elif t in inner:
                uf.union(k, inner_node)
            elif t in local:
                uf.union(k, local[t])
        if uf.connected(inner_node, outer_node):
            return False
    return not uf.connected(inner_node, outer_node)


@dataclass
class AnnuliCensus:
    """Disjoint annuli of an N x N grid and how many carry a + circuit."""
    N: int
    blocks: List[Tuple[int, int]]
    surrounded: int

    @property
    def total(self) -> int:
        return len(self.blocks)

    @property
    def fraction(self) -> float:
        return self.surrounded / self.total if self.total else float('nan')

    def to_dict(self) -> Dict:
        return {'N': self.N, 'disjoint_annuli': self.total, 'surrounded': self.surrounded,
                'fraction': self.fraction, 'lower_bound': (self.N - 2) ** 2 / 9.0}


def disjoint_annuli_census(spins: np.ndarray, grid: BlockGrid) -> AnnuliCensus:
    """Count the pairwise disjoint annuli surrounded by a + circuit in one configuration."""
    blocks = grid.disjoint_annuli()
    surrounded = sum(annulus_plus_circuit(spins, grid, b) for b in blocks)
    return AnnuliCensus(grid.N, blocks, int(surrounded))


def circuit_probability(spin_samples: np.ndarray, grid: BlockGrid, block: Tuple[int, int]) -> Dict[str, float]:
    """Empirical probability of a + circuit around one block with its binomial standard error."""
    hits = np.array([annulus_plus_circuit(s, grid, block) for s in spin_samples], dtype=float)
    p = float(hits.mean())
    return {'probability': p, 'stderr': float(np.sqrt(p * (1.0 - p) / len(hits))), 'samples': int(len(hits))}

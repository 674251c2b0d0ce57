"""
Discretization of planar domains into interior and boundary lattice sites.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import EmptyLattice, InvalidPolygon

logger = logging.getLogger(__name__)

UNIT_SQUARE: Tuple[Tuple[float, float], ...] = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))

# Neighbor slots: +x, -x, +y, -y
NEIGHBOR_OFFSETS = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], dtype=np.int64)

_EDGE_TOLERANCE = 1e-9


def _orientation(p, q, r) -> float:
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _segments_cross(p1, p2, q1, q2) -> bool:
    d1 = _orientation(q1, q2, p1)
    d2 = _orientation(q1, q2, p2)
    d3 = _orientation(p1, p2, q1)
    d4 = _orientation(p1, p2, q2)
    if d1 * d2 < 0 and d3 * d4 < 0:
        return True
    # collinear overlap
    if d1 == 0 and d2 == 0 and d3 == 0 and d4 == 0:
        lo_p, hi_p = sorted([p1, p2])
        lo_q, hi_q = sorted([q1, q2])
        return lo_p < hi_q and lo_q < hi_p
    return False


def points_in_polygon(points: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """
    Even-odd ray casting test, vectorized over points.

    Args:
        points: Array of shape (n, 2)
        vertices: Closed polygon vertices, shape (m, 2), first vertex not repeated

    Returns:
        Boolean mask of points inside the polygon
    """
    x = points[:, 0][:, None]
    y = points[:, 1][:, None]
    x0, y0 = vertices[:, 0][None, :], vertices[:, 1][None, :]
    x1, y1 = np.roll(vertices[:, 0], -1)[None, :], np.roll(vertices[:, 1], -1)[None, :]
    straddles = (y0 > y) != (y1 > y)
    with np.errstate(divide='ignore', invalid='ignore'):
        x_cross = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    crossings = straddles & (x < x_cross)
    return (np.count_nonzero(crossings, axis=1) % 2) == 1


def distance_to_boundary(points: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """Euclidean distance from each point to the polygon boundary."""
    p = points[:, None, :]
    a = vertices[None, :, :]
    b = np.roll(vertices, -1, axis=0)[None, :, :]
    ab = b - a
    length2 = np.sum(ab ** 2, axis=2)
    t = np.clip(np.sum((p - a) * ab, axis=2) / np.where(length2 > 0, length2, 1.0), 0.0, 1.0)
    nearest = a + t[..., None] * ab
    return np.min(np.linalg.norm(p - nearest, axis=2), axis=1)


@dataclass(frozen=True)
class DomainSpec:
    """Bounded simply connected polygonal domain with a lattice spacing."""
    mesh: float
    shape: Tuple[Tuple[float, float], ...] = UNIT_SQUARE

    @property
    def vertices(self) -> np.ndarray:
        return np.asarray(self.shape, dtype=float)

    @property
    def diameter(self) -> float:
        v = self.vertices
        return float(np.max(np.linalg.norm(v[:, None, :] - v[None, :, :], axis=2)))

    @property
    def bounding_box(self) -> Tuple[float, float, float, float]:
        v = self.vertices
        return float(v[:, 0].min()), float(v[:, 0].max()), float(v[:, 1].min()), float(v[:, 1].max())

    def is_axis_rectangle(self) -> bool:
        """True if the shape is an axis-aligned rectangle."""
        v = self.vertices
        if len(v) != 4:
            return False
        xs, ys = np.unique(v[:, 0]), np.unique(v[:, 1])
        return len(xs) == 2 and len(ys) == 2

    def validate(self):
        """
        Check that the mesh is positive and the polygon is simple and closed.

        Raises:
            ValueError: if the mesh is not positive
            InvalidPolygon: fewer than 3 vertices, zero area or self-intersection
        """
        if not self.mesh > 0:
            raise ValueError(f"mesh must be positive, got {self.mesh}")
        v = self.vertices
        if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 2:
            raise InvalidPolygon(f"polygon needs at least 3 planar vertices, got shape {v.shape}")
        area = 0.5 * np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
        if abs(area) < 1e-14:
            raise InvalidPolygon("polygon has zero area")
        m = len(v)
        for i in range(m):
            for j in range(i + 1, m):
                if j == i + 1 or (i == 0 and j == m - 1):
                    continue
                if _segments_cross(tuple(v[i]), tuple(v[(i + 1) % m]), tuple(v[j]), tuple(v[(j + 1) % m])):
                    raise InvalidPolygon(f"edges {i} and {j} intersect")


@dataclass(frozen=True, eq=False)
class Lattice:
    """
    Interior sites of Omega ∩ aZ² and their external boundary.

    Sites are indexed once, in row-major order (by y, then x); every other
    module addresses spins by these indices.
    """
    spec: DomainSpec
    interior_ij: np.ndarray
    boundary_ij: np.ndarray
    interior_neighbors: np.ndarray
    boundary_neighbors: np.ndarray
    _index: Dict[Tuple[int, int], int] = field(repr=False, default_factory=dict)

    @property
    def mesh(self) -> float:
        return self.spec.mesh

    @property
    def n_sites(self) -> int:
        return int(self.interior_ij.shape[0])

    @property
    def n_boundary(self) -> int:
        return int(self.boundary_ij.shape[0])

    @property
    def interior_sites(self) -> np.ndarray:
        return self.interior_ij * self.mesh

    @property
    def boundary_sites(self) -> np.ndarray:
        return self.boundary_ij * self.mesh

    @property
    def adjacency(self) -> List[List[int]]:
        """Interior neighbor indices per site (4-neighborhood)."""
        return [[int(j) for j in row if j >= 0] for row in self.interior_neighbors]

    @property
    def bonds(self) -> np.ndarray:
        """Unordered interior bonds, each listed once, shape (n_bonds, 2)."""
        src = np.repeat(np.arange(self.n_sites), 4)
        dst = self.interior_neighbors.ravel()
        keep = dst > src
        return np.stack([src[keep], dst[keep]], axis=1)

    @property
    def boundary_bonds(self) -> np.ndarray:
        """Interior-boundary bonds as (site, boundary index), shape (n, 2)."""
        src = np.repeat(np.arange(self.n_sites), 4)
        dst = self.boundary_neighbors.ravel()
        keep = dst >= 0
        return np.stack([src[keep], dst[keep]], axis=1)

    def site_index(self, i: int, j: int) -> Optional[int]:
        """Index of the interior site at integer coordinates (i, j), if any."""
        return self._index.get((int(i), int(j)))

    def cell(self, site: int) -> Tuple[float, float, float, float]:
        """Box S_a(x) of side a centered at site x, as (x0, x1, y0, y1)."""
        x, y = self.interior_sites[site]
        h = 0.5 * self.mesh
        return x - h, x + h, y - h, y + h

    def boundary_field(self, boundary_values: Optional[np.ndarray] = None) -> np.ndarray:
        """
        Sum of boundary spins adjacent to each interior site.

        Args:
            boundary_values: +-1 per boundary site (default all +1)

        Returns:
            Integer array of length n_sites
        """
        if boundary_values is None:
            boundary_values = np.ones(self.n_boundary, dtype=np.int64)
        padded = np.append(np.asarray(boundary_values, dtype=np.int64), 0)
        return padded[self.boundary_neighbors].sum(axis=1)

    def rectangle_shape(self) -> Optional[Tuple[int, int]]:
        """(width, height) if the interior sites fill a full rectangle, else None."""
        i, j = self.interior_ij[:, 0], self.interior_ij[:, 1]
        width = int(i.max() - i.min() + 1)
        height = int(j.max() - j.min() + 1)
        if width * height != self.n_sites:
            return None
        return width, height


def discretize_domain(spec: DomainSpec) -> Lattice:
    """
    Discretize a domain into Omega_a = Omega ∩ aZ² and its external boundary.

    Args:
        spec: Domain polygon and mesh

    Returns:
        Lattice with row-major site ordering

    Raises:
        InvalidPolygon: for degenerate or self-intersecting shapes
        EmptyLattice: if no lattice point lies strictly inside the domain
    """
    spec.validate()
    a = float(spec.mesh)
    if a >= spec.diameter:
        raise EmptyLattice(f"mesh {a} is not below the domain diameter {spec.diameter:.4f}")

    x0, x1, y0, y1 = spec.bounding_box
    ii = np.arange(int(np.floor(x0 / a)) - 1, int(np.ceil(x1 / a)) + 2)
    jj = np.arange(int(np.floor(y0 / a)) - 1, int(np.ceil(y1 / a)) + 2)
    grid_j, grid_i = np.meshgrid(jj, ii, indexing='ij')
    candidates = np.stack([grid_i.ravel(), grid_j.ravel()], axis=1)
    points = candidates * a
    vertices = spec.vertices

    inside = points_in_polygon(points, vertices)
    on_edge = distance_to_boundary(points, vertices) <= _EDGE_TOLERANCE * max(a, 1.0)
    interior = candidates[inside & ~on_edge]
    if len(interior) == 0:
        raise EmptyLattice(f"no interior site for mesh {a}")

    # row-major: sort by y then x
    order = np.lexsort((interior[:, 0], interior[:, 1]))
    interior = interior[order]
    index = {(int(i), int(j)): k for k, (i, j) in enumerate(interior)}

    boundary_set = set()
    for i, j in interior:
        for di, dj in NEIGHBOR_OFFSETS:
            key = (int(i + di), int(j + dj))
            if key not in index:
                boundary_set.add(key)
    boundary = np.array(sorted(boundary_set, key=lambda p: (p[1], p[0])), dtype=np.int64).reshape(-1, 2)
    boundary_index = {(int(i), int(j)): k for k, (i, j) in enumerate(boundary)}

    n = len(interior)
    interior_neighbors = -np.ones((n, 4), dtype=np.int64)
    boundary_neighbors = -np.ones((n, 4), dtype=np.int64)
    for k, (i, j) in enumerate(interior):
        for slot, (di, dj) in enumerate(NEIGHBOR_OFFSETS):
            key = (int(i + di), int(j + dj))
            if key in index:
                interior_neighbors[k, slot] = index[key]
            else:
                boundary_neighbors[k, slot] = boundary_index[key]

    lattice = Lattice(
        spec=spec,
        interior_ij=interior.astype(np.int64),
        boundary_ij=boundary,
        interior_neighbors=interior_neighbors,
        boundary_neighbors=boundary_neighbors,
        _index=index,
    )
    logger.info(f"Discretized domain at a={a:.6g}: {lattice.n_sites} interior, {lattice.n_boundary} boundary sites")
    return lattice


def rectangle_lattice(width: int, height: int, mesh: float = 1.0) -> Lattice:
    """
    Lattice whose interior is a full width x height rectangle of sites.

    Args:
        width: Sites per row
        height: Number of rows
        mesh: Lattice spacing

    Returns:
        Lattice of the open rectangle (0, (width+1)a) x (0, (height+1)a)
    """
    w, h = (width + 1) * mesh, (height + 1) * mesh
    return discretize_domain(DomainSpec(mesh=mesh, shape=((0.0, 0.0), (w, 0.0), (w, h), (0.0, h))))


def unit_square_lattice(n: int) -> Lattice:
    """Unit square at mesh 1/n, i.e. an (n-1) x (n-1) interior."""
    return discretize_domain(DomainSpec(mesh=1.0 / n))


def dump_lattice(lattice: Lattice, path: Path, assignment: Optional[np.ndarray] = None):
    """
    Write the lattice as CSV (index, x, y, is_boundary, block_i, block_j).

    Args:
        lattice: Lattice to dump
        path: Output CSV file
        assignment: Optional per-site (block_i, block_j) from a BlockGrid
    """
    from ..persistence import save_table

    rows = []
    for k, (x, y) in enumerate(lattice.interior_sites):
        bi, bj = (int(assignment[k, 0]), int(assignment[k, 1])) if assignment is not None else (None, None)
        rows.append({'index': k, 'x': x, 'y': y, 'is_boundary': False, 'block_i': bi, 'block_j': bj})
    for k, (x, y) in enumerate(lattice.boundary_sites):
        rows.append({'index': lattice.n_sites + k, 'x': x, 'y': y, 'is_boundary': True,
                     'block_i': None, 'block_j': None})
    save_table(rows, path, columns=['index', 'x', 'y', 'is_boundary', 'block_i', 'block_j'])

"""
Pairing distributions with indicators of rough subdomains, and box-counting dimensions.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import DimensionTooLarge
from ..lattice.domain import points_in_polygon
from .functionals import FieldFunctional, GridField, SmoothField, cell_pairing_matrix, pair_with_basis, translate_range
from .mra import CoefficientMap, decompose
from .wavelets import WaveletBasis

logger = logging.getLogger(__name__)

DEFAULT_DIMENSION_LEVELS = range(2, 8)


@dataclass(frozen=True, eq=False)
class Region:
    """
    A subset B of the plane: a polygon, a bitmap of cells, or a finite point set.

    Point sets carry no area and are only used for dimension estimates.
    """
    kind: str
    vertices: Optional[np.ndarray] = None
    mask: Optional[np.ndarray] = None
    origin: Tuple[float, float] = (0.0, 0.0)
    cell: float = 1.0
    points: Optional[np.ndarray] = None

    @classmethod
    def polygon(cls, vertices) -> 'Region':
        return cls('polygon', vertices=np.asarray(vertices, dtype=float))

    @classmethod
    def rectangle(cls, x0: float, x1: float, y0: float, y1: float) -> 'Region':
        return cls.polygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])

    @classmethod
    def bitmap(cls, mask: np.ndarray, origin=(0.0, 0.0), cell: float = 1.0) -> 'Region':
        return cls('bitmap', mask=np.asarray(mask, dtype=bool), origin=tuple(origin), cell=cell)

    @classmethod
    def point_set(cls, points) -> 'Region':
        return cls('points', points=np.atleast_2d(np.asarray(points, dtype=float)))

    @property
    def box(self) -> Tuple[float, float, float, float]:
        if self.kind == 'polygon':
            v = self.vertices
            return (float(v[:, 0].min()), float(v[:, 0].max()), float(v[:, 1].min()), float(v[:, 1].max()))
        if self.kind == 'bitmap':
            nx, ny = self.mask.shape
            return (self.origin[0], self.origin[0] + nx * self.cell, self.origin[1], self.origin[1] + ny * self.cell)
        p = self.points
        return (float(p[:, 0].min()), float(p[:, 0].max()), float(p[:, 1].min()), float(p[:, 1].max()))

    def axis_rectangle(self) -> Optional[Tuple[float, float, float, float]]:
        """The box when the region is an axis-parallel rectangle polygon."""
        if self.kind != 'polygon' or len(self.vertices) != 4:
            return None
        x0, x1, y0, y1 = self.box
        on_corners = all(
            (math.isclose(vx, x0) or math.isclose(vx, x1)) and (math.isclose(vy, y0) or math.isclose(vy, y1))
            for vx, vy in self.vertices
        )
        return (x0, x1, y0, y1) if on_corners else None

    def indicator(self, level: int) -> GridField:
        """1_B as a cell field: bitmaps as given, polygons rasterized at cell centers of side 2^-level."""
        if self.kind == 'bitmap':
            return GridField(self.mask.astype(float), self.origin, self.cell)
        if self.kind != 'polygon':
            raise ValueError("a point set has no indicator")
        cell = 2.0 ** (-level)
        x0, x1, y0, y1 = self.box
        i0, j0 = math.floor(x0 / cell), math.floor(y0 / cell)
        nx, ny = math.ceil(x1 / cell) - i0, math.ceil(y1 / cell) - j0
        cx = (i0 + 0.5 + np.arange(nx)) * cell
        cy = (j0 + 0.5 + np.arange(ny)) * cell
        gx, gy = np.meshgrid(cx, cy, indexing='ij')
        inside = points_in_polygon(np.column_stack([gx.ravel(), gy.ravel()]), self.vertices)
        return GridField(inside.reshape(nx, ny).astype(float), (i0 * cell, j0 * cell), cell)

    def boundary_samples(self, spacing: float) -> np.ndarray:
        """Points on the boundary at most `spacing` apart (the points themselves for a point set)."""
        if self.kind == 'points':
            return self.points
        if self.kind == 'polygon':
            segments = np.stack([self.vertices, np.roll(self.vertices, -1, axis=0)], axis=1)
        else:
            segments = _bitmap_edges(self.mask, self.origin, self.cell)
        chunks = []
        for p, q in segments:
            count = max(int(math.ceil(np.linalg.norm(q - p) / spacing)), 1)
            t = np.arange(count + 1)[:, None] / count
            chunks.append(p + t * (q - p))
        return np.concatenate(chunks) if chunks else np.zeros((0, 2))


def _bitmap_edges(mask: np.ndarray, origin, cell: float) -> np.ndarray:
    """Unit edges separating cells inside the mask from cells outside (or off the bitmap)."""
    padded = np.pad(mask, 1)
    edges = []
    # vertical edges between (i-1, j) and (i, j) in padded coordinates
    diff_x = padded[1:, 1:-1] != padded[:-1, 1:-1]
    for i, j in np.argwhere(diff_x):
        x = origin[0] + i * cell
        edges.append(((x, origin[1] + j * cell), (x, origin[1] + (j + 1) * cell)))
    diff_y = padded[1:-1, 1:] != padded[1:-1, :-1]
    for i, j in np.argwhere(diff_y):
        y = origin[1] + j * cell
        edges.append(((origin[0] + i * cell, y), (origin[0] + (i + 1) * cell, y)))
    return np.asarray(edges, dtype=float).reshape(-1, 2, 2)


def koch_curve(level: int, start=(0.0, 0.0), end=(1.0, 0.0)) -> np.ndarray:
    """
    Quadratic Koch curve: each segment is replaced by 8 segments of a quarter of its length.

    Returns:
        Polyline vertices including both endpoints
    """
    points = np.array([start, end], dtype=float)
    for _ in range(level):
        p, q = points[:-1], points[1:]
        d = (q - p) / 4.0
        n = np.column_stack([-d[:, 1], d[:, 0]])
        steps = [p, p + d, p + d + n, p + 2 * d + n, p + 2 * d, p + 2 * d - n, p + 3 * d - n, p + 3 * d]
        refined = np.stack(steps, axis=1).reshape(-1, 2)
        points = np.vstack([refined, points[-1:]])
    return points


def koch_island(level: int, center=(0.5, 0.5), side: float = 0.5) -> Region:
    """Quadratic Koch island: the Koch construction applied to every side of a square."""
    cx, cy = center
    h = side / 2.0
    corners = [(cx - h, cy - h), (cx + h, cy - h), (cx + h, cy + h), (cx - h, cy + h)]
    pieces = [koch_curve(level, corners[i], corners[(i + 1) % 4])[:-1] for i in range(4)]
    return Region.polygon(np.vstack(pieces))


@dataclass
class BoxDimension:
    """Least-squares slope of log N(2^-n) against n log 2."""
    estimate: float
    levels: List[int]
    counts: List[int]
    intercept: float

    def constant(self) -> float:
        """C_B = max_n N(2^-n) 2^{-n d}."""
        return float(max(c * 2.0 ** (-n * self.estimate) for n, c in zip(self.levels, self.counts)))

    def to_dict(self) -> Dict:
        return {'estimate': self.estimate, 'levels': self.levels, 'counts': self.counts, 'intercept': self.intercept}


def box_dimension(region: Region, levels: Sequence[int] = DEFAULT_DIMENSION_LEVELS) -> BoxDimension:
    """
    Box-counting dimension of the boundary of B (of B itself for point sets).

    N(2^-n) counts the dyadic squares of side 2^-n meeting the boundary,
    found from boundary samples four times finer than the finest level.

    Args:
        region: Region B
        levels: Levels n of the fit

    Returns:
        BoxDimension with the per-level counts
    """
    levels = sorted(int(n) for n in levels)
    samples = region.boundary_samples(2.0 ** (-(levels[-1] + 2)))
    counts = []
    for n in levels:
        boxes = np.floor(samples * (2 ** n)).astype(np.int64)
        counts.append(int(len(np.unique(boxes, axis=0))))
    x = np.array(levels, dtype=float) * math.log(2.0)
    y = np.log(np.array(counts, dtype=float))
    if len(levels) == 1:
        slope, intercept = float(y[0] / x[0]) if x[0] else 0.0, 0.0
    else:
        slope, intercept = np.polyfit(x, y, 1)
    logger.info(f"Box dimension {slope:.4f} from counts {counts} at levels {levels}")
    return BoxDimension(float(slope), levels, counts, float(intercept))


@dataclass
class SubdomainIntegral:
    """<f, 1_B> through a truncated wavelet expansion, with the bound on the omitted levels."""
    value: float
    tail_bound: float
    scaling_term: float
    level_terms: Dict[int, float] = field(default_factory=dict)
    dimension: Optional[BoxDimension] = None
    coefficient_constant: float = 0.0
    n0: int = 0
    n_cut: int = 0

    def to_dict(self) -> Dict:
        return {
            'value': self.value, 'tail_bound': self.tail_bound, 'scaling_term': self.scaling_term,
            'level_terms': {str(k): v for k, v in self.level_terms.items()},
            'dimension': self.dimension.to_dict() if self.dimension else None,
            'coefficient_constant': self.coefficient_constant, 'n0': self.n0, 'n_cut': self.n_cut,
        }


def _indicator_coefficients(region: Region, basis: WaveletBasis, level: int, ks_x, ks_y) -> np.ndarray:
    """<1_B, phi_{n,k}> on the given translates; exact for rectangles and bitmaps."""
    rect = region.axis_rectangle()
    if rect is not None:
        ax = cell_pairing_matrix(np.array(rect[:2]), ks_x, level, basis, "phi")
        ay = cell_pairing_matrix(np.array(rect[2:]), ks_y, level, basis, "phi")
        return np.outer(ax.toarray()[:, 0], ay.toarray()[:, 0]) / 2.0 ** level
    coefficients, _, _ = pair_with_basis(region.indicator(level + 1), basis, level, ("phi", "phi"), ks_x, ks_y)
    return coefficients


def integrate_over_subdomain(
    f: FieldFunctional,
    region: Region,
    alpha: float,
    basis: WaveletBasis,
    n_cut: int,
    n0: int = 0,
    dimension: Optional[BoxDimension] = None,
) -> SubdomainIntegral:
    """
    <f, 1_B> = Σ_x <f, phi_{n0,x}><phi_{n0,x}, 1_B> + Σ_{n=n0}^{n_cut} Σ_x <f, psi_{n,x}><psi_{n,x}, 1_B>.

    Both f and 1_B are projected on V_{n_cut+1}; the fast wavelet transform
    splits the inner product into the scaling term and one term per level.
    The omitted levels are bounded by

        Σ_{n>n_cut} 3 L² C_B 2^{n d} · 2^-n ||psi||_1 · K_f 2^{-(1+alpha) n}

    with d the box dimension of the boundary, C_B its counting constant and
    K_f the largest observed |<f, psi_{n,x}>| 2^{(1+alpha) n}.

    Args:
        f: Field functional
        region: Subdomain B
        alpha: Exponent in (-1, 0)
        basis: Wavelet basis
        n_cut: Finest wavelet level kept
        n0: Coarsest level
        dimension: Precomputed box dimension of the boundary

    Returns:
        SubdomainIntegral

    Raises:
        DimensionTooLarge: if the box dimension is not below 2 + alpha
    """
    if not -1.0 < alpha < 0.0:
        raise ValueError(f"alpha must lie in (-1, 0), got {alpha}")
    if n_cut < n0:
        raise ValueError(f"n_cut={n_cut} below n0={n0}")
    dimension = dimension or box_dimension(region)
    d_bar = dimension.estimate
    if d_bar >= 2.0 + alpha:
        raise DimensionTooLarge(f"box dimension {d_bar:.3f} >= 2 + alpha = {2.0 + alpha:.3f}")

    top = n_cut + 1
    if isinstance(f, SmoothField):
        f = f.to_grid(top + 3)
    x0, x1, y0, y1 = f.box
    ks_x = translate_range(x0, x1, top, basis)
    ks_y = translate_range(y0, y1, top, basis)
    f_coeffs, _, _ = pair_with_basis(f, basis, top, ("phi", "phi"), ks_x, ks_y)
    b_coeffs = _indicator_coefficients(region, basis, top, ks_x, ks_y)

    origin = (int(ks_x[0]), int(ks_y[0]))
    f_map = CoefficientMap(top, 0, origin, f_coeffs)
    b_map = CoefficientMap(top, 0, origin, b_coeffs)
    level_terms = {}
    k_f = 0.0
    for n in range(n_cut, n0 - 1, -1):
        f_proj = decompose(f_map, basis)
        b_proj = decompose(b_map, basis)
        level_terms[n] = float(sum(np.sum(fw.values * bw.values) for fw, bw in zip(f_proj.wavelets, b_proj.wavelets)))
        largest = max(fw.sup() for fw in f_proj.wavelets)
        k_f = max(k_f, largest * 2.0 ** ((1.0 + alpha) * n))
        f_map, b_map = f_proj.scaling, b_proj.scaling
    scaling_term = float(np.sum(f_map.values * b_map.values))
    value = scaling_term + sum(level_terms.values())

    q = 2.0 ** (d_bar - 2.0 - alpha)
    prefactor = 3.0 * basis.length ** 2 * dimension.constant() * basis.psi_l1() * k_f
    tail = prefactor * q ** (n_cut + 1) / (1.0 - q)
    logger.info(f"<f, 1_B> = {value:.8g} +- {tail:.3g} (n0={n0}, n_cut={n_cut}, d={d_bar:.3f})")
    return SubdomainIntegral(value, float(tail), scaling_term, dict(sorted(level_terms.items())),
                             dimension, float(k_f), n0, n_cut)

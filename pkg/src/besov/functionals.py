"""
Distributions on the plane through their pairings with tensor-product basis functions.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import sparse

from ..disorder.field import H_EXPONENT, MAGNETISATION_EXPONENT
from ..lattice.domain import Lattice
from .wavelets import WaveletBasis

logger = logging.getLogger(__name__)

Box = Tuple[float, float, float, float]


@dataclass(frozen=True, eq=False)
class GridField:
    """
    Piecewise constant density: values[ix, iy] on the cell
    [x0 + ix*cell, x0 + (ix+1)*cell) x [y0 + iy*cell, y0 + (iy+1)*cell).
    """
    values: np.ndarray
    origin: Tuple[float, float]
    cell: float

    @property
    def box(self) -> Box:
        nx, ny = self.values.shape
        return (self.origin[0], self.origin[0] + nx * self.cell,
                self.origin[1], self.origin[1] + ny * self.cell)

    def edges(self, axis: int) -> np.ndarray:
        count = self.values.shape[axis]
        return self.origin[axis] + self.cell * np.arange(count + 1)

    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Pointwise values (0 outside the grid)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ix = np.floor((x - self.origin[0]) / self.cell).astype(np.int64)
        iy = np.floor((y - self.origin[1]) / self.cell).astype(np.int64)
        nx, ny = self.values.shape
        inside = (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
        out = np.zeros(np.broadcast(x, y).shape)
        out[inside] = self.values[ix[inside], iy[inside]]
        return out

    def integral(self) -> float:
        return float(self.values.sum() * self.cell ** 2)

    def scaled(self, factor: float) -> 'GridField':
        return GridField(self.values * factor, self.origin, self.cell)

    def dilate(self) -> 'GridField':
        """f(2·): same values on cells of half the size around half the origin."""
        return GridField(self.values, (0.5 * self.origin[0], 0.5 * self.origin[1]), 0.5 * self.cell)


@dataclass(frozen=True, eq=False)
class AtomicField:
    """Point masses: Σ_p masses[p] delta_{points[p]}."""
    points: np.ndarray
    masses: np.ndarray

    @property
    def box(self) -> Box:
        if len(self.points) == 0:
            return (0.0, 0.0, 0.0, 0.0)
        return (float(self.points[:, 0].min()), float(self.points[:, 0].max()),
                float(self.points[:, 1].min()), float(self.points[:, 1].max()))

    def integral(self) -> float:
        return float(np.sum(self.masses))

    def dilate(self) -> 'AtomicField':
        """f(2·) for a measure: atoms at p/2 with mass / 4."""
        return AtomicField(0.5 * self.points, 0.25 * self.masses)


@dataclass(frozen=True, eq=False)
class SmoothField:
    """Continuous density given by a vectorized callable on a bounding box."""
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    box: Box

    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(x, dtype=float), np.asarray(y, dtype=float)), dtype=float)

    def to_grid(self, level: int, nodes: int = 4) -> GridField:
        """Exact-to-quadrature cell averages on the dyadic grid of side 2^-level covering the box."""
        cell = 2.0 ** (-level)
        x0 = math.floor(self.box[0] / cell) * cell
        y0 = math.floor(self.box[2] / cell) * cell
        nx = int(math.ceil((self.box[1] - x0) / cell - 1e-12))
        ny = int(math.ceil((self.box[3] - y0) / cell - 1e-12))
        t, w = leggauss(nodes)
        lx = x0 + cell * np.arange(nx)
        ly = y0 + cell * np.arange(ny)
        values = np.zeros((nx, ny))
        for ti, wi in zip(t, w):
            for tj, wj in zip(t, w):
                gx, gy = np.meshgrid(lx + 0.5 * cell * (1 + ti), ly + 0.5 * cell * (1 + tj), indexing='ij')
                values += 0.25 * wi * wj * self(gx, gy)
        return GridField(values, (x0, y0), cell)


FieldFunctional = Union[GridField, AtomicField, SmoothField]


def piecewise_magnetisation(lattice: Lattice, spins: np.ndarray) -> GridField:
    """Phi^a: density a^{-1/8} sigma_x on S_a(x)."""
    a = lattice.mesh
    ij = lattice.interior_ij
    i0, j0 = ij.min(axis=0)
    nx, ny = ij.max(axis=0) - ij.min(axis=0) + 1
    values = np.zeros((int(nx), int(ny)))
    values[ij[:, 0] - i0, ij[:, 1] - j0] = a ** (-MAGNETISATION_EXPONENT) * np.asarray(spins, dtype=float)
    return GridField(values, ((i0 - 0.5) * a, (j0 - 0.5) * a), a)


def atomic_magnetisation(lattice: Lattice, spins: np.ndarray) -> AtomicField:
    """Phi~^a: mass a^{15/8} sigma_x at x."""
    return AtomicField(lattice.interior_sites.copy(), lattice.mesh ** H_EXPONENT * np.asarray(spins, dtype=float))


def indicator_field(mask: np.ndarray, origin: Tuple[float, float], cell: float) -> GridField:
    """Indicator of a union of cells given as a boolean bitmap mask[ix, iy]."""
    return GridField(np.asarray(mask, dtype=float), origin, cell)


def translate_range(lo: float, hi: float, level: int, basis: WaveletBasis) -> np.ndarray:
    """Translates k whose support [k, k+L-1] 2^-level meets [lo, hi]."""
    scale = 2.0 ** level
    k_min = int(math.floor(scale * lo - basis.support)) + 1
    k_max = int(math.ceil(scale * hi)) - 1
    return np.arange(k_min, max(k_max, k_min) + 1)


def cell_pairing_matrix(edges: np.ndarray, ks: np.ndarray, level: int, basis: WaveletBasis, kind: str) -> sparse.csr_matrix:
    """A[k, c] = F(2^n e_{c+1} - k) - F(2^n e_c - k) with F the antiderivative, restricted to overlaps."""
    scale = 2.0 ** level
    antiderivative = basis.antiderivative(kind)
    rows, cols, vals = [], [], []
    for r, k in enumerate(ks):
        lo, hi = k / scale, (k + basis.support) / scale
        c_start = max(int(np.searchsorted(edges, lo, side='right')) - 1, 0)
        c_stop = min(int(np.searchsorted(edges, hi, side='left')), len(edges) - 1)
        if c_stop <= c_start:
            continue
        cells = np.arange(c_start, c_stop)
        upper = antiderivative(scale * edges[cells + 1] - k)
        lower = antiderivative(scale * edges[cells] - k)
        rows.extend([r] * len(cells))
        cols.extend(cells.tolist())
        vals.extend((upper - lower).tolist())
    return sparse.csr_matrix((vals, (rows, cols)), shape=(len(ks), len(edges) - 1))


def _point_matrix(coords: np.ndarray, ks: np.ndarray, level: int, basis: WaveletBasis, kind: str) -> sparse.csr_matrix:
    """B[k, p] = f(2^n coords_p - k) on the support overlaps."""
    scale = 2.0 ** level
    fn = basis.function(kind)
    rows, cols, vals = [], [], []
    t = scale * coords
    span = int(math.ceil(basis.support))
    for offset in range(span + 1):
        k = np.floor(t).astype(np.int64) - offset
        r = k - ks[0]
        ok = (r >= 0) & (r < len(ks))
        values = fn(t[ok] - k[ok])
        rows.append(r[ok])
        cols.append(np.flatnonzero(ok))
        vals.append(values)
    return sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(len(ks), len(coords))
    )


def pair_with_basis(
    f: FieldFunctional,
    basis: WaveletBasis,
    level: int,
    kinds: Tuple[str, str],
    ks_x: Optional[np.ndarray] = None,
    ks_y: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    <f, b_{n,k}> for one tensor-product type b = f1 ⊗ f2 at level n.

    Grid densities pair through antiderivative differences per cell and
    axis (separable); atoms pair by point evaluation. Smooth fields are
    first averaged on the grid of side 2^-(n+3).

    Args:
        f: Field functional
        basis: Wavelet basis
        level: Level n
        kinds: ("phi" | "psi", "phi" | "psi") for the x and y factors
        ks_x: Translates in x (default: all whose support meets supp f)
        ks_y: Translates in y

    Returns:
        (coefficients[kx, ky], ks_x, ks_y)
    """
    if isinstance(f, SmoothField):
        f = f.to_grid(level + 3)
    x0, x1, y0, y1 = f.box
    ks_x = translate_range(x0, x1, level, basis) if ks_x is None else ks_x
    ks_y = translate_range(y0, y1, level, basis) if ks_y is None else ks_y
    scale = 2.0 ** level
    if isinstance(f, GridField):
        ax = cell_pairing_matrix(f.edges(0), ks_x, level, basis, kinds[0])
        ay = cell_pairing_matrix(f.edges(1), ks_y, level, basis, kinds[1])
        partial = ax @ f.values
        coefficients = (ay @ partial.T).T / scale
        return np.asarray(coefficients), ks_x, ks_y
    if len(f.points) == 0:
        return np.zeros((len(ks_x), len(ks_y))), ks_x, ks_y
    bx = _point_matrix(f.points[:, 0], ks_x, level, basis, kinds[0])
    by = _point_matrix(f.points[:, 1], ks_y, level, basis, kinds[1])
    coefficients = scale * (bx @ sparse.diags(f.masses) @ by.T).toarray()
    return coefficients, ks_x, ks_y

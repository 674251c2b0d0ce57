"""
Multi-resolution projections, the fast wavelet transform and Besov-Hölder norms.
"""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..config import config
from .functionals import FieldFunctional, pair_with_basis
from .wavelets import WaveletBasis

logger = logging.getLogger(__name__)

# (x factor, y factor) of the scaling function and the three wavelets
KINDS = {0: ("phi", "phi"), 1: ("phi", "psi"), 2: ("psi", "phi"), 3: ("psi", "psi")}


@dataclass
class CoefficientMap:
    """Coefficients c[k1 - origin[0], k2 - origin[1]] of one basis type at one level."""
    level: int
    kind: int
    origin: Tuple[int, int]
    values: np.ndarray

    def sup(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def rows(self) -> List[Dict[str, float]]:
        """CSV rows (level, i, x1, x2, value) for nonzero coefficients."""
        scale = 2.0 ** (-self.level)
        out = []
        for a, b in zip(*np.nonzero(self.values)):
            out.append({
                'level': self.level, 'i': self.kind,
                'x1': (self.origin[0] + a) * scale, 'x2': (self.origin[1] + b) * scale,
                'value': float(self.values[a, b]),
            })
        return out

    def scaled(self, factor: float, level: Optional[int] = None) -> 'CoefficientMap':
        return CoefficientMap(self.level if level is None else level, self.kind, self.origin, self.values * factor)


@dataclass
class MRAProjection:
    """Scaling coefficients of V_n f and the three wavelet maps of W_n f."""
    level: int
    scaling: CoefficientMap
    wavelets: List[CoefficientMap] = field(default_factory=list)

    def save_csv(self, path: Path):
        from ..persistence import save_table

        rows = self.scaling.rows()
        for w in self.wavelets:
            rows.extend(w.rows())
        save_table(rows, path, columns=['level', 'i', 'x1', 'x2', 'value'])


def _coefficient_map(f: FieldFunctional, basis: WaveletBasis, level: int, kind: int) -> CoefficientMap:
    values, ks_x, ks_y = pair_with_basis(f, basis, level, KINDS[kind])
    return CoefficientMap(level, kind, (int(ks_x[0]), int(ks_y[0])), values)


def mra_project(f: FieldFunctional, level: int, basis: WaveletBasis, wavelets: bool = True) -> MRAProjection:
    """
    <f, phi_{n,x}> and <f, psi^(i)_{n,x}> for every x whose support meets supp f.

    Args:
        f: Field functional
        level: Level n
        basis: Wavelet basis
        wavelets: Also compute the three wavelet maps

    Returns:
        MRAProjection
    """
    scaling = _coefficient_map(f, basis, level, 0)
    details = [_coefficient_map(f, basis, level, kind) for kind in (1, 2, 3)] if wavelets else []
    return MRAProjection(level, scaling, details)


def _analysis(values: np.ndarray, origin: int, filt: np.ndarray, axis: int) -> Tuple[np.ndarray, int]:
    """c'[k] = Σ_m filt[m] c[2k + m] along one axis; returns (values, new origin)."""
    moved = np.moveaxis(values, axis, 0)
    n = moved.shape[0]
    length = len(filt)
    k_min = math.ceil((origin - length + 1) / 2)
    k_max = (origin + n - 1) // 2
    out = np.zeros((k_max - k_min + 1,) + moved.shape[1:])
    for m, fm in enumerate(filt):
        idx = 2 * np.arange(k_min, k_max + 1) + m - origin
        ok = (idx >= 0) & (idx < n)
        out[ok] += fm * moved[idx[ok]]
    return np.moveaxis(out, 0, axis), k_min


def _synthesis(values: np.ndarray, origin: int, filt: np.ndarray, axis: int) -> Tuple[np.ndarray, int]:
    """c[m] = Σ_k filt[m - 2k] c'[k] along one axis; returns (values, new origin)."""
    moved = np.moveaxis(values, axis, 0)
    n = moved.shape[0]
    length = len(filt)
    new_origin = 2 * origin
    out = np.zeros((2 * (n - 1) + length,) + moved.shape[1:])
    for m, fm in enumerate(filt):
        out[m:m + 2 * n:2] += fm * moved
    return np.moveaxis(out, 0, axis), new_origin


def decompose(scaling: CoefficientMap, basis: WaveletBasis) -> MRAProjection:
    """
    One step of the 2-D fast wavelet transform: level j scaling map to level j-1 maps.

    Returns:
        MRAProjection at level j-1 whose four maps reconstruct the input exactly
    """
    filters = {"phi": basis.h, "psi": basis.g}
    maps = {}
    for kind, (fx, fy) in KINDS.items():
        tmp, ox = _analysis(scaling.values, scaling.origin[0], filters[fx], 0)
        out, oy = _analysis(tmp, scaling.origin[1], filters[fy], 1)
        maps[kind] = CoefficientMap(scaling.level - 1, kind, (ox, oy), out)
    return MRAProjection(scaling.level - 1, maps[0], [maps[1], maps[2], maps[3]])


def _add_into(total: Optional[CoefficientMap], part: CoefficientMap) -> CoefficientMap:
    if total is None:
        return part
    o0 = min(total.origin[0], part.origin[0])
    o1 = min(total.origin[1], part.origin[1])
    e0 = max(total.origin[0] + total.values.shape[0], part.origin[0] + part.values.shape[0])
    e1 = max(total.origin[1] + total.values.shape[1], part.origin[1] + part.values.shape[1])
    out = np.zeros((e0 - o0, e1 - o1))
    for m in (total, part):
        a, b = m.origin[0] - o0, m.origin[1] - o1
        out[a:a + m.values.shape[0], b:b + m.values.shape[1]] += m.values
    return CoefficientMap(total.level, 0, (o0, o1), out)


def reconstruct(projection: MRAProjection, basis: WaveletBasis) -> CoefficientMap:
    """Inverse of decompose: level j-1 maps back to level j scaling coefficients."""
    filters = {"phi": basis.h, "psi": basis.g}
    total = None
    for cmap in [projection.scaling] + list(projection.wavelets):
        fx, fy = KINDS[cmap.kind]
        tmp, ox = _synthesis(cmap.values, cmap.origin[0], filters[fx], 0)
        out, oy = _synthesis(tmp, cmap.origin[1], filters[fy], 1)
        total = _add_into(total, CoefficientMap(projection.level + 1, 0, (ox, oy), out))
    return total


def trim(cmap: CoefficientMap, tol: float = 0.0) -> CoefficientMap:
    """Drop all-zero border rows and columns."""
    nz = np.argwhere(np.abs(cmap.values) > tol)
    if len(nz) == 0:
        return CoefficientMap(cmap.level, cmap.kind, cmap.origin, np.zeros((0, 0)))
    (a0, b0), (a1, b1) = nz.min(axis=0), nz.max(axis=0)
    return CoefficientMap(cmap.level, cmap.kind, (cmap.origin[0] + int(a0), cmap.origin[1] + int(b0)),
                          cmap.values[a0:a1 + 1, b0:b1 + 1])


def sampling_resolution(points_per_unit: Optional[int] = None, basis: Optional[WaveletBasis] = None) -> int:
    """Samples R per level-n grid spacing: the next power of two of SUP_POINTS_PER_SUPPORT, at most 2^J."""
    pts = points_per_unit or config.SUP_POINTS_PER_SUPPORT
    r = 1 << max(int(math.ceil(math.log2(max(pts, 1)))), 0)
    if basis is not None:
        r = min(r, 1 << basis.depth)
    return r


def evaluate_maps(maps: List[CoefficientMap], basis: WaveletBasis, resolution: int) -> np.ndarray:
    """
    Values of Σ c_k b_{n,k} on the grid y = j / (R 2^n) covering the supports.

    All maps must share one level. Separable: E_x C E_yᵀ per map.
    """
    level = maps[0].level
    scale = 2.0 ** level
    lo0 = min(m.origin[0] for m in maps)
    lo1 = min(m.origin[1] for m in maps)
    hi0 = max(m.origin[0] + m.values.shape[0] for m in maps) - 1 + int(basis.support)
    hi1 = max(m.origin[1] + m.values.shape[1] for m in maps) - 1 + int(basis.support)
    tx = np.arange(lo0 * resolution, hi0 * resolution + 1) / resolution
    ty = np.arange(lo1 * resolution, hi1 * resolution + 1) / resolution
    total = np.zeros((len(tx), len(ty)))
    for m in maps:
        if m.values.size == 0:
            continue
        fx, fy = (basis.function(k) for k in KINDS[m.kind])
        kx = m.origin[0] + np.arange(m.values.shape[0])
        ky = m.origin[1] + np.arange(m.values.shape[1])
        ex = fx(tx[:, None] - kx[None, :])
        ey = fy(ty[:, None] - ky[None, :])
        total += ex @ m.values @ ey.T
    return scale * total


def level_sup(maps: List[CoefficientMap], basis: WaveletBasis, resolution: Optional[int] = None) -> float:
    """Sampled sup-norm of a level's projection; a lower bound of the true sup."""
    maps = [m for m in maps if m.values.size and np.any(m.values != 0)]
    if not maps:
        return 0.0
    resolution = resolution or sampling_resolution(basis=basis)
    return float(np.max(np.abs(evaluate_maps(maps, basis, resolution))))


@dataclass
class BesovNorm:
    """||V_0 f||_inf + max_n 2^{alpha n} ||W_n f||_inf with the arg-sup level."""
    alpha: float
    value: float
    scaling_sup: float
    contributions: Dict[int, float]
    argsup_level: int
    first_level: int
    n_max: int
    resolution: int

    def to_dict(self) -> Dict:
        return {
            'alpha': self.alpha, 'value': self.value, 'scaling_sup': self.scaling_sup,
            'contributions': {str(k): v for k, v in self.contributions.items()},
            'argsup_level': self.argsup_level, 'first_level': self.first_level, 'n_max': self.n_max,
            'resolution': self.resolution,
        }


def besov_holder_norm(
    f: FieldFunctional,
    alpha: float,
    n_max: int,
    basis: WaveletBasis,
    first_level: int = 1,
    resolution: Optional[int] = None,
) -> BesovNorm:
    """
    Wavelet Besov-Hölder norm of f.

    Level 0 carries the scaling part; wavelet levels run from first_level
    to n_max. Sup-norms are sampled R times per grid spacing 2^-n.

    Args:
        f: Field functional
        alpha: Exponent (negative)
        n_max: Finest wavelet level
        basis: Wavelet basis
        first_level: Coarsest wavelet level (0 also includes W_0)
        resolution: Samples per level spacing (default from SUP_POINTS_PER_SUPPORT)

    Returns:
        BesovNorm
    """
    if n_max < max(first_level, 1):
        raise ValueError(f"n_max={n_max} below first_level={first_level}")
    resolution = resolution or sampling_resolution(basis=basis)
    scaling = mra_project(f, 0, basis, wavelets=False).scaling
    scaling_sup = level_sup([scaling], basis, resolution)
    contributions = {}
    for n in range(first_level, n_max + 1):
        projection = mra_project(f, n, basis)
        contributions[n] = 2.0 ** (alpha * n) * level_sup(projection.wavelets, basis, resolution)
    argsup = max(contributions, key=contributions.get)
    value = scaling_sup + contributions[argsup]
    logger.info(f"Besov norm alpha={alpha}: {value:.6g} (sup at level {argsup})")
    return BesovNorm(alpha, value, scaling_sup, contributions, argsup, first_level, n_max, resolution)


def dilation_discrepancy(f: FieldFunctional, basis: WaveletBasis, level: int, resolution: Optional[int] = None) -> Dict[str, float]:
    """
    Compare level n+1 of f(2·) with level n of f.

    Coefficients of f(2·) at level n+1 are half those of f at level n and
    the level sup-norms coincide.

    Returns:
        Maximum coefficient discrepancy and the two sampled sup-norms
    """
    resolution = resolution or sampling_resolution(basis=basis)
    base = mra_project(f, level, basis)
    dilated = mra_project(f.dilate(), level + 1, basis)
    gap = 0.0
    for a, b in zip(base.wavelets, dilated.wavelets):
        ta, tb = trim(a, 1e-14), trim(b, 1e-14)
        if ta.values.shape != tb.values.shape or ta.origin != tb.origin:
            gap = max(gap, abs(ta.sup() - 2.0 * tb.sup()))
            continue
        gap = max(gap, float(np.max(np.abs(ta.values - 2.0 * tb.values))) if ta.values.size else 0.0)
    return {
        'coefficient_gap': gap,
        'sup_level_n': level_sup(base.wavelets, basis, resolution),
        'sup_dilated_level_n_plus_1': level_sup(dilated.wavelets, basis, resolution),
    }

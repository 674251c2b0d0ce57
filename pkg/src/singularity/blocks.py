"""
Block observables of the magnetisation and white noise, and their dyadic discretization.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ..disorder.field import H_EXPONENT, MAGNETISATION_EXPONENT
from ..disorder.profiles import Profile, cell_integrals
from ..disorder.white_noise import WhiteNoiseGrid
from ..errors import ZeroBlockMass
from ..ising.observables import magnetisation_observables
from ..lattice.blocks import BlockGrid

logger = logging.getLogger(__name__)

PROVENANCES = ("pure", "disordered")


@dataclass(frozen=True, eq=False)
class BlockObservables:
    """
    Block pairings at mesh a over an N x N grid.

    phi[..., i-1, j-1] = Σ_{x in B_ij} a^{15/8} lambda(x)² sigma_x (atomic field),
    w[..., i-1, j-1]   = a Σ_{x in B_ij} lambda(x) omega_x,
    lam_mass[i-1, j-1] = a² Σ_{x in B_ij} lambda(x)², the variance of w.

    Leading axes, when present, index samples.
    """
    N: int
    phi: np.ndarray
    w: np.ndarray
    lam_mass: np.ndarray
    site_counts: np.ndarray
    mesh: float
    provenance: str = "pure"

    @property
    def n_samples(self) -> int:
        return 1 if self.phi.ndim == 2 else int(self.phi.shape[0])

    def check_nonempty(self):
        if np.any(self.site_counts == 0):
            empty = [tuple(int(v) + 1 for v in ij) for ij in np.argwhere(self.site_counts == 0)]
            raise ZeroBlockMass(f"blocks without lattice sites: {empty[:5]}")

    def features(self, m: Optional[int] = None) -> np.ndarray:
        """
        Per-sample feature vectors (W blocks, then Phi blocks), row-major in (i, j).

        Discretized to 2^-m Z when m is given.
        """
        w = self.w.reshape(-1, self.N * self.N)
        phi = self.phi.reshape(-1, self.N * self.N)
        values = np.concatenate([w, phi], axis=1)
        return values if m is None else dyadic_discretize(values, m)


def _site_noise(noise: Union[WhiteNoiseGrid, np.ndarray], grid: BlockGrid) -> np.ndarray:
    if isinstance(noise, WhiteNoiseGrid):
        return noise.site_values(grid.lattice)
    return np.asarray(noise, dtype=float)


def block_observables(
    spins: np.ndarray,
    noise: Union[WhiteNoiseGrid, np.ndarray, None],
    lam: Profile,
    grid: BlockGrid,
    provenance: str = "pure",
) -> BlockObservables:
    """
    Block values of the atomic magnetisation tested against lambda² 1_B and
    of the noise tested against lambda 1_B.

    Args:
        spins: Spins, shape (n_sites,) or (n_samples, n_sites)
        noise: White-noise grid or per-site omega, shape matching spins (None for zero noise)
        lam: Disorder strength profile
        grid: Block grid over the lattice
        provenance: "pure" or "disordered"

    Returns:
        BlockObservables
    """
    if provenance not in PROVENANCES:
        raise ValueError(f"provenance must be one of {PROVENANCES}")
    lattice = grid.lattice
    a = lattice.mesh
    lam_x = lam.at(lattice.interior_sites)
    phi = magnetisation_observables(spins, grid, lam).blocks
    if noise is None:
        w = np.zeros_like(phi)
    else:
        omega = _site_noise(noise, grid)
        w = a * grid.block_sums(lam_x * omega)
        if w.shape != phi.shape:
            w = np.broadcast_to(w, phi.shape).copy()
    lam_mass = a * a * grid.block_sums(lam_x ** 2)
    return BlockObservables(grid.N, phi, w, lam_mass, grid.counts(), a, provenance)


def smeared_block_magnetisation(spins: np.ndarray, lam: Profile, grid: BlockGrid) -> np.ndarray:
    """Phi^{a,N}: the piecewise constant field tested against lambda² 1_B (cell averages of lambda²)."""
    lattice = grid.lattice
    a = lattice.mesh
    lam_sq = Profile(f"{lam.name}^2", lambda x, y: lam(x, y) ** 2)
    averages = cell_integrals(lam_sq, lattice) / a ** 2
    return grid.block_sums(a ** H_EXPONENT * averages * np.asarray(spins, dtype=float))


def smeared_gap_bound(mesh: float, N: int, lam_sup: float, lam_grad_sup: float) -> float:
    """2 a^{7/8} N^-2 ||lambda||_inf ||lambda'||_inf."""
    return 2.0 * mesh ** (1.0 - MAGNETISATION_EXPONENT) * lam_sup * lam_grad_sup / N ** 2


def dyadic_discretize(values: np.ndarray, m: int) -> np.ndarray:
    """Componentwise 2^-m floor(2^m v)."""
    if m < 0:
        raise ValueError(f"m must be non-negative, got {m}")
    scale = 2.0 ** m
    return np.floor(np.asarray(values, dtype=float) * scale) / scale


def dyadic_keys(values: np.ndarray, m: int) -> np.ndarray:
    """Integer bin indices floor(2^m v)."""
    return np.floor(np.asarray(values, dtype=float) * 2.0 ** m).astype(np.int64)


def coarse_absolute_sum(phi: np.ndarray) -> np.ndarray:
    """Σ_ij |Phi~_ij| per sample."""
    phi = np.asarray(phi)
    return np.abs(phi).reshape(-1, phi.shape[-2] * phi.shape[-1]).sum(axis=1)


def lambda_gradient_sup(lam: Profile, resolution: int = 257) -> float:
    """Grid estimate of sup |grad lambda| over the unit square."""
    t = np.linspace(0.0, 1.0, resolution)
    gx, gy = np.meshgrid(t, t, indexing='ij')
    values = lam(gx, gy)
    dx, dy = np.gradient(values, t, t)
    return float(np.max(np.hypot(dx, dy)))


def block_noise_variance_ratio(w_samples: np.ndarray, lam_mass: np.ndarray) -> np.ndarray:
    """Empirical Var(W_ij) / (a² Σ lambda²) per block."""
    var = np.var(np.asarray(w_samples), axis=0, ddof=1)
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.where(lam_mass > 0, var / lam_mass, math.nan)

"""
Draws of block features under the pure and the disordered joint laws.

Under the pure law the spins follow the critical model and the white noise
is independent of them. Under the disordered law the white-noise grid is
drawn first, its cell averages give omega, and the spins follow the model
with field lambda^a omega, so the W blocks and the disorder are coupled.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from tqdm import tqdm

from ..config import config
from ..disorder.field import lambda_scale
from ..disorder.profiles import Profile, l2_norm_squared
from ..disorder.white_noise import sample_white_noise_grid
from ..ising.model import ModelParams, theta_a
from ..ising.partition import monte_carlo_partition
from ..ising.sampler import GibbsRun, sample_gibbs
from ..lattice.blocks import BlockGrid
from ..lattice.domain import Lattice
from .. import rng as keyed
from .blocks import BlockObservables, block_observables

logger = logging.getLogger(__name__)

PURE_STREAM = "gibbs-pure"
DISORDERED_STREAM = "gibbs-disordered"


@dataclass(frozen=True, eq=False)
class DisorderedDraws:
    """Spins of the disordered model together with the omega that drove them, one row per record."""
    spins: np.ndarray
    omegas: np.ndarray
    mesh: float

    @property
    def n_samples(self) -> int:
        return int(self.spins.shape[0])


@dataclass(frozen=True, eq=False)
class FeatureSamples:
    """Block observables of both provenances on the same grid."""
    pure: BlockObservables
    disordered: BlockObservables

    def features(self, m: Optional[int] = None):
        return self.pure.features(m), self.disordered.features(m)


def pure_block_samples(run: GibbsRun, lam: Profile, grid: BlockGrid, seed: int = 0) -> BlockObservables:
    """Pure-model spins paired with independent standard Gaussian omega, one omega per record."""
    rng = keyed.generator(seed, "pure-noise", grid.N)
    omega = rng.standard_normal(run.spins.shape)
    return block_observables(run.spins, omega, lam, grid, provenance="pure")


def draw_disordered(
    lattice: Lattice,
    lam: Profile,
    replicas: int,
    sweeps: int,
    seed: int = 0,
    per_replica: int = 1,
    burn_in: Optional[int] = None,
    show_progress: bool = False,
) -> DisorderedDraws:
    """
    Coupled (omega, sigma) draws of the disordered joint law.

    Each replica samples a white-noise grid, reads omega off its cells and
    runs a heat-bath chain with field lambda^a omega, keeping the last
    per_replica records.
    """
    lam_x = lam.at(lattice.interior_sites)
    lam_a = lambda_scale(lattice.mesh) * lam_x
    lam_l2 = l2_norm_squared(lam, lattice.spec)
    spins, omegas = [], []
    for r in tqdm(range(replicas), desc="Disordered replicas", disable=not show_progress):
        noise = sample_white_noise_grid(lattice, seed, replica=r)
        omega = noise.site_values(lattice)
        params = ModelParams(field=lam_a * omega, lam_l2_squared=lam_l2)
        run = sample_gibbs(lattice, params, sweeps, seed, replica=r, burn_in=burn_in,
                           stream=DISORDERED_STREAM)
        keep = min(per_replica, run.n_samples)
        spins.append(run.spins[-keep:])
        omegas.append(np.broadcast_to(omega, (keep, lattice.n_sites)))
    draws = DisorderedDraws(np.concatenate(spins), np.concatenate(omegas), lattice.mesh)
    logger.info(f"Drew {draws.n_samples} disordered configurations at a={lattice.mesh} over {replicas} replicas")
    return draws


def disordered_block_samples(draws: DisorderedDraws, lam: Profile, grid: BlockGrid) -> BlockObservables:
    return block_observables(draws.spins, draws.omegas, lam, grid, provenance="disordered")


def feature_samples(
    run: GibbsRun,
    draws: DisorderedDraws,
    lam: Profile,
    grid: BlockGrid,
    seed: int = 0,
) -> FeatureSamples:
    return FeatureSamples(pure_block_samples(run, lam, grid, seed), disordered_block_samples(draws, lam, grid))


def epsilon_report(
    lattice: Lattice,
    lam: Profile,
    pure_run: GibbsRun,
    replicas: int = 200,
    seed: int = 0,
    percentiles=(1.0, 5.0, 10.0, 50.0),
) -> Dict:
    """
    Quantiles of Z~ under P from Monte Carlo rescaled partition functions.

    Each replica draws omega and estimates theta_a E[exp(Σ lambda^a omega sigma)]
    over the pure samples. The EPSILON_PERCENTILE quantile is the default
    cutoff of the certificate.
    """
    lam_a = lambda_scale(lattice.mesh) * lam.at(lattice.interior_sites)
    theta = theta_a(lattice.mesh, l2_norm_squared(lam, lattice.spec))
    rng = keyed.generator(seed, "epsilon")
    estimates = [
        monte_carlo_partition(pure_run, lam_a * rng.standard_normal(lattice.n_sites), theta)
        for _ in tqdm(range(replicas), desc="Partition replicas", disable=replicas < 50)
    ]
    values = np.array([e.value for e in estimates])
    quantiles = np.percentile(values, list(percentiles))
    report = {f"p{p:g}": float(q) for p, q in zip(percentiles, quantiles)}
    eps = float(np.percentile(values, config.EPSILON_PERCENTILE))
    report.update({
        'epsilon': eps,
        'epsilon_percentile': config.EPSILON_PERCENTILE,
        'mean': float(values.mean()),
        'median_stderr': float(np.median([e.stderr for e in estimates])),
        'replicas': replicas,
        'mesh': lattice.mesh,
    })
    logger.info(f"Z~ quantiles at a={lattice.mesh}: epsilon={eps:.4g}, mean={report['mean']:.4g}")
    return report

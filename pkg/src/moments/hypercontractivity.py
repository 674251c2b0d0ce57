"""
Positive moments of the rescaled partition function against the hypercontractive kernel bound.

With xi_x = lambda^a_x omega_x + h^a_x, mu_x = E[tanh xi_x] and
vartheta_x² = Var[tanh xi_x], the partition function factors as
theta_a Π cosh(xi_x) Psi(eta) where eta_x = (tanh xi_x - mu_x) / vartheta_x and

    Psi(eta) = Σ_I E[sigma^I] Π_{x in I} (vartheta_x eta_x + mu_x) = Σ_J psi(J) Π_{x in J} eta_x.

For p >= 2, E[|Psi|^p]^{2/p} <= Σ_J c_p^{2|J|} psi(J)².
"""
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..chaos.tanh_table import law_quadrature
from ..config import config
from ..disorder.field import build_external_field
from ..disorder.laws import DisorderLaw, draw, third_absolute_moment
from ..disorder.profiles import Profile, constant
from ..errors import TooLarge
from ..ising.exact import exact_correlations, popcounts
from ..ising.model import ModelParams
from ..ising.sampler import sample_gibbs
from ..lattice.domain import Lattice, unit_square_lattice
from .. import rng as keyed
from .ensemble import (MomentReport, bootstrap_interval, build_ensemble, log_mean_exp,
                       replica_log_partitions)

logger = logging.getLogger(__name__)


def tanh_site_moments(
    lattice: Lattice,
    lam: Optional[Profile] = None,
    h: Optional[Profile] = None,
    law: DisorderLaw = DisorderLaw.GAUSSIAN,
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-site mean mu_x and standard deviation vartheta_x of tanh(xi_x), by quadrature."""
    ext = build_external_field(lattice, lam, h)
    nodes, weights = law_quadrature(law)
    values = np.tanh(ext.lam_a[:, None] * nodes[None, :] + ext.h_a[:, None])
    mu = values @ weights
    second = (values ** 2) @ weights
    return mu, np.sqrt(np.maximum(second - mu ** 2, 0.0))


def standardised_kernel(correlations: np.ndarray, mu: np.ndarray, vartheta: np.ndarray) -> np.ndarray:
    """
    psi(J) = vartheta^J Σ_{I ⊇ J} E[sigma^I] mu^{I minus J}, indexed by bit mask.

    One butterfly per site: entries without x collect mu_x times the
    entries with x, entries with x are scaled by vartheta_x.
    """
    psi = np.array(correlations, dtype=float)
    n = len(mu)
    if psi.shape != (1 << n,):
        raise ValueError(f"need {1 << n} subset correlations, got {psi.shape}")
    for x in range(n):
        view = psi.reshape(-1, 2, 1 << x)
        low, high = view[:, 0, :].copy(), view[:, 1, :].copy()
        view[:, 0, :] = low + mu[x] * high
        view[:, 1, :] = vartheta[x] * high
    return psi


def hypercontractivity_constant(p: float, law: DisorderLaw = DisorderLaw.GAUSSIAN, eta_norm_p: float = 1.0) -> float:
    """
    c_p with E[|Psi|^p]^{1/p} <= (Σ c_p^{2|J|} psi(J)²)^{1/2}.

    sqrt(p - 1) for Gaussian and Rademacher drivers; for other laws the
    general constant 2 sqrt(p - 1) max_x ||eta_x||_p.
    """
    if p < 2:
        raise ValueError(f"hypercontractivity needs p >= 2, got {p}")
    law = DisorderLaw(law)
    base = math.sqrt(p - 1.0)
    if law in (DisorderLaw.GAUSSIAN, DisorderLaw.RADEMACHER):
        return base
    return max(base, 2.0 * base * eta_norm_p)


def kernel_bound(psi: np.ndarray, c_p: float) -> float:
    """Σ_J c_p^{2|J|} psi(J)²."""
    n = int(round(math.log2(len(psi))))
    return float(np.sum(c_p ** (2.0 * popcounts(n)) * psi ** 2))


def _eta_norm(lattice: Lattice, lam, h, law: DisorderLaw, p: float) -> float:
    ext = build_external_field(lattice, lam, h)
    nodes, weights = law_quadrature(law)
    values = np.tanh(ext.lam_a[:, None] * nodes[None, :] + ext.h_a[:, None])
    mu = values @ weights
    sd = np.sqrt(np.maximum((values ** 2) @ weights - mu ** 2, 0.0))
    safe = np.where(sd > 0, sd, 1.0)
    eta = (values - mu[:, None]) / safe[:, None]
    return float(np.max((np.abs(eta) ** p) @ weights) ** (1.0 / p))


def positive_moment_bound_check(
    lattice: Lattice,
    lam: Optional[Profile] = None,
    h: Optional[Profile] = None,
    p: float = 4.0,
    replicas: int = 100_000,
    law: DisorderLaw = DisorderLaw.GAUSSIAN,
    seed: int = 0,
    tolerance: float = 0.05,
) -> MomentReport:
    """
    Empirical E[|Psi|^p]^{2/p} against the kernel sum Σ c_p^{2|J|} psi(J)².

    Psi is Z~ with the prefactor theta_a Π cosh(xi) divided out, computed
    exactly per replica.

    Args:
        lattice: Lattice with at most EXPANSION_MAX_SITES sites
        lam: Disorder strength profile
        h: Deterministic field profile
        p: Moment order, at least 2
        replicas: Disorder replicas
        law: Disorder law
        seed: Master seed
        tolerance: Relative slack allowed on the bound side

    Returns:
        MomentReport whose bound is the kernel sum

    Raises:
        TooLarge: beyond EXPANSION_MAX_SITES sites
    """
    if lattice.n_sites > config.EXPANSION_MAX_SITES:
        raise TooLarge(f"the kernel bound over {lattice.n_sites} sites exceeds {config.EXPANSION_MAX_SITES}")
    lam = lam or constant(0.0)
    corr = exact_correlations(lattice, ModelParams())
    mu, vartheta = tanh_site_moments(lattice, lam, h, law)
    psi = standardised_kernel(corr.dense, mu, vartheta)
    eta_norm = 1.0 if DisorderLaw(law) is not DisorderLaw.UNIFORM else _eta_norm(lattice, lam, h, law, p)
    c_p = hypercontractivity_constant(p, law, eta_norm)
    bound = kernel_bound(psi, c_p)

    ensemble = build_ensemble(lattice, lam, h)
    rng = keyed.generator(seed, "positive-moments")
    omega = draw(law, (replicas, lattice.n_sites), rng)
    xi = ensemble.fields(omega)
    log_z = ensemble.log_partition(omega)
    log_psi = log_z - math.log(ensemble.theta) - np.sum(np.log(np.cosh(xi)), axis=1)

    def statistic(v):
        return np.exp(2.0 / p * log_mean_exp(p * v))

    empirical = float(statistic(log_psi))
    lower, upper = bootstrap_interval(log_psi, statistic, seed)
    report = MomentReport(
        p=p, empirical=empirical, lower=lower, upper=upper, bound=bound, replicas=replicas,
        mesh=lattice.mesh,
        extras={
            'c_p': c_p,
            'tolerance': tolerance,
            'psi_empty': float(psi[0]),
            'psi_mean': float(np.mean(np.exp(log_psi))),
            'z_moment': float(np.exp(log_mean_exp(p * log_z) / p)),
            'third_absolute_moment': third_absolute_moment(law),
        },
    )
    logger.info(f"E|Psi|^{p:g} ^(2/p) = {empirical:.5g} [{lower:.5g}, {upper:.5g}] vs kernel bound {bound:.5g}")
    if not report.holds:
        logger.warning(f"Empirical moment exceeds the kernel bound at a={lattice.mesh}")
    return report


def lyapunov_table(log_z: np.ndarray, ps: Sequence[float], seed: int = 0) -> pd.DataFrame:
    """E[Z~^p]^{1/p} per p with bootstrap intervals; nondecreasing in p by Lyapunov's inequality."""
    rows = []
    previous = -math.inf
    for p in sorted(ps):
        def statistic(v, p=p):
            return np.exp(log_mean_exp(p * v) / p)

        value = float(statistic(log_z))
        lower, upper = bootstrap_interval(log_z, statistic, seed)
        rows.append({'p': p, 'norm': value, 'ci_low': lower, 'ci_high': upper,
                     'monotone': bool(value >= previous * (1.0 - 1e-12))})
        previous = value
    return pd.DataFrame(rows)


def second_moment_stability(
    lam: Profile,
    h: Optional[Profile] = None,
    inverse_meshes: Sequence[int] = (8, 16, 32),
    replicas: int = 2000,
    sweeps: int = 4000,
    seed: int = 0,
    max_ratio: float = 1.5,
) -> pd.DataFrame:
    """
    E[Z~²] on the unit square for each mesh 1/n.

    Small lattices are exact; larger ones average over pure heat-bath
    samples. The frame carries a 'stable' column, true when the largest
    and smallest second moments differ by at most max_ratio.
    """
    rows: List[dict] = []
    for n in inverse_meshes:
        lattice = unit_square_lattice(n)
        run = None
        if lattice.n_sites > config.EXPANSION_MAX_SITES:
            run = sample_gibbs(lattice, ModelParams(), sweeps, seed, replica=n)
        ensemble = build_ensemble(lattice, lam, h, run=run)
        log_z = replica_log_partitions(ensemble, replicas, seed=seed, purpose=f"second-moment-{n}")

        def statistic(v):
            return np.exp(log_mean_exp(2.0 * v))

        lower, upper = bootstrap_interval(log_z, statistic, seed)
        rows.append({'mesh': lattice.mesh, 'n_sites': lattice.n_sites, 'second_moment': float(statistic(log_z)),
                     'ci_low': lower, 'ci_high': upper, 'first_moment': float(np.exp(log_mean_exp(log_z))),
                     'exact': ensemble.exact})
    table = pd.DataFrame(rows)
    ratio = float(table['second_moment'].max() / table['second_moment'].min())
    table['stable'] = ratio <= max_ratio
    if ratio > max_ratio:
        logger.warning(f"E[Z~²] varies by a factor {ratio:.3f} across meshes")
    return table

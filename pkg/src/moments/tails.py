"""
Left tail and negative moments of the rescaled partition function, and the Paley-Zygmund lower bound.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from ..disorder.laws import DisorderLaw
from ..disorder.profiles import Profile
from ..errors import InsufficientTail
from ..ising.sampler import GibbsRun
from ..lattice.domain import Lattice
from .ensemble import MomentReport, bootstrap_interval, build_ensemble, log_mean_exp, replica_log_partitions

logger = logging.getLogger(__name__)

GAUSSIAN_TAIL_EXPONENT = 2.0
MIN_TAIL_SAMPLES = 100
MIN_SLOPE = 1.5


@dataclass
class TailCurve:
    """Survival curve of -log Z~ with Clopper-Pearson intervals and the log-log fit."""
    curve: pd.DataFrame
    slope: Optional[float]
    intercept: Optional[float]
    gamma: Optional[float]
    replicas: int
    mesh: float
    degenerate: bool = False
    extras: Dict[str, float] = field(default_factory=dict)

    @property
    def consistent(self) -> Optional[bool]:
        """Fitted slope at least MIN_SLOPE; only asserted for Gaussian disorder."""
        if self.gamma is None or self.slope is None:
            return None
        return bool(self.slope >= MIN_SLOPE)

    def to_dict(self) -> Dict:
        out = {'slope': self.slope, 'intercept': self.intercept, 'gamma': self.gamma,
               'consistent': self.consistent, 'replicas': self.replicas, 'mesh': self.mesh,
               'degenerate': self.degenerate}
        out.update(self.extras)
        return out


def _survival_rows(neg_log_z: np.ndarray, t_grid: Sequence[float]) -> pd.DataFrame:
    n = len(neg_log_z)
    rows = []
    for t in t_grid:
        k = int(np.sum(neg_log_z >= t))
        ci = stats.binomtest(k, n).proportion_ci(confidence_level=0.95) if n else None
        rows.append({'t': float(t), 'count': k, 'probability': k / n,
                     'ci_low': ci.low if ci else math.nan, 'ci_high': ci.high if ci else math.nan})
    return pd.DataFrame(rows)


def default_t_grid(neg_log_z: np.ndarray, points: int = 12) -> np.ndarray:
    """Positive thresholds between the median and the 99.9% quantile of -log Z~."""
    low, high = np.quantile(neg_log_z, [0.5, 0.999])
    low = max(float(low), 1e-3)
    if high <= low:
        return np.array([low])
    return np.linspace(low, float(high), points)


def fit_tail_exponent(curve: pd.DataFrame, min_count: int = 10):
    """Least-squares slope and intercept of log(-log P) against log t over informative points."""
    usable = curve[(curve['t'] > 0) & (curve['count'] >= min_count) & (curve['probability'] < 1.0)]
    if len(usable) < 2:
        return None, None
    fit = stats.linregress(np.log(usable['t']), np.log(-np.log(usable['probability'])))
    return float(fit.slope), float(fit.intercept)


def negative_tail_check(
    lattice: Lattice,
    lam: Profile,
    h: Optional[Profile] = None,
    replicas: int = 100_000,
    t_grid: Optional[Sequence[float]] = None,
    law: DisorderLaw = DisorderLaw.GAUSSIAN,
    seed: int = 0,
    run: Optional[GibbsRun] = None,
) -> TailCurve:
    """
    Empirical P(log Z~ <= -t) over t with a fit of log(-log P) against log t.

    The fitted slope estimates the tail exponent gamma; for Gaussian disorder
    gamma = 2 and the curve is consistent when the slope is at least 1.5.
    Other laws report the fit only.

    Args:
        lattice: Lattice (exact up to EXPANSION_MAX_SITES sites, else run is needed)
        lam: Disorder strength profile
        h: Deterministic field profile
        replicas: Disorder replicas
        t_grid: Thresholds (default between the median and 99.9% quantile)
        law: Disorder law
        seed: Master seed
        run: Pure samples for larger lattices

    Returns:
        TailCurve

    Raises:
        InsufficientTail: if fewer than 100 samples lie beyond the first threshold
    """
    ensemble = build_ensemble(lattice, lam, h, run=run)
    log_z = replica_log_partitions(ensemble, replicas, law, seed, purpose="negative-tail")
    neg = -log_z
    extras = {**jensen_check(log_z), 'min_log_z': float(log_z.min()), 'finite': bool(np.all(np.isfinite(log_z)))}
    if np.allclose(neg, neg[0], atol=1e-12):
        curve = _survival_rows(neg, [0.0] if t_grid is None else t_grid)
        logger.info("Partition function is deterministic; tail curve degenerate")
        return TailCurve(curve, None, None, None, replicas, lattice.mesh, degenerate=True, extras=extras)

    grid = default_t_grid(neg) if t_grid is None else np.asarray(t_grid, dtype=float)
    beyond = int(np.sum(neg >= grid[0]))
    if beyond < MIN_TAIL_SAMPLES:
        raise InsufficientTail(f"only {beyond} samples beyond t={grid[0]:.4g}, need {MIN_TAIL_SAMPLES}")
    curve = _survival_rows(neg, grid)
    slope, intercept = fit_tail_exponent(curve)
    gamma = GAUSSIAN_TAIL_EXPONENT if DisorderLaw(law) is DisorderLaw.GAUSSIAN else None
    report = TailCurve(curve, slope, intercept, gamma, replicas, lattice.mesh, extras=extras)
    if slope is None:
        logger.warning("Too few informative thresholds to fit the tail exponent")
    else:
        logger.info(f"Left-tail log-log slope {slope:.3f} over t in [{grid[0]:.3g}, {grid[-1]:.3g}]")
    return report


def jensen_check(log_z: np.ndarray) -> Dict[str, float]:
    """E[log Z~] against log E[Z~]; Jensen's inequality says the first is not larger."""
    mean_log = float(np.mean(log_z))
    log_mean = float(log_mean_exp(log_z))
    return {'mean_log_z': mean_log, 'log_mean_z': log_mean, 'jensen_holds': bool(mean_log <= log_mean + 1e-12)}


def inverse_moment(
    log_z: np.ndarray,
    checkpoints: Sequence[int] = (10_000, 100_000),
    seed: int = 0,
    tolerance: float = 0.1,
    mesh: float = math.nan,
) -> MomentReport:
    """
    E[Z~^{-1}] with a bootstrap interval and its stability across sample sizes.

    extras holds the estimate at each checkpoint (using the first n replicas)
    and whether they agree within the relative tolerance.
    """
    log_z = np.asarray(log_z, dtype=float)

    def statistic(v):
        return np.exp(log_mean_exp(-v))

    value = float(statistic(log_z))
    lower, upper = bootstrap_interval(log_z, statistic, seed)
    partial = {f"inverse_at_{n}": float(statistic(log_z[:n])) for n in checkpoints if n <= len(log_z)}
    estimates = list(partial.values())
    stable = bool(max(estimates) <= (1.0 + tolerance) * min(estimates)) if len(estimates) >= 2 else None
    extras = {**partial, 'stable': stable, 'tolerance': tolerance}
    return MomentReport(p=-1.0, empirical=value, lower=lower, upper=upper, bound=None,
                        replicas=len(log_z), mesh=mesh, extras=extras)


def paley_zygmund_check(
    lattice: Lattice,
    lam: Profile,
    h: Optional[Profile] = None,
    replicas: int = 100_000,
    law: DisorderLaw = DisorderLaw.GAUSSIAN,
    seed: int = 0,
    run: Optional[GibbsRun] = None,
    scale: float = 1.0,
) -> Dict[str, float]:
    """
    P(Z~ >= C1/2) against C1² / (5 C2) with C1 = E[Z~], C2 = E[Z~²].

    scale multiplies every Z~ by a constant; the event and both sides are
    unchanged by it.

    Returns:
        probability with its Clopper-Pearson interval, the lower bound, and holds
        (the upper end of the interval is at least the bound)
    """
    ensemble = build_ensemble(lattice, lam, h, run=run)
    log_z = replica_log_partitions(ensemble, replicas, law, seed, purpose="paley-zygmund") + math.log(scale)
    log_c1 = float(log_mean_exp(log_z))
    log_c2 = float(log_mean_exp(2.0 * log_z))
    hits = int(np.sum(log_z >= log_c1 - math.log(2.0)))
    ci = stats.binomtest(hits, replicas).proportion_ci(confidence_level=0.95)
    bound = math.exp(2.0 * log_c1 - log_c2) / 5.0
    probability = hits / replicas
    result = {
        'c1': math.exp(log_c1), 'c2': math.exp(log_c2), 'probability': probability,
        'ci_low': float(ci.low), 'ci_high': float(ci.high), 'bound': bound,
        'holds': bool(ci.high >= bound), 'replicas': replicas, 'mesh': lattice.mesh, 'scale': scale,
    }
    logger.info(f"Paley-Zygmund: P(Z~ >= C1/2) = {probability:.4f} vs C1²/(5 C2) = {bound:.4f}")
    return result

"""
Rescaled partition functions over many disorder replicas, and bootstrap moment reports.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from ..config import config
from ..disorder.field import build_external_field
from ..disorder.laws import DisorderLaw, draw
from ..disorder.profiles import Profile, constant, l2_norm_squared
from ..ising.exact import spins_from_states, state_probabilities
from ..ising.model import ModelParams, theta_a
from ..ising.sampler import GibbsRun
from ..lattice.domain import Lattice
from ..errors import TooLarge
from .. import rng as keyed

logger = logging.getLogger(__name__)

_BATCH_ENTRIES = 1 << 22


@dataclass(frozen=True, eq=False)
class SpinEnsemble:
    """
    Weighted pure-model configurations standing in for the Gibbs measure.

    Exact ensembles hold all 2^n states with their Gibbs probabilities;
    Monte Carlo ensembles hold the records of a pure chain with equal
    weights. Disorder enters only through the site field
    xi = lambda^a omega + h^a, so Z~(omega) = theta_a Σ_s w_s exp(xi · s).
    """
    spins: np.ndarray
    log_weights: np.ndarray
    lam_a: np.ndarray
    h_a: np.ndarray
    theta: float
    mesh: float
    exact: bool
    beta: float = 0.0

    @property
    def n_sites(self) -> int:
        return int(self.spins.shape[1])

    def fields(self, omega: np.ndarray) -> np.ndarray:
        return self.lam_a * np.asarray(omega, dtype=float) + self.h_a

    def _batches(self, omega: np.ndarray):
        omega = np.atleast_2d(omega)
        step = max(1, _BATCH_ENTRIES // max(len(self.spins), 1))
        for start in range(0, len(omega), step):
            yield self.fields(omega[start:start + step])

    def log_partition(self, omega: np.ndarray) -> np.ndarray:
        """log Z~ for every row of omega."""
        out = [logsumexp(xi @ self.spins.T + self.log_weights, axis=1) for xi in self._batches(omega)]
        log_theta = math.log(self.theta) if self.theta > 0 else -math.inf
        return np.concatenate(out) + log_theta

    def mean_spins(self, omega: np.ndarray) -> np.ndarray:
        """E^omega[sigma_x] under the disordered measure, one row per replica."""
        out = []
        for xi in self._batches(omega):
            log_w = xi @ self.spins.T + self.log_weights
            w = np.exp(log_w - logsumexp(log_w, axis=1, keepdims=True))
            out.append(w @ self.spins)
        return np.concatenate(out)


def build_ensemble(
    lattice: Lattice,
    lam: Optional[Profile] = None,
    h: Optional[Profile] = None,
    run: Optional[GibbsRun] = None,
    params: Optional[ModelParams] = None,
) -> SpinEnsemble:
    """
    Exact ensemble up to EXPANSION_MAX_SITES sites, otherwise the records of a pure run.

    Raises:
        TooLarge: beyond EXPANSION_MAX_SITES sites without a run
    """
    lam = lam or constant(0.0)
    params = params or ModelParams()
    ext = build_external_field(lattice, lam, h)
    theta = theta_a(lattice.mesh, l2_norm_squared(lam, lattice.spec))
    if lattice.n_sites <= config.EXPANSION_MAX_SITES:
        probs = state_probabilities(lattice, params.with_field(None))
        states = np.arange(1 << lattice.n_sites, dtype=np.int64)
        with np.errstate(divide='ignore'):
            log_w = np.log(probs)
        return SpinEnsemble(spins_from_states(states, lattice.n_sites).astype(np.float64), log_w,
                            ext.lam_a, ext.h_a, theta, lattice.mesh, True, params.beta)
    if run is None:
        raise TooLarge(f"{lattice.n_sites} sites need Monte Carlo samples of the pure model")
    k = run.n_samples
    return SpinEnsemble(run.spins.astype(np.float64), np.full(k, -math.log(k)),
                        ext.lam_a, ext.h_a, theta, lattice.mesh, False, run.params.beta)


def replica_log_partitions(
    ensemble: SpinEnsemble,
    replicas: int,
    law: DisorderLaw = DisorderLaw.GAUSSIAN,
    seed: int = 0,
    purpose: str = "moments",
) -> np.ndarray:
    """log Z~ over independent disorder replicas drawn from a keyed stream."""
    rng = keyed.generator(seed, purpose)
    omega = draw(law, (replicas, ensemble.n_sites), rng)
    values = ensemble.log_partition(omega)
    logger.info(f"Computed {replicas} {'exact' if ensemble.exact else 'Monte Carlo'} partition functions "
                f"on {ensemble.n_sites} sites")
    return values


def bootstrap_interval(
    values: np.ndarray,
    statistic: Callable[[np.ndarray], np.ndarray],
    seed: int = 0,
    resamples: Optional[int] = None,
) -> Tuple[float, float]:
    """Percentile bootstrap interval of a statistic vectorized over its last axis."""
    values = np.asarray(values, dtype=float)
    resamples = config.BOOTSTRAP_RESAMPLES if resamples is None else resamples
    if resamples <= 0 or len(values) < 2 or np.all(values == values[0]):
        point = float(statistic(values))
        return point, point
    result = stats.bootstrap(
        (values,), lambda x, axis: statistic(np.moveaxis(x, axis, -1)),
        n_resamples=resamples, confidence_level=config.CONFIDENCE_LEVEL, method='percentile',
        batch=max(1, _BATCH_ENTRIES // len(values)), random_state=keyed.generator(seed, "moment-bootstrap"),
    )
    return float(result.confidence_interval.low), float(result.confidence_interval.high)


def log_mean_exp(log_values: np.ndarray) -> np.ndarray:
    """log of the mean of exp over the last axis."""
    return logsumexp(log_values, axis=-1) - math.log(log_values.shape[-1])


@dataclass
class MomentReport:
    """Empirical moment with a bootstrap interval and, where defined, its analytic bound."""
    p: float
    empirical: float
    lower: float
    upper: float
    bound: Optional[float]
    replicas: int
    mesh: float
    extras: Dict[str, float] = field(default_factory=dict)

    @property
    def holds(self) -> Optional[bool]:
        if self.bound is None:
            return None
        tolerance = self.extras.get('tolerance', 0.0)
        return bool(self.empirical <= self.bound * (1.0 + tolerance))

    def to_dict(self) -> Dict:
        out = {'p': self.p, 'empirical': self.empirical, 'ci_low': self.lower, 'ci_high': self.upper,
               'bound': self.bound, 'holds': self.holds, 'replicas': self.replicas, 'mesh': self.mesh}
        out.update(self.extras)
        return out

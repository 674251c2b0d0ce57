"""
Conditional Gaussian laws, the conditional Radon-Nikodym factor and tilted disorder.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Union

import numpy as np

from ..disorder.field import lambda_scale
from ..disorder.laws import DisorderLaw
from ..errors import NonGaussianLaw
from .. import rng as keyed
from .blocks import BlockObservables

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ConditionalGaussian:
    """
    Law of independent centred Gaussians X_k with variances s_k given Σ_k X_k = M.

    E[X_j | ·] = M s_j / Σ s,
    Cov(X_j, X_l | ·) = s_j (Σ s - s_j) / Σ s if j = l, else -s_j s_l / Σ s.
    """
    variances: np.ndarray
    total: float

    @property
    def means(self) -> np.ndarray:
        return self.total * self.variances / self.variances.sum()

    @property
    def covariance(self) -> np.ndarray:
        s = self.variances
        total = s.sum()
        return np.diag(s) - np.outer(s, s) / total

    def second_moments(self) -> np.ndarray:
        """E[X_j X_l | ·]; off the diagonal s_j s_l (M² - Σ s) / (Σ s)²."""
        return self.covariance + np.outer(self.means, self.means)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """
        Draws of shape (size, L) whose rows sum to M.

        Z - (s / Σ s) Σ Z with Z ~ N(0, diag s) has exactly the conditional covariance.
        """
        s = self.variances
        z = rng.standard_normal((size, len(s))) * np.sqrt(s)
        return self.means + z - np.outer(z.sum(axis=1), s / s.sum())


def conditional_gaussian_law(variances, total: float) -> ConditionalGaussian:
    """
    Conditional law of independent centred Gaussians given their sum.

    Args:
        variances: Positive variances s_k
        total: Value M of the sum

    Returns:
        ConditionalGaussian
    """
    variances = np.asarray(variances, dtype=float)
    if np.any(variances <= 0):
        raise ValueError("variances must be positive")
    return ConditionalGaussian(variances, float(total))


def conditional_rn_factor(blocks: BlockObservables) -> Union[float, np.ndarray]:
    """
    Π_ij exp(Phi~_ij W_ij / Lambda_ij - ½ Phi~_ij² / Lambda_ij).

    Blocks with Lambda = 0 carry Phi~ = 0 and contribute 1.

    Raises:
        ZeroBlockMass: if a block contains no site
    """
    blocks.check_nonempty()
    lam = blocks.lam_mass
    positive = lam > 0
    safe = np.where(positive, lam, 1.0)
    exponent = np.where(positive, (blocks.phi * blocks.w - 0.5 * blocks.phi ** 2) / safe, 0.0)
    total = exponent.reshape(-1, blocks.N * blocks.N).sum(axis=1)
    factor = np.exp(total)
    return float(factor[0]) if blocks.phi.ndim == 2 else factor


def conditional_rn_monte_carlo(
    spins: np.ndarray,
    lam_x: np.ndarray,
    mesh: float,
    w_value: float,
    draws: int,
    seed: int = 0,
) -> Dict[str, float]:
    """
    Brute-force E[exp(Σ sigma omega lambda^a - ½ Σ (lambda^a)²) | a Σ lambda omega = W] on one block.

    Draws X_x = a lambda(x) omega_x from the conditional Gaussian law.

    Returns:
        Mean and standard error of the conditional average
    """
    lam_x = np.asarray(lam_x, dtype=float)
    law = conditional_gaussian_law((mesh * lam_x) ** 2, w_value)
    rng = keyed.generator(seed, "conditional-rn")
    x = law.sample(rng, draws)
    omega = x / (mesh * lam_x)
    lam_a = lambda_scale(mesh) * lam_x
    values = np.exp(omega @ (np.asarray(spins, dtype=float) * lam_a) - 0.5 * np.sum(lam_a ** 2))
    return {'mean': float(values.mean()), 'stderr': float(values.std(ddof=1) / math.sqrt(draws))}


def tilted_disorder_sampler(
    spins: np.ndarray,
    lam_a: np.ndarray,
    seed: Union[int, np.random.Generator],
    law: DisorderLaw = DisorderLaw.GAUSSIAN,
    replicas: Optional[int] = None,
    replica: int = 0,
) -> np.ndarray:
    """
    Disorder under the tilted measure: omega_x = lambda^a_x sigma_x + N(0, 1).

    Args:
        spins: Fixed spins sigma, shape (n_sites,) or (replicas, n_sites)
        lam_a: Scaled strengths lambda^a_x
        seed: Master seed or generator
        law: Must be Gaussian
        replicas: Number of independent draws (default one)
        replica: Replica index of the keyed stream

    Raises:
        NonGaussianLaw: for non-Gaussian disorder
    """
    if DisorderLaw(law) is not DisorderLaw.GAUSSIAN:
        raise NonGaussianLaw(f"the tilted law is only Gaussian for Gaussian disorder, got {law}")
    rng = seed if isinstance(seed, np.random.Generator) else keyed.generator(int(seed), "tilted-disorder", replica)
    kappa = np.asarray(lam_a, dtype=float) * np.asarray(spins, dtype=float)
    shape = kappa.shape if replicas is None else (replicas,) + kappa.shape[-1:]
    return kappa + rng.standard_normal(shape)


def radon_nikodym_check(
    spins: np.ndarray,
    lam_a: np.ndarray,
    theta: float,
    g: Callable[[np.ndarray], np.ndarray],
    draws: int,
    seed: int = 0,
) -> Dict[str, float]:
    """
    Compare E[g(omega) theta e^{<Phi~, W>}] / E[theta e^{<Phi~, W>}] under P with E~[g(omega)].

    Returns:
        Importance-sampling estimate, tilted estimate and their standard errors
    """
    rng = keyed.generator(seed, "radon-nikodym")
    kappa = np.asarray(lam_a, dtype=float) * np.asarray(spins, dtype=float)
    omega = rng.standard_normal((draws, len(kappa)))
    weights = theta * np.exp(omega @ kappa)
    gv = g(omega)
    ratio = float(np.sum(weights * gv) / np.sum(weights))
    # delta method for a ratio of means
    normalized = weights / weights.mean()
    ratio_stderr = float(np.std(normalized * (gv - ratio), ddof=1) / math.sqrt(draws))
    tilted = g(tilted_disorder_sampler(spins, lam_a, keyed.generator(seed, "radon-nikodym-tilted"), replicas=draws))
    return {
        'importance': ratio, 'importance_stderr': ratio_stderr,
        'tilted': float(tilted.mean()), 'tilted_stderr': float(tilted.std(ddof=1) / math.sqrt(draws)),
    }

"""
Rescaled partition functions, characteristic functions and backend selection.
"""
import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Union

import numpy as np
from scipy.special import logsumexp

from ..config import config
from ..errors import TooLarge, ZeroDenominator
from ..lattice.domain import Lattice
from ..disorder.field import MAGNETISATION_EXPONENT, lambda_scale
from ..disorder.profiles import Profile, cell_integrals, l2_norm_squared
from .exact import exact_partition
from .model import ModelParams, theta_a
from .sampler import GibbsRun
from .transfer import transfer_matrix_partition

logger = logging.getLogger(__name__)

BACKENDS = ("auto", "enumeration", "transfer", "monte_carlo")

# Enumeration is faster than the transfer matrix up to this size
_SMALL_LATTICE = 16


def choose_backend(lattice: Lattice, exact_only: bool = False) -> str:
    """
    Cheapest backend that can evaluate Z on this lattice.

    Args:
        lattice: Lattice
        exact_only: Refuse Monte Carlo

    Returns:
        "enumeration", "transfer" or "monte_carlo"

    Raises:
        TooLarge: if exact_only and no exact backend applies
    """
    n = lattice.n_sites
    if n <= _SMALL_LATTICE:
        return "enumeration"
    shape = lattice.rectangle_shape()
    if shape is not None and min(shape) <= config.TRANSFER_MAX_WIDTH:
        return "transfer"
    if n <= config.ENUMERATION_CAP:
        return "enumeration"
    if exact_only:
        raise TooLarge(f"no exact backend for {n} sites (shape {shape})")
    return "monte_carlo"


@dataclass
class PartitionEstimate:
    """Monte Carlo estimate of a (rescaled) partition function."""
    value: float
    stderr: float
    log_value: float
    n_samples: int
    n_effective: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def monte_carlo_partition(run: GibbsRun, field: np.ndarray, theta: float = 1.0) -> PartitionEstimate:
    """
    theta * E[exp(Σ xi sigma)] from pure-model samples.

    Args:
        run: Samples of the field-free model
        field: Real site field xi
        theta: Prefactor (theta_a for the rescaled partition function)

    Returns:
        PartitionEstimate with tau-corrected standard error
    """
    if np.iscomplexobj(field) and np.any(np.imag(field) != 0):
        raise ValueError("Monte Carlo estimation needs a real field")
    exponents = run.spins.astype(np.float64) @ np.real(np.asarray(field, dtype=float))
    k = len(exponents)
    log_mean = float(logsumexp(exponents) - math.log(k))
    peak = float(exponents.max())
    scaled = np.exp(exponents - peak)
    std = float(np.std(scaled, ddof=1)) if k > 1 else float('inf')
    log_theta = math.log(theta) if theta > 0 else -math.inf
    value = math.exp(log_mean + log_theta)
    stderr = std * math.exp(peak + log_theta) / math.sqrt(run.n_effective)
    return PartitionEstimate(value, stderr, log_mean + log_theta, k, run.n_effective)


def partition_function(
    lattice: Lattice,
    params: ModelParams,
    backend: str = "auto",
    run: Optional[GibbsRun] = None,
) -> complex:
    """
    Z = E[exp(Σ xi sigma)] with the requested backend.

    Args:
        lattice: Lattice
        params: Model parameters
        backend: One of BACKENDS
        run: Pure-model samples, required by the Monte Carlo backend

    Returns:
        Z (complex)
    """
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "auto":
        backend = choose_backend(lattice, exact_only=run is None or params.is_complex())
    logger.debug(f"Partition function on {lattice.n_sites} sites via {backend}")
    if backend == "enumeration":
        return exact_partition(lattice, params)
    if backend == "transfer":
        return transfer_matrix_partition(lattice, params)
    if run is None:
        raise ValueError("the Monte Carlo backend needs a GibbsRun of the pure model")
    if params.is_complex():
        raise ValueError("complex fields are restricted to exact backends")
    return complex(monte_carlo_partition(run, params.site_field(lattice)).value)


def _as_output(value: complex) -> Union[float, complex]:
    return float(value.real) if value.imag == 0 else value


def rescaled_partition(
    lattice: Lattice,
    params: ModelParams,
    backend: str = "auto",
    run: Optional[GibbsRun] = None,
) -> Union[float, complex]:
    """
    Z~ = theta_a Z with theta_a = exp(-½ a^{-1/4} ||lambda||²_{L²}).

    Args:
        lattice: Lattice
        params: Model parameters carrying lam_l2_squared
        backend: One of BACKENDS
        run: Pure-model samples for the Monte Carlo backend

    Returns:
        Real value for real fields, complex when an imaginary part is present
    """
    theta = theta_a(lattice.mesh, params.lam_l2_squared)
    return _as_output(theta * partition_function(lattice, params, backend, run))


def _phi_tilde(lattice: Lattice, phi: Union[Profile, np.ndarray]) -> np.ndarray:
    if isinstance(phi, Profile):
        return lattice.mesh ** (-MAGNETISATION_EXPONENT) * cell_integrals(phi, lattice)
    return np.asarray(phi, dtype=float)


def characteristic_function(
    lattice: Lattice,
    params: ModelParams,
    phi: Union[Profile, np.ndarray],
    backend: str = "auto",
) -> complex:
    """
    Z~(xi + i phi~) / Z~(xi), the characteristic function of the magnetisation field.

    Args:
        lattice: Lattice
        params: Model parameters with a real field
        phi: Test function, or the per-site phi~^a values directly
        backend: "auto", "enumeration" or "transfer"

    Returns:
        Complex value of modulus at most 1

    Raises:
        ZeroDenominator: if Z~(xi) vanishes
        TooLarge: if no exact backend applies
    """
    if backend == "monte_carlo":
        raise ValueError("characteristic functions need an exact backend")
    if backend == "auto":
        backend = choose_backend(lattice, exact_only=True)
    phi_tilde = _phi_tilde(lattice, phi)
    xi = np.real(params.site_field(lattice)).astype(float)
    denominator = partition_function(lattice, params.with_field(xi), backend)
    if denominator == 0 or not np.isfinite(abs(denominator)):
        raise ZeroDenominator(f"Z~ vanishes or overflows on {lattice.n_sites} sites")
    numerator = partition_function(lattice, params.with_field(xi + 1j * phi_tilde), backend)
    return complex(numerator / denominator)


def prefactor_check(
    lattice: Lattice,
    lam: Profile,
    omega: Optional[np.ndarray] = None,
    phi: Optional[Profile] = None,
) -> Dict[str, float]:
    """
    Diagnostics of the counterterm theta_a.

    Reports theta_a, theta_a Π cosh(xi + i phi~) for the given disorder, and
    the exact Gaussian value theta_a E_omega[exp(Σ lambda^a omega sigma)] =
    exp(½ Σ (lambda^a)² - ½ a^{-1/4} ||lambda||²), which is the same for every
    sigma and tends to 1 as a -> 0.
    """
    a = lattice.mesh
    lam_l2 = l2_norm_squared(lam, lattice.spec)
    theta = theta_a(a, lam_l2)
    lam_a = lambda_scale(a) * lam.at(lattice.interior_sites)
    gaussian_log = 0.5 * float(np.sum(lam_a ** 2)) - 0.5 * a ** (-0.25) * lam_l2
    report = {
        'mesh': a,
        'lam_l2_squared': lam_l2,
        'theta_a': theta,
        'gaussian_mgf_product': math.exp(gaussian_log),
    }
    if omega is not None:
        xi = lam_a * np.asarray(omega, dtype=float)
        if phi is not None:
            xi = xi + 1j * _phi_tilde(lattice, phi)
        log_cosh = np.sum(np.log(np.cosh(xi.astype(complex))))
        product = theta * np.exp(log_cosh)
        report['cosh_product_real'] = float(np.real(product))
        report['cosh_product_imag'] = float(np.imag(product))
    return report

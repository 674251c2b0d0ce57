"""
High-temperature expansion and the truncate / linearize / gaussianize ladder.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from ..config import config
from ..errors import DegreeExceeded, TooLarge
from ..disorder.field import ExternalField, lambda_scale, h_scale
from ..disorder.laws import DisorderLaw, draw
from ..disorder.profiles import Profile, constant
from ..ising.exact import CorrelationTable, exact_correlations, subset_products
from ..ising.model import ModelParams, theta_a
from ..lattice.domain import Lattice
from .. import rng as keyed
from .kernel import ChaosKernel, ChaosValue, correlation_kernel

logger = logging.getLogger(__name__)

MODES = ("truncate", "linearize", "gaussianize")


def evaluate_high_temperature_expansion(
    lattice: Lattice,
    params: ModelParams,
    corr: Optional[CorrelationTable] = None,
) -> complex:
    """
    theta_a Π cosh(xi_x) Σ_{I ⊆ Omega_a} E[sigma^I] Π_{x∈I} tanh(xi_x).

    Equals the rescaled partition function for any complex field. The
    subset sum is the inner product of the correlation vector with the
    subset products of tanh(xi), both indexed by bit mask.

    Args:
        lattice: Lattice with at most EXPANSION_MAX_SITES sites
        params: Model parameters; the field enters only through tanh and cosh
        corr: Pure-model correlations for all subsets (computed if omitted)

    Returns:
        Complex value of the expansion

    Raises:
        TooLarge: beyond EXPANSION_MAX_SITES sites
    """
    n = lattice.n_sites
    if n > config.EXPANSION_MAX_SITES:
        raise TooLarge(f"full expansion over {n} sites exceeds {config.EXPANSION_MAX_SITES}")
    if corr is None:
        corr = exact_correlations(lattice, params.with_field(None))
    if corr.dense is None or corr.k_max < n:
        raise ValueError("the full expansion needs correlations for every subset")
    xi = np.asarray(params.site_field(lattice), dtype=complex)
    tanh_products = subset_products(np.tanh(xi))
    subset_sum = np.dot(corr.dense, tanh_products)
    prefactor = theta_a(lattice.mesh, params.lam_l2_squared) * np.prod(np.cosh(xi))
    return complex(prefactor * subset_sum)


@dataclass
class ChaosEvaluator:
    """
    Evaluates one rung of the approximation ladder at disorder or white-noise draws.

    truncate: Psi^{<=l} at u = tanh(xi + i phi~) / lambda^a (the full kernel
    when l is its degree). linearize: Psi^{<=l} at u = omega + (h^a + i phi~) / lambda^a.
    gaussianize: the same with the white-noise averages theta in place of omega.
    """
    kernel: ChaosKernel
    mode: str
    field: ExternalField

    def inputs(self, noise: np.ndarray) -> np.ndarray:
        noise = np.asarray(noise, dtype=float)
        shift = self.field.lindeberg_shift()
        if self.mode == "truncate":
            phi = self.field.phi_tilde if self.field.phi_tilde is not None else 0.0
            xi = self.field.lam_a * noise + self.field.h_a + 1j * phi
            return np.tanh(xi) / self.field.lam_a
        return noise + shift

    def __call__(self, noise: np.ndarray) -> ChaosValue:
        """
        Args:
            noise: omega (truncate, linearize) or theta (gaussianize), (n,) or (replicas, n)
        """
        return ChaosValue(self.kernel.evaluate(self.inputs(noise)), label=f"{self.mode}<={self.kernel.degree}")


def transform_chaos(kernel: ChaosKernel, mode: str, field: ExternalField, l: Optional[int] = None) -> ChaosEvaluator:
    """
    Build an evaluator for a rung of the ladder.

    Args:
        kernel: Kernel psi^a built from the correlations
        mode: "truncate", "linearize" or "gaussianize"
        field: Scaled fields (lambda^a > 0 required), with phi~ attached for the imaginary part
        l: Truncation degree (default the kernel degree)

    Returns:
        ChaosEvaluator

    Raises:
        DegreeExceeded: if l exceeds the kernel degree
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}, expected one of {MODES}")
    l = kernel.degree if l is None else int(l)
    if l > kernel.degree:
        raise DegreeExceeded(f"degree {l} exceeds the kernel's {kernel.degree}")
    field.lindeberg_shift()
    return ChaosEvaluator(kernel.restrict(l) if l < kernel.degree else kernel, mode, field)


def truncation_error(
    kernel: ChaosKernel,
    field: ExternalField,
    degrees: Sequence[int],
    law: DisorderLaw = DisorderLaw.GAUSSIAN,
    replicas: int = 10_000,
    seed: int = 0,
) -> List[Dict[str, float]]:
    """
    E|Upsilon - Upsilon^{<=l}|² by Monte Carlo next to the kernel tail mass.

    Args:
        kernel: Full-degree kernel
        field: Scaled fields
        degrees: Truncation degrees to compare
        law: Disorder law of omega
        replicas: Monte Carlo replicas
        seed: Master seed

    Returns:
        One row per degree: degree, mc_error, mc_stderr, tail_mass
    """
    omega = draw(law, (replicas, kernel.n_sites), keyed.generator(seed, "truncation-error"))
    full = transform_chaos(kernel, "truncate", field)(omega).value
    rows = []
    for l in degrees:
        truncated = transform_chaos(kernel, "truncate", field, l)(omega).value
        sq = np.abs(full - truncated) ** 2
        rows.append({
            'degree': int(l),
            'mc_error': float(sq.mean()),
            'mc_stderr': float(sq.std(ddof=1) / np.sqrt(replicas)),
            'tail_mass': kernel.tail_mass(l),
        })
    return rows


@dataclass
class WienerChaosValue:
    """Truncated Wiener chaos partition function with its analytic variance at h = 0."""
    values: np.ndarray
    degree: int
    mesh: float
    variance_h0: float

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def empirical_variance(self) -> float:
        return float(np.var(self.values, ddof=1)) if len(self.values) > 1 else 0.0


def wiener_chaos_partition(
    corr: CorrelationTable,
    lattice: Lattice,
    noise: np.ndarray,
    lam: Optional[Profile] = None,
    h: Optional[Profile] = None,
    l: Optional[int] = None,
) -> WienerChaosValue:
    """
    Σ_{|I|<=l} E^{a0}[sigma^I] Π_{x∈I} (a0^{7/8} lambda(x) theta_x + a0^{15/8} h(x)).

    The continuum kernel is represented by the correlations at the reference
    mesh a0, which carries the a0^{-n/8} scaling of the n-point functions.

    Args:
        corr: Correlations at mesh a0 up to degree l
        lattice: Lattice at mesh a0
        noise: White-noise cell averages theta, (n_sites,) or (replicas, n_sites)
        lam: Disorder strength profile (default 0)
        h: Deterministic field profile (default 0)
        l: Truncation degree (default the table's k_max)

    Returns:
        WienerChaosValue

    Raises:
        DegreeExceeded: if l exceeds the table's k_max
    """
    lam = lam or constant(0.0)
    h = h or constant(0.0)
    l = corr.k_max if l is None else int(l)
    if l > corr.k_max:
        raise DegreeExceeded(f"degree {l} exceeds correlations up to {corr.k_max}")
    a0 = lattice.mesh
    pts = lattice.interior_sites
    lam_a = lambda_scale(a0) * lam.at(pts)
    h_a = h_scale(a0) * h.at(pts)
    kernel = correlation_kernel(corr, l)
    noise = np.atleast_2d(np.asarray(noise, dtype=float))
    values = np.asarray(kernel.evaluate(lam_a * noise + h_a), dtype=float)
    variance = kernel.scaled(lam_a).variance()
    logger.info(f"Wiener chaos of degree {l} at a0={a0:g}: mean {values.mean():.6g}, analytic variance {variance:.6g}")
    return WienerChaosValue(values=values, degree=l, mesh=a0, variance_h0=variance)


def wiener_chaos_variance_table(
    corrs: Dict[float, CorrelationTable],
    lattices: Dict[float, Lattice],
    lam: Profile,
    l: int,
    replicas: int,
    seed: int,
) -> List[Dict[str, float]]:
    """Empirical and analytic variance of the truncated Wiener chaos per reference mesh."""
    rows = []
    for a0 in tqdm(sorted(corrs), desc="Wiener chaos meshes"):
        lattice = lattices[a0]
        noise = keyed.generator(seed, "white-noise", 0, lattice.n_sites).standard_normal((replicas, lattice.n_sites))
        value = wiener_chaos_partition(corrs[a0], lattice, noise, lam=lam, l=l)
        rows.append({
            'mesh': a0,
            'degree': l,
            'mean': value.mean,
            'empirical_variance': value.empirical_variance,
            'analytic_variance': value.variance_h0,
        })
    return rows

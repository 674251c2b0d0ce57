"""
Per-site external fields xi^a_x = lambda^a_x omega_x + h^a_x with the critical scalings.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import NonPositiveLambda
from ..lattice.domain import Lattice
from .profiles import Profile, cell_integrals, constant

logger = logging.getLogger(__name__)

LAMBDA_EXPONENT = 7.0 / 8.0
H_EXPONENT = 15.0 / 8.0
MAGNETISATION_EXPONENT = 1.0 / 8.0


def lambda_scale(a: float) -> float:
    """a^{7/8}."""
    return a ** LAMBDA_EXPONENT


def h_scale(a: float) -> float:
    """a^{15/8}."""
    return a ** H_EXPONENT


@dataclass(frozen=True, eq=False)
class ExternalField:
    """
    Site fields of the disordered model at mesh a.

    Holds lambda(x), lambda^a_x = a^{7/8} lambda(x), h^a_x = a^{15/8} h(x),
    omega, the real field xi and, when a test function was supplied,
    phi~^a_x = a^{-1/8} ∫_{S_a(x)} phi and phi~(x) = a^{-2} ∫_{S_a(x)} phi.
    """
    mesh: float
    lam: np.ndarray
    lam_a: np.ndarray
    h_a: np.ndarray
    omega: np.ndarray
    phi_tilde: Optional[np.ndarray] = None
    phi_mean: Optional[np.ndarray] = None

    @property
    def xi(self) -> np.ndarray:
        """Real field lambda^a omega + h^a (per replica if omega is 2-D)."""
        return self.lam_a * self.omega + self.h_a

    @property
    def complex_xi(self) -> np.ndarray:
        """xi + i phi~^a (just xi if no test function was attached)."""
        if self.phi_tilde is None:
            return self.xi.astype(complex)
        return self.xi + 1j * self.phi_tilde

    @property
    def n_sites(self) -> int:
        return int(self.lam_a.shape[-1])

    def with_omega(self, omega: np.ndarray) -> 'ExternalField':
        """Same profiles, new disorder."""
        return ExternalField(self.mesh, self.lam, self.lam_a, self.h_a, np.asarray(omega, dtype=float),
                             self.phi_tilde, self.phi_mean)

    def with_phi_tilde(self, phi_tilde: Optional[np.ndarray]) -> 'ExternalField':
        return ExternalField(self.mesh, self.lam, self.lam_a, self.h_a, self.omega, phi_tilde, self.phi_mean)

    def lindeberg_shift(self) -> np.ndarray:
        """(h^a + i phi~^a) / lambda^a, the shift of the linearized driver."""
        if np.any(self.lam_a <= 0):
            raise NonPositiveLambda("lambda^a must be positive to normalize by it")
        imag = self.phi_tilde if self.phi_tilde is not None else 0.0
        return (self.h_a + 1j * imag) / self.lam_a


def build_external_field(
    lattice: Lattice,
    lam: Optional[Profile] = None,
    h: Optional[Profile] = None,
    omega: Optional[np.ndarray] = None,
    phi: Optional[Profile] = None,
    require_positive_lambda: bool = False,
) -> ExternalField:
    """
    Assemble the scaled site fields.

    Args:
        lattice: Lattice at mesh a
        lam: Disorder strength profile lambda (default 0)
        h: Deterministic field profile h (default 0)
        omega: Disorder values (default all zero)
        phi: Optional test function attaching the imaginary part
        require_positive_lambda: Enforce inf lambda > 0 for chaos normalization

    Returns:
        ExternalField
    """
    lam = lam or constant(0.0)
    h = h or constant(0.0)
    a = lattice.mesh
    pts = lattice.interior_sites
    lam_x = lam.at(pts)
    if require_positive_lambda:
        inf_lam = min(float(lam_x.min()), lam.inf(lattice.spec))
        if inf_lam <= 0:
            raise NonPositiveLambda(f"inf lambda = {inf_lam:.4g} <= 0")
    if omega is None:
        omega = np.zeros(lattice.n_sites)
    phi_tilde = phi_mean = None
    if phi is not None:
        integrals = cell_integrals(phi, lattice)
        phi_tilde = a ** (-MAGNETISATION_EXPONENT) * integrals
        phi_mean = integrals / a ** 2
    return ExternalField(
        mesh=a,
        lam=lam_x,
        lam_a=lambda_scale(a) * lam_x,
        h_a=h_scale(a) * h.at(pts),
        omega=np.asarray(omega, dtype=float),
        phi_tilde=phi_tilde,
        phi_mean=phi_mean,
    )

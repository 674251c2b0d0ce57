"""
Model parameters and spin configurations of the critical Ising model on a lattice.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..config import BETA_C
from ..disorder.field import ExternalField
from ..disorder.profiles import Profile, l2_norm_squared
from ..lattice.domain import Lattice


@dataclass(frozen=True, eq=False)
class ModelParams:
    """
    Inverse temperature, boundary condition and site fields.

    The Gibbs weight is exp(beta Σ_{x~y} σ_x σ_y + Σ_x xi_x σ_x), the bond sum
    running over unordered pairs with x interior and y interior or boundary.
    lam_l2_squared is ||lambda||²_{L²(Omega)}, needed for theta_a.
    """
    beta: float = BETA_C
    boundary: Optional[np.ndarray] = None
    field: Optional[np.ndarray] = None
    lam_l2_squared: float = 0.0

    def boundary_values(self, lattice: Lattice) -> np.ndarray:
        if self.boundary is None:
            return np.ones(lattice.n_boundary, dtype=np.int64)
        return np.asarray(self.boundary, dtype=np.int64)

    def site_field(self, lattice: Lattice) -> np.ndarray:
        if self.field is None:
            return np.zeros(lattice.n_sites)
        return np.asarray(self.field)

    def has_field(self) -> bool:
        return self.field is not None and bool(np.any(np.asarray(self.field) != 0))

    def is_complex(self) -> bool:
        return self.field is not None and np.iscomplexobj(self.field) and bool(np.any(np.imag(self.field) != 0))

    def validate(self, lattice: Lattice):
        if self.beta < 0:
            raise ValueError(f"beta must be non-negative, got {self.beta}")
        b = self.boundary_values(lattice)
        if b.shape != (lattice.n_boundary,) or not np.all(np.abs(b) == 1):
            raise ValueError("boundary values must be ±1, one per boundary site")
        f = self.site_field(lattice)
        if f.shape[-1] != lattice.n_sites:
            raise ValueError(f"field has {f.shape[-1]} entries for {lattice.n_sites} sites")

    def with_field(self, field: Optional[np.ndarray]) -> 'ModelParams':
        return ModelParams(self.beta, self.boundary, field, self.lam_l2_squared)

    def flipped(self) -> 'ModelParams':
        """Global spin flip: boundary and field negated."""
        boundary = None if self.boundary is None else -np.asarray(self.boundary)
        field = None if self.field is None else -np.asarray(self.field)
        return ModelParams(self.beta, boundary, field, self.lam_l2_squared)

    @classmethod
    def minus_boundary(cls, lattice: Lattice, beta: float = BETA_C) -> 'ModelParams':
        return cls(beta=beta, boundary=-np.ones(lattice.n_boundary, dtype=np.int64))

    @classmethod
    def from_field(
        cls,
        lattice: Lattice,
        field: ExternalField,
        lam: Optional[Profile] = None,
        beta: float = BETA_C,
        boundary: Optional[np.ndarray] = None,
        include_phi: bool = False,
    ) -> 'ModelParams':
        """
        Parameters for the disordered model with fields from an ExternalField.

        Args:
            lattice: Lattice
            field: Scaled site fields
            lam: Lambda profile, for ||lambda||²_{L²}
            beta: Inverse temperature
            boundary: Boundary spins (default all +1)
            include_phi: Use xi + i phi~ instead of xi
        """
        lam_l2 = l2_norm_squared(lam, lattice.spec) if lam is not None else 0.0
        xi = field.complex_xi if include_phi else field.xi
        return cls(beta=beta, boundary=boundary, field=xi, lam_l2_squared=lam_l2)


def theta_a(mesh: float, lam_l2_squared: float) -> float:
    """Counterterm theta_a = exp(-½ a^{-1/4} ||lambda||²_{L²})."""
    return float(np.exp(-0.5 * mesh ** (-0.25) * lam_l2_squared))


@dataclass(frozen=True, eq=False)
class SpinConfig:
    """One ±1 assignment on the interior sites."""
    spins: np.ndarray
    params: ModelParams

    def __post_init__(self):
        if not np.all(np.abs(self.spins) == 1):
            raise ValueError("spins must be ±1")

    @property
    def magnetisation(self) -> int:
        return int(np.sum(self.spins))

    def flipped(self) -> 'SpinConfig':
        return SpinConfig(-self.spins, self.params.flipped())


def log_boltzmann(spins: np.ndarray, lattice: Lattice, params: ModelParams) -> np.ndarray:
    """
    beta times the interaction energy of configurations (no site field).

    Args:
        spins: Array (n_states, n_sites) of ±1
        lattice: Lattice
        params: Model parameters

    Returns:
        beta (Σ_bonds σσ + Σ_x b_x σ_x) per configuration
    """
    spins = np.asarray(spins, dtype=np.float64)
    bonds = lattice.bonds
    b = lattice.boundary_field(params.boundary_values(lattice)).astype(np.float64)
    pair = np.sum(spins[:, bonds[:, 0]] * spins[:, bonds[:, 1]], axis=1)
    return params.beta * (pair + spins @ b)


def max_log_boltzmann(lattice: Lattice, params: ModelParams) -> float:
    """Upper bound of log_boltzmann over all configurations."""
    return params.beta * (len(lattice.bonds) + len(lattice.boundary_bonds))

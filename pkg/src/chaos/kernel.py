"""
Multilinear polynomial chaos kernels psi(I) over subsets of lattice sites.
"""
import logging
from dataclasses import dataclass, field
from math import comb
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple, Union

import numpy as np

from ..config import config
from ..errors import DegreeExceeded, MissingCorrelation
from ..ising.exact import CorrelationTable, mask_to_subset, popcounts

logger = logging.getLogger(__name__)

Subset = Tuple[int, ...]


@dataclass
class ChaosValue:
    """Value of a multilinear polynomial, split into real and imaginary parts."""
    value: Union[complex, np.ndarray]
    label: str = ""

    @property
    def real(self) -> Union[float, np.ndarray]:
        return np.real(self.value)

    @property
    def imag(self) -> Union[float, np.ndarray]:
        return np.imag(self.value)


@dataclass
class ChaosKernel:
    """
    Sparse kernel of a multilinear polynomial Psi(u) = Σ_I psi(I) u^I.

    Supports:
    - Variance Σ_{I≠∅} psi(I)² and influences Inf_x = Σ_{I∋x} psi(I)²
    - Truncation to degree l and the tail mass it drops
    - Vectorized evaluation over replicas
    - CSV export ("degree, i1..ik, coefficient")
    """
    coefficients: Dict[Subset, complex]
    degree: int
    mesh: float
    n_sites: int
    source: str = ""
    _groups: Optional[Dict[int, Tuple[np.ndarray, np.ndarray]]] = field(default=None, repr=False)

    def __post_init__(self):
        self.coefficients = {tuple(sorted(k)): v for k, v in self.coefficients.items()}

    def __getitem__(self, subset) -> complex:
        return self.coefficients.get(tuple(sorted(subset)), 0.0)

    def __len__(self) -> int:
        return len(self.coefficients)

    def items(self) -> Iterator[Tuple[Subset, complex]]:
        return iter(self.coefficients.items())

    @property
    def constant(self) -> complex:
        return self.coefficients.get((), 0.0)

    def variance(self) -> float:
        """Σ_{I≠∅} |psi(I)|², the variance of Psi at i.i.d. standardized inputs."""
        return float(sum(abs(v) ** 2 for k, v in self.coefficients.items() if k))

    def influence(self) -> np.ndarray:
        """Inf_x = Σ_{I∋x} |psi(I)|² for every site."""
        inf = np.zeros(self.n_sites)
        for subset, v in self.coefficients.items():
            if subset:
                inf[list(subset)] += abs(v) ** 2
        return inf

    def max_influence(self) -> float:
        return float(self.influence().max()) if self.n_sites else 0.0

    def tail_mass(self, l: int) -> float:
        """Σ_{|I|>l} |psi(I)|², the squared L² error of truncation at degree l."""
        return float(sum(abs(v) ** 2 for k, v in self.coefficients.items() if len(k) > l))

    def restrict(self, l: int) -> 'ChaosKernel':
        """Kernel truncated to |I| <= l."""
        if l > self.degree:
            raise DegreeExceeded(f"truncation degree {l} exceeds kernel degree {self.degree}")
        kept = {k: v for k, v in self.coefficients.items() if len(k) <= l}
        return ChaosKernel(kept, l, self.mesh, self.n_sites, f"{self.source}|<= {l}")

    def scaled(self, weights: np.ndarray, label: str = "") -> 'ChaosKernel':
        """Kernel psi(I) Π_{x∈I} weights_x, i.e. Psi evaluated at weights * u."""
        weights = np.asarray(weights)
        coefficients = {k: v * np.prod(weights[list(k)]) if k else v for k, v in self.coefficients.items()}
        return ChaosKernel(coefficients, self.degree, self.mesh, self.n_sites, label or self.source)

    def real_part(self) -> 'ChaosKernel':
        return ChaosKernel({k: float(np.real(v)) for k, v in self.items()}, self.degree, self.mesh,
                           self.n_sites, f"Re {self.source}")

    def imag_part(self) -> 'ChaosKernel':
        return ChaosKernel({k: float(np.imag(v)) for k, v in self.items()}, self.degree, self.mesh,
                           self.n_sites, f"Im {self.source}")

    def _degree_groups(self) -> Dict[int, Tuple[np.ndarray, np.ndarray]]:
        if self._groups is None:
            groups: Dict[int, List] = {}
            for subset, v in self.coefficients.items():
                groups.setdefault(len(subset), []).append((subset, v))
            self._groups = {
                k: (np.array([s for s, _ in items], dtype=np.int64).reshape(len(items), k),
                    np.array([v for _, v in items]))
                for k, items in groups.items()
            }
        return self._groups

    def evaluate(self, u: np.ndarray) -> Union[complex, np.ndarray]:
        """
        Psi(u) for one assignment (n_sites,) or a batch (replicas, n_sites).

        Coefficients of equal degree are evaluated together as one
        gather-and-product over the batch.
        """
        u = np.asarray(u)
        single = u.ndim == 1
        batch = u[None, :] if single else u
        groups = self._degree_groups()
        dtype = np.result_type(batch, *[coefs for _, coefs in groups.values()])
        total = np.zeros(batch.shape[0], dtype=dtype)
        for k, (subsets, coefs) in groups.items():
            if k == 0:
                total += coefs.sum()
                continue
            monomials = np.prod(batch[:, subsets], axis=2)
            total += monomials @ coefs
        return total[0] if single else total

    def to_csv(self, path: Path):
        """One line per subset: degree, i1..ik, coefficient (real and imaginary parts)."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            f.write("degree,sites,coefficient_real,coefficient_imag\n")
            for subset in sorted(self.coefficients, key=lambda s: (len(s), s)):
                v = complex(self.coefficients[subset])
                sites = ' '.join(str(i) for i in subset)
                f.write(f"{len(subset)},{sites},{v.real:.17g},{v.imag:.17g}\n")


def _subsets_of_table(corr: CorrelationTable, l: int) -> Iterator[Tuple[Subset, float]]:
    if corr.dense is not None:
        sizes = popcounts(corr.n_sites)
        for mask in np.flatnonzero(sizes <= l):
            yield mask_to_subset(int(mask)), corr.dense[mask]
        return
    for subset, v in corr.items():
        if len(subset) <= l:
            yield subset, v


def build_chaos_kernel(
    corr: CorrelationTable,
    lam_a: Union[np.ndarray, float],
    l: Optional[int] = None,
) -> ChaosKernel:
    """
    Kernel psi^a(I) = Π_{x∈I} lambda^a_x E[sigma^I] for |I| <= l.

    Args:
        corr: Correlation table covering every |I| <= l
        lam_a: lambda^a per site (or a constant)
        l: Degree cap (default CHAOS_DEGREE, at most the table's k_max)

    Returns:
        ChaosKernel

    Raises:
        MissingCorrelation: if the table lacks a needed subset
    """
    l = min(config.CHAOS_DEGREE, corr.k_max) if l is None else int(l)
    l = min(l, corr.n_sites)
    if l > corr.k_max:
        raise MissingCorrelation(f"kernel of degree {l} needs correlations up to {l}, table has {corr.k_max}")
    weights = np.broadcast_to(np.asarray(lam_a, dtype=float), (corr.n_sites,))
    coefficients: Dict[Subset, complex] = {}
    for subset, value in _subsets_of_table(corr, l):
        coefficients[subset] = value * (np.prod(weights[list(subset)]) if subset else 1.0)

    expected = sum(comb(corr.n_sites, k) for k in range(l + 1))
    if corr.dense is None and len(coefficients) < expected:
        raise MissingCorrelation(f"table covers {len(coefficients)} of {expected} subsets up to degree {l}")
    logger.info(f"Built chaos kernel of degree {l} with {len(coefficients)} coefficients")
    return ChaosKernel(coefficients, l, corr.mesh, corr.n_sites, source="psi^a")


def correlation_kernel(corr: CorrelationTable, l: Optional[int] = None) -> ChaosKernel:
    """Kernel with coefficients E[sigma^I] (unit weights)."""
    return build_chaos_kernel(corr, 1.0, l)


def white_noise_kernel(lattice, phi) -> ChaosKernel:
    """Degree-1 kernel psi({x}) = a phi(x) of the white-noise pairing."""
    values = lattice.mesh * phi.at(lattice.interior_sites)
    coefficients = {(x,): float(v) for x, v in enumerate(values)}
    return ChaosKernel(coefficients, 1, lattice.mesh, lattice.n_sites, source="white-noise")

"""
Brute-force enumeration: exact partition functions and spin correlations.
"""
import logging
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Dict, Iterator, Optional, Sequence, Tuple

import numpy as np

from ..config import config
from ..errors import MissingCorrelation, TooLarge
from ..lattice.domain import Lattice
from .model import ModelParams, log_boltzmann, max_log_boltzmann

logger = logging.getLogger(__name__)

# Dense state vectors beyond this many sites do not fit comfortably in memory
_DENSE_MAX_SITES = 22


def spins_from_states(states: np.ndarray, n_sites: int) -> np.ndarray:
    """
    Decode state indices into spin rows.

    Bit i of the state is 1 when sigma_i = -1.

    Args:
        states: Integer state indices
        n_sites: Number of sites

    Returns:
        Array (len(states), n_sites) of ±1 (int8)
    """
    bits = (np.asarray(states, dtype=np.int64)[:, None] >> np.arange(n_sites, dtype=np.int64)) & 1
    return (1 - 2 * bits).astype(np.int8)


def enumerate_chunks(n_sites: int, chunk: Optional[int] = None) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """Yield (state indices, spins) over all 2^n configurations in chunks."""
    chunk = chunk or config.ENUMERATION_CHUNK
    total = 1 << n_sites
    for start in range(0, total, chunk):
        states = np.arange(start, min(start + chunk, total), dtype=np.int64)
        yield states, spins_from_states(states, n_sites)


def _check_enumerable(lattice: Lattice):
    if lattice.n_sites > config.ENUMERATION_CAP:
        raise TooLarge(
            f"{lattice.n_sites} sites exceed the enumeration cap of {config.ENUMERATION_CAP}"
        )


def _field_shift(field: np.ndarray) -> float:
    return float(np.sum(np.abs(np.real(field))))


def exact_partition(lattice: Lattice, params: ModelParams) -> complex:
    """
    Z = E[exp(Σ xi_x sigma_x)] under the pure Gibbs measure, by enumeration.

    Computed as the ratio of the field-dressed to the field-free Boltzmann
    sum with both exponents shifted by their maxima, so complex fields and
    large real fields are handled without overflow.

    Args:
        lattice: Lattice with at most ENUMERATION_CAP sites
        params: Model parameters, complex fields allowed

    Returns:
        Z as a complex number

    Raises:
        TooLarge: if the lattice exceeds the enumeration cap
    """
    _check_enumerable(lattice)
    params.validate(lattice)
    xi = params.site_field(lattice)
    shift_energy = max_log_boltzmann(lattice, params)
    shift_field = _field_shift(xi)

    numerator = 0.0 + 0.0j
    denominator = 0.0
    for _, spins in enumerate_chunks(lattice.n_sites):
        log_w = log_boltzmann(spins, lattice, params) - shift_energy
        weights = np.exp(log_w)
        denominator += weights.sum()
        numerator += np.sum(weights * np.exp(spins @ xi - shift_field))
    return complex(numerator / denominator * np.exp(shift_field))


def state_probabilities(lattice: Lattice, params: ModelParams) -> np.ndarray:
    """
    Gibbs weights of all 2^n states, normalized to sum 1.

    With a complex field the vector holds the complex weights divided by their
    total, so Walsh-Hadamard sums of it are ratios of complex partition sums.
    """
    _check_enumerable(lattice)
    if lattice.n_sites > _DENSE_MAX_SITES:
        raise TooLarge(f"dense state vector for {lattice.n_sites} sites exceeds {_DENSE_MAX_SITES}")
    params.validate(lattice)
    xi = params.site_field(lattice)
    dtype = complex if np.iscomplexobj(xi) else float
    probs = np.empty(1 << lattice.n_sites, dtype=dtype)
    shift = max_log_boltzmann(lattice, params) + _field_shift(xi)
    for states, spins in enumerate_chunks(lattice.n_sites):
        probs[states] = np.exp(log_boltzmann(spins, lattice, params) + spins @ xi - shift)
    return probs / probs.sum()


def walsh_hadamard(values: np.ndarray) -> np.ndarray:
    """
    Unnormalized fast Walsh-Hadamard transform.

    out[m] = Σ_s values[s] (-1)^{popcount(s & m)}; applied to state
    probabilities this is E[sigma^I] for the subset with bit mask m.
    """
    out = np.array(values, copy=True)
    n = out.shape[0]
    h = 1
    while h < n:
        view = out.reshape(-1, 2, h)
        upper = view[:, 0, :] + view[:, 1, :]
        lower = view[:, 0, :] - view[:, 1, :]
        view[:, 0, :] = upper
        view[:, 1, :] = lower
        h *= 2
    return out


def popcounts(n_sites: int) -> np.ndarray:
    """Subset sizes of all 2^n bit masks."""
    masks = np.arange(1 << n_sites, dtype=np.int64)
    counts = np.zeros_like(masks)
    for i in range(n_sites):
        counts += (masks >> i) & 1
    return counts


def mask_to_subset(mask: int) -> Tuple[int, ...]:
    return tuple(i for i in range(int(mask).bit_length()) if (mask >> i) & 1)


def subset_to_mask(subset: Sequence[int]) -> int:
    mask = 0
    for i in subset:
        mask |= 1 << int(i)
    return mask


@dataclass
class CorrelationTable:
    """
    Spin correlations E[sigma^I] for subsets I with |I| <= k_max.

    Supports:
    - Lookup by any ordering of the subset (keys are sorted tuples)
    - A dense by-mask vector when every subset was computed
    - CSV export (site tuple, value)
    """
    n_sites: int
    k_max: int
    mesh: float
    boundary_tag: str
    source: str = "exact"
    values: Dict[Tuple[int, ...], float] = field(default_factory=dict)
    dense: Optional[np.ndarray] = field(default=None, repr=False)

    def __getitem__(self, subset: Sequence[int]) -> float:
        key = tuple(sorted(int(i) for i in subset))
        if self.dense is not None:
            return self.dense[subset_to_mask(key)]
        if key not in self.values:
            raise MissingCorrelation(f"no correlation for subset {key}")
        return self.values[key]

    def __contains__(self, subset: Sequence[int]) -> bool:
        key = tuple(sorted(int(i) for i in subset))
        if self.dense is not None:
            return len(key) <= self.k_max
        return key in self.values

    def get(self, subset: Sequence[int], default: Optional[float] = None) -> Optional[float]:
        return self[subset] if subset in self else default

    def items(self) -> Iterator[Tuple[Tuple[int, ...], float]]:
        if self.dense is None:
            yield from self.values.items()
            return
        sizes = popcounts(self.n_sites)
        for mask in np.flatnonzero(sizes <= self.k_max):
            yield mask_to_subset(int(mask)), self.dense[mask]

    def one_point(self) -> np.ndarray:
        return np.array([self[(x,)] for x in range(self.n_sites)])

    def is_complete(self) -> bool:
        return self.dense is not None and self.k_max >= self.n_sites

    def to_csv(self, path: Path):
        from ..persistence import save_table

        rows = [
            {'sites': ' '.join(str(i) for i in subset), 'size': len(subset), 'value': float(np.real(v))}
            for subset, v in self.items()
        ]
        save_table(rows, path, columns=['sites', 'size', 'value'])

    @classmethod
    def from_csv(cls, path: Path, n_sites: int, mesh: float, boundary_tag: str) -> 'CorrelationTable':
        from ..persistence import load_table

        frame = load_table(path)
        values = {}
        for sites, value in zip(frame['sites'].fillna(''), frame['value']):
            key = tuple(int(s) for s in str(sites).split()) if str(sites).strip() else ()
            values[key] = float(value)
        k_max = max((len(k) for k in values), default=0)
        return cls(n_sites=n_sites, k_max=k_max, mesh=mesh, boundary_tag=boundary_tag, source="csv", values=values)


def boundary_tag(params: ModelParams, lattice: Lattice) -> str:
    b = params.boundary_values(lattice)
    if np.all(b == 1):
        return "+"
    if np.all(b == -1):
        return "-"
    return "mixed"


def exact_correlations(lattice: Lattice, params: ModelParams, k_max: Optional[int] = None) -> CorrelationTable:
    """
    All correlations E[sigma^I], |I| <= k_max, by enumeration.

    Up to 22 sites a single Walsh-Hadamard transform of the state
    probabilities yields every subset at once; larger lattices (up to the
    enumeration cap) accumulate the requested subsets chunk by chunk.

    Args:
        lattice: Lattice
        params: Model parameters (fields are usually zero)
        k_max: Largest subset size (default all)

    Returns:
        CorrelationTable

    Raises:
        TooLarge: if the lattice exceeds the enumeration cap
    """
    _check_enumerable(lattice)
    n = lattice.n_sites
    k_max = n if k_max is None else min(int(k_max), n)
    tag = boundary_tag(params, lattice)

    if n <= _DENSE_MAX_SITES:
        probs = state_probabilities(lattice, params)
        dense = walsh_hadamard(probs)
        if not np.iscomplexobj(params.site_field(lattice)):
            dense = dense.real
        logger.info(f"Exact correlations on {n} sites via Walsh-Hadamard (k_max={k_max})")
        return CorrelationTable(n_sites=n, k_max=k_max, mesh=lattice.mesh, boundary_tag=tag, dense=dense)

    subsets = [s for k in range(k_max + 1) for s in combinations(range(n), k)]
    logger.info(f"Exact correlations on {n} sites for {len(subsets)} subsets by chunked enumeration")
    xi = params.site_field(lattice)
    shift = max_log_boltzmann(lattice, params) + _field_shift(xi)
    sums = np.zeros(len(subsets), dtype=complex if np.iscomplexobj(xi) else float)
    total = 0.0
    for _, spins in enumerate_chunks(n):
        w = np.exp(log_boltzmann(spins, lattice, params) + spins @ xi - shift)
        total += w.sum()
        for k, subset in enumerate(subsets):
            if subset:
                sums[k] += np.sum(w * np.prod(spins[:, list(subset)], axis=1))
            else:
                sums[k] += w.sum()
    values = {s: v / total for s, v in zip(subsets, sums)}
    return CorrelationTable(n_sites=n, k_max=k_max, mesh=lattice.mesh, boundary_tag=tag, values=values)


def subset_products(values: np.ndarray) -> np.ndarray:
    """
    Products Π_{x∈I} values_x for all subsets I, indexed by bit mask.

    Built by doubling: the masks with top bit i are the masks below 2^i times values_i.
    """
    values = np.asarray(values)
    out = np.ones(1 << len(values), dtype=np.result_type(values, float))
    for i, v in enumerate(values):
        size = 1 << i
        out[size:2 * size] = out[:size] * v
    return out

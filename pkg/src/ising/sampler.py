"""
Monte Carlo sampling of the Ising Gibbs measure: heat-bath and Wolff with a ghost spin.
"""
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, Optional, Union

import numpy as np
from numba import njit
from tqdm import tqdm

from ..config import config
from ..errors import WolffWithField
from ..lattice.domain import Lattice
from .. import rng as keyed
from .exact import CorrelationTable, boundary_tag
from .model import ModelParams, SpinConfig

logger = logging.getLogger(__name__)

ALGORITHMS = ("heatbath", "wolff")


@njit(cache=True)
def _seed_kernel(seed):
    np.random.seed(seed)


@njit(cache=True)
def _heatbath_sweeps(spins, neighbors, boundary_field, field, beta, n_sweeps):
    n = spins.shape[0]
    for _ in range(n_sweeps):
        for x in range(n):
            local = boundary_field[x]
            for slot in range(4):
                y = neighbors[x, slot]
                if y >= 0:
                    local += spins[y]
            h_eff = beta * local + field[x]
            p_up = 1.0 / (1.0 + math.exp(-2.0 * h_eff))
            if np.random.random() < p_up:
                spins[x] = 1
            else:
                spins[x] = -1


@njit(cache=True)
def _wolff_moves(spins, neighbors, ghost_coupling, beta, max_moves, target_visits, stack, in_cluster):
    """
    Cluster moves with the boundary folded into a ghost spin fixed at +1.

    Site x couples to the ghost with K_x = beta * (sum of adjacent boundary
    spins). The ghost bond is activated with probability 1 - exp(-2|K_x|) when
    sigma_x sign(K_x) > 0; a cluster connected to the ghost is not flipped.
    Runs max_moves moves, or stops earlier once target_visits sites have been
    grown when target_visits > 0. Returns (moves, sites visited).
    """
    n = spins.shape[0]
    p_add = 1.0 - math.exp(-2.0 * beta)
    moves = 0
    visited = 0
    while moves < max_moves:
        if target_visits > 0 and visited >= target_visits:
            break
        seed = np.random.randint(0, n)
        s0 = spins[seed]
        in_cluster[seed] = True
        stack[0] = seed
        top = 1
        size = 0
        anchored = False
        while top > 0:
            top -= 1
            x = stack[top]
            # stack[n:] collects members in visit order
            stack[n + size] = x
            size += 1
            k = ghost_coupling[x] * s0
            if k > 0.0 and not anchored:
                if np.random.random() < 1.0 - math.exp(-2.0 * k):
                    anchored = True
            for slot in range(4):
                y = neighbors[x, slot]
                if y >= 0 and not in_cluster[y] and spins[y] == s0:
                    if np.random.random() < p_add:
                        in_cluster[y] = True
                        stack[top] = y
                        top += 1
        for m in range(size):
            x = stack[n + m]
            if not anchored:
                spins[x] = -s0
            in_cluster[x] = False
        moves += 1
        visited += size
    return moves, visited


def integrated_autocorrelation_time(series: np.ndarray, window_c: Optional[float] = None) -> float:
    """
    Windowed integrated autocorrelation time of a scalar series.

    tau(W) = ½ + Σ_{t=1}^{W} rho(t), with the smallest window W >= c tau(W).
    The autocovariance is computed by FFT. A constant series has tau = ½.

    Args:
        series: Observable time series
        window_c: Window constant c (default AUTOCORR_WINDOW_C)

    Returns:
        tau_int in units of series steps
    """
    c = window_c or config.AUTOCORR_WINDOW_C
    x = np.asarray(series, dtype=float)
    n = len(x)
    if n < 2:
        return 0.5
    x = x - x.mean()
    variance = float(np.dot(x, x) / n)
    if variance <= 0:
        return 0.5
    size = 1 << int(np.ceil(np.log2(2 * n)))
    spectrum = np.fft.rfft(x, size)
    autocov = np.fft.irfft(spectrum * np.conj(spectrum), size)[:n] / n
    rho = autocov / autocov[0]
    tau = 0.5
    for window in range(1, n):
        tau += rho[window]
        if window >= c * tau:
            break
    return float(max(tau, 0.5))


@dataclass
class GibbsRun:
    """
    Recorded configurations of one Markov chain after equilibration.

    Supports:
    - Per-site means and standard errors corrected by tau_int
    - Iteration over SpinConfig records
    - Associative merging of independent chains
    - Packed-bit snapshot export
    """
    spins: np.ndarray
    magnetisation: np.ndarray
    tau_int: float
    discarded: int
    algorithm: str
    seed: int
    params: ModelParams
    mesh: float

    @property
    def n_samples(self) -> int:
        return int(self.spins.shape[0])

    @property
    def n_effective(self) -> float:
        return self.n_samples / max(2.0 * self.tau_int, 1.0)

    def configs(self) -> Iterator[SpinConfig]:
        for row in self.spins:
            yield SpinConfig(row, self.params)

    def site_means(self) -> np.ndarray:
        return self.spins.mean(axis=0)

    def standard_error(self, values: np.ndarray) -> float:
        """Standard error of the mean of a per-sample series, inflated by 2 tau_int."""
        values = np.asarray(values, dtype=float)
        if len(values) < 2:
            return float('inf')
        return float(np.std(values, ddof=1) / math.sqrt(self.n_effective))

    def site_standard_errors(self) -> np.ndarray:
        std = self.spins.std(axis=0, ddof=1) if self.n_samples > 1 else np.full(self.spins.shape[1], np.inf)
        return std / math.sqrt(self.n_effective)

    def merge(self, other: 'GibbsRun') -> 'GibbsRun':
        """Pool the samples of two independent chains of the same model."""
        if self.spins.shape[1] != other.spins.shape[1]:
            raise ValueError("cannot merge runs on different lattices")
        total = self.n_samples + other.n_samples
        tau = (self.tau_int * self.n_samples + other.tau_int * other.n_samples) / max(total, 1)
        return GibbsRun(
            spins=np.concatenate([self.spins, other.spins]),
            magnetisation=np.concatenate([self.magnetisation, other.magnetisation]),
            tau_int=tau,
            discarded=self.discarded + other.discarded,
            algorithm=self.algorithm,
            seed=self.seed,
            params=self.params,
            mesh=self.mesh,
        )

    def metadata(self) -> Dict[str, Any]:
        return {
            'mesh': self.mesh,
            'seed': self.seed,
            'algorithm': self.algorithm,
            'beta': self.params.beta,
            'tau_int': self.tau_int,
            'discarded': self.discarded,
            'n_samples': self.n_samples,
        }

    def save_snapshot(self, path: Path, index: int = -1):
        """Write one recorded configuration as a packed bit array with a JSON sidecar."""
        from ..persistence import save_packed_spins

        row = self.n_samples + index if index < 0 else index
        save_packed_spins(self.spins[row], path, {**self.metadata(), 'sweep_index': int(self.discarded + row)})


def sample_gibbs(
    lattice: Lattice,
    params: ModelParams,
    sweeps: int,
    seed: Union[int, np.random.Generator],
    algorithm: str = "heatbath",
    replica: int = 0,
    thin: int = 1,
    burn_in: Optional[int] = None,
    show_progress: bool = False,
    stream: str = "gibbs",
) -> GibbsRun:
    """
    Run one Markov chain and return its equilibrated samples.

    The chain starts from all +1, performs burn_in sweeps, records one
    configuration every thin sweeps, then drops the first
    EQUILIBRATION_FACTOR * tau_int records, with tau_int measured on the
    total magnetisation.

    A Wolff sweep is a fixed number of cluster moves: the mean number of
    moves needed to visit n sites, measured during burn-in and then frozen.

    Args:
        lattice: Lattice
        params: Model parameters with a real field
        sweeps: Number of recorded sweeps (before thinning)
        seed: Master seed or keyed generator
        algorithm: "heatbath" or "wolff"
        replica: Replica index of the keyed stream
        thin: Sweeps between records
        burn_in: Sweeps before recording (default BURN_IN_SWEEPS)
        show_progress: Show a tqdm bar over recorded sweeps
        stream: Purpose tag of the keyed stream; chains that must be independent use distinct tags

    Returns:
        GibbsRun

    Raises:
        WolffWithField: if wolff is requested with a nonzero field
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}, expected one of {ALGORITHMS}")
    params.validate(lattice)
    if params.is_complex():
        raise ValueError("complex fields cannot be sampled; use an exact backend")
    if algorithm == "wolff" and params.has_field():
        raise WolffWithField("the cluster algorithm does not support site fields")

    if isinstance(seed, np.random.Generator):
        gen, master = seed, -1
    else:
        gen, master = keyed.generator(int(seed), stream, replica), int(seed)
    _seed_kernel(keyed.numba_seed(gen))

    n = lattice.n_sites
    neighbors = np.ascontiguousarray(lattice.interior_neighbors, dtype=np.int64)
    boundary = lattice.boundary_field(params.boundary_values(lattice)).astype(np.float64)
    field = np.ascontiguousarray(np.real(params.site_field(lattice)), dtype=np.float64)
    spins = np.ones(n, dtype=np.int8)
    stack = np.empty(2 * n, dtype=np.int64)
    in_cluster = np.zeros(n, dtype=np.bool_)

    ghost = params.beta * boundary
    burn_in = config.BURN_IN_SWEEPS if burn_in is None else int(burn_in)
    moves_per_sweep = 1
    if algorithm == "heatbath":
        if burn_in > 0:
            _heatbath_sweeps(spins, neighbors, boundary, field, params.beta, burn_in)
    else:
        # Burn-in grows clusters until burn_in * n sites are visited; the
        # recorded chain then uses the frozen mean number of moves per sweep.
        target = max(burn_in, 1) * n
        moves, _ = _wolff_moves(spins, neighbors, ghost, params.beta, target, target, stack, in_cluster)
        moves_per_sweep = max(int(round(moves / max(burn_in, 1))), 1)
        logger.info(f"Wolff moves per sweep frozen at {moves_per_sweep}")

    def advance(k: int):
        if algorithm == "heatbath":
            _heatbath_sweeps(spins, neighbors, boundary, field, params.beta, k)
        else:
            _wolff_moves(spins, neighbors, ghost, params.beta, k * moves_per_sweep, 0, stack, in_cluster)

    n_records = max(int(sweeps) // max(int(thin), 1), 1)
    records = np.empty((n_records, n), dtype=np.int8)
    for r in tqdm(range(n_records), desc=f"{algorithm} sweeps", disable=not show_progress):
        advance(max(int(thin), 1))
        records[r] = spins

    magnetisation = records.sum(axis=1, dtype=np.int64).astype(float)
    tau = integrated_autocorrelation_time(magnetisation)
    drop = int(math.ceil(config.EQUILIBRATION_FACTOR * tau))
    if drop >= n_records // 2:
        logger.warning(
            f"Chain of {n_records} records is short for tau_int={tau:.2f}; keeping the last half"
        )
        drop = n_records // 2
    logger.info(
        f"{algorithm} chain on {n} sites: {n_records} records, tau_int={tau:.2f}, discarded {drop}"
    )
    return GibbsRun(
        spins=records[drop:],
        magnetisation=magnetisation[drop:],
        tau_int=tau,
        discarded=drop,
        algorithm=algorithm,
        seed=master,
        params=params,
        mesh=lattice.mesh,
    )


def sampled_correlations(run: GibbsRun, k_max: int = 2, lattice: Optional[Lattice] = None) -> CorrelationTable:
    """
    Empirical correlations from a Gibbs run, for lattices beyond enumeration.

    Args:
        run: Equilibrated samples
        k_max: 1 or 2 (one- and two-point functions)
        lattice: Lattice, for the boundary tag

    Returns:
        CorrelationTable with source "sampled"
    """
    if k_max > 2:
        raise ValueError("sampled correlations are limited to k_max <= 2")
    spins = run.spins.astype(np.float64)
    n = spins.shape[1]
    values = {(): 1.0}
    means = spins.mean(axis=0)
    for x in range(n):
        values[(x,)] = float(means[x])
    if k_max == 2:
        second = spins.T @ spins / spins.shape[0]
        rows, cols = np.triu_indices(n, k=1)
        for x, y, v in zip(rows, cols, second[rows, cols]):
            values[(int(x), int(y))] = float(v)
    tag = boundary_tag(run.params, lattice) if lattice is not None else "+"
    return CorrelationTable(n_sites=n, k_max=k_max, mesh=run.mesh, boundary_tag=tag, source="sampled", values=values)

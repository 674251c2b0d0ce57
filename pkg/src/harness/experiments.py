"""
Experiment kinds: how a manifest expands into grid cells and how one cell runs.

Every cell returns rows tagged with the table they belong to and a small
summary. Cells are independent and keyed only by their coordinates, so any
subset can be recomputed in any order.
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterator, List, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from ..besov.bumps import bump_field, random_grid_fields
from ..besov.functionals import piecewise_magnetisation
from ..besov.mra import besov_holder_norm
from ..besov.subdomain import Region, box_dimension, integrate_over_subdomain, koch_island
from ..besov.wavelets import build_wavelet_basis
from ..chaos.expansion import evaluate_high_temperature_expansion, wiener_chaos_variance_table
from ..chaos.kernel import build_chaos_kernel
from ..chaos.lindeberg import influence_and_lindeberg_bound
from ..chaos.tanh_table import fit_residual_exponent, tanh_moment_table
from ..disorder.field import lambda_scale
from ..disorder.laws import DisorderLaw, sample_disorder
from ..disorder.profiles import constant
from ..ising.exact import exact_correlations, exact_partition
from ..ising.model import ModelParams
from ..ising.partition import rescaled_partition
from ..ising.sampler import sample_gibbs
from ..ising.transfer import transfer_matrix_partition
from ..lattice.blocks import build_block_grid
from ..lattice.domain import Lattice, discretize_domain, rectangle_lattice
from ..moments.ensemble import build_ensemble, replica_log_partitions
from ..moments.hypercontractivity import lyapunov_table, positive_moment_bound_check, second_moment_stability
from ..moments.overlap import overlap_gradient_estimate
from ..moments.tails import inverse_moment, jensen_check, negative_tail_check, paley_zygmund_check
from ..singularity.blocks import (BlockObservables, block_noise_variance_ratio, lambda_gradient_sup,
                                  smeared_block_magnetisation, smeared_gap_bound)
from ..singularity.certificate import fractional_moment_certificate
from ..singularity.circuits import circuit_probability, disjoint_annuli_census
from ..singularity.conditional import conditional_rn_factor, conditional_rn_monte_carlo
from ..singularity.divergence import coarse_magnetisation_divergence
from ..singularity.histogram import bc_curve, choose_resolution
from ..singularity.sampling import PURE_STREAM, draw_disordered, epsilon_report, feature_samples
from .. import rng as keyed
from .manifest import ExperimentKind, ExperimentManifest

logger = logging.getLogger(__name__)

Cell = Dict[str, Any]
Rows = List[Dict[str, Any]]

# Known columns per table, so an empty run still writes headers
TABLE_COLUMNS: Dict[str, List[str]] = {
    'scaling': ['mesh', 'n_sites', 'center_mean', 'stderr', 'tau_int', 'n_effective', 'scaled_mean'],
    'chaos_identity': ['width', 'height', 'field', 'value_re', 'value_im', 'reference_re', 'reference_im',
                       'relative_error'],
    'backend_equivalence': ['width', 'height', 'field', 'enumeration_re', 'enumeration_im', 'transfer_re',
                            'transfer_im', 'relative_error'],
    'lindeberg': ['mesh', 'l', 'max_influence', 'variance', 'gap', 'gap_stderr', 'bound', 'replicas'],
    'wiener_chaos': ['mesh', 'degree', 'mean', 'empirical_variance', 'analytic_variance'],
    'tanh_table': ['law', 'mesh', 'method', 're', 're2', 'im', 'im2', 'reim', 're_residual', 're2_residual'],
    'tanh_fit': ['moment', 'exponent'],
    'besov_norm': ['mesh', 'alpha', 'norm', 'stderr', 'configs', 'n_max', 'argsup_level'],
    'subdomain': ['check', 'pair', 'value', 'direct', 'error', 'relative_error', 'tail_bound', 'dimension'],
    'bc': ['mesh', 'control', 'N', 'm', 'bc', 'ci_low', 'ci_high', 'n_pure', 'n_disordered', 'n_bins',
           'resamples'],
    'certificate': ['mesh', 'N', 'm', 'S', 'M', 'product_bound', 'inverse_f_estimate', 'f_over_z_estimate',
                    'epsilon', 'replicas'],
    'divergence': ['mesh', 'N', 'mean', 'stderr', 'n_samples', 'monotone'],
    'annuli': ['mesh', 'N', 'disjoint_annuli', 'surrounded', 'lower_bound', 'fraction'],
    'conditional': ['case', 'factor', 'mc_mean', 'mc_stderr', 'z_score', 'w_mean', 'w_stderr'],
    'positive_moments': ['mesh', 'p', 'empirical', 'ci_low', 'ci_high', 'bound', 'holds', 'replicas'],
    'lyapunov': ['mesh', 'p', 'norm', 'ci_low', 'ci_high', 'monotone'],
    'negative_moments': ['mesh', 'p', 'empirical', 'ci_low', 'ci_high', 'stable', 'mean_log_z', 'log_mean_z',
                         'jensen_holds'],
    'tail_curve': ['mesh', 't', 'count', 'probability', 'ci_low', 'ci_high'],
    'tail_fit': ['mesh', 'slope', 'intercept', 'gamma', 'consistent', 'degenerate', 'replicas'],
    'paley_zygmund': ['mesh', 'c1', 'c2', 'probability', 'ci_low', 'ci_high', 'bound', 'holds', 'replicas'],
    'overlap': ['mesh', 'estimate', 'stderr', 'pairs', 'ceiling', 'exact', 'z_score'],
    'second_moment': ['mesh', 'n_sites', 'second_moment', 'ci_low', 'ci_high', 'first_moment', 'exact', 'stable'],
}

# Tables each kind produces
KIND_TABLES: Dict[ExperimentKind, List[str]] = {
    ExperimentKind.SCALING: ['scaling'],
    ExperimentKind.CHAOS_IDENTITY: ['chaos_identity', 'backend_equivalence'],
    ExperimentKind.LINDEBERG: ['lindeberg', 'wiener_chaos'],
    ExperimentKind.BESOV: ['besov_norm', 'subdomain'],
    ExperimentKind.SINGULARITY: ['bc', 'certificate', 'divergence', 'annuli', 'conditional'],
    ExperimentKind.MOMENTS: ['positive_moments', 'lyapunov', 'negative_moments', 'tail_curve', 'tail_fit',
                             'paley_zygmund', 'overlap', 'second_moment'],
    ExperimentKind.TANH_TABLE: ['tanh_table', 'tanh_fit'],
}


@dataclass(frozen=True)
class Experiment:
    """Grid expansion and cell runner of one experiment kind."""
    kind: ExperimentKind
    cells: Callable[[ExperimentManifest], Iterator[Cell]]
    run: Callable[[ExperimentManifest, Cell], Tuple[Rows, Dict[str, Any]]]


EXPERIMENTS: Dict[ExperimentKind, Experiment] = {}


def register(kind: ExperimentKind, cells: Callable[[ExperimentManifest], Iterator[Cell]]):
    def decorator(run):
        EXPERIMENTS[kind] = Experiment(kind, cells, run)
        return run
    return decorator


def tagged(table: str, rows: Rows, **coordinates) -> Rows:
    return [{'table': table, **coordinates, **row} for row in rows]


def lattice_at(manifest: ExperimentManifest, mesh: float) -> Lattice:
    return discretize_domain(manifest.domain.at_mesh(mesh))


def pure_run(manifest: ExperimentManifest, lattice: Lattice, algorithm: str = "heatbath"):
    replica = int(round(1.0 / lattice.mesh))
    return sample_gibbs(lattice, ModelParams(), manifest.sweeps, manifest.seed,
                        algorithm=manifest.option('algorithm', algorithm), replica=replica,
                        thin=manifest.option('thin', 1), stream=PURE_STREAM)


def center_site(lattice: Lattice, point=(0.5, 0.5)) -> int:
    d = np.hypot(lattice.interior_sites[:, 0] - point[0], lattice.interior_sites[:, 1] - point[1])
    return int(np.argmin(d))


def run_cell(manifest: ExperimentManifest, cell: Cell) -> Tuple[Rows, Dict[str, Any]]:
    """Run one grid cell of the manifest's experiment kind."""
    return EXPERIMENTS[manifest.kind].run(manifest, cell)


def expand_cells(manifest: ExperimentManifest) -> List[Cell]:
    return list(EXPERIMENTS[manifest.kind].cells(manifest))


# scaling

def _scaling_cells(manifest: ExperimentManifest) -> Iterator[Cell]:
    for a in manifest.meshes:
        yield {'mesh': a}


@register(ExperimentKind.SCALING, _scaling_cells)
def run_scaling(manifest: ExperimentManifest, cell: Cell):
    lattice = lattice_at(manifest, cell['mesh'])
    run = pure_run(manifest, lattice, algorithm="wolff")
    x0 = center_site(lattice, tuple(manifest.option('point', (0.5, 0.5))))
    series = run.spins[:, x0].astype(float)
    mean = float(series.mean())
    row = {
        'mesh': lattice.mesh, 'n_sites': lattice.n_sites, 'center_mean': mean,
        'stderr': run.standard_error(series), 'tau_int': run.tau_int, 'n_effective': run.n_effective,
        'scaled_mean': lattice.mesh ** (-1.0 / 8.0) * mean,
    }
    return tagged('scaling', [row]), row


# chaos-identity

def _identity_cells(manifest: ExperimentManifest) -> Iterator[Cell]:
    max_w, max_h = manifest.option('identity_max', (4, 4))
    for w in range(1, max_w + 1):
        for h in range(1, max_h + 1):
            yield {'check': 'identity', 'width': w, 'height': h}
    max_w, max_h = manifest.option('backend_max', (4, 5))
    for w in range(1, max_w + 1):
        for h in range(1, max_h + 1):
            yield {'check': 'backend', 'width': w, 'height': h}


def _relative_error(value: complex, reference: complex) -> float:
    scale = abs(reference)
    return abs(value - reference) / scale if scale > 0 else abs(value - reference)


@register(ExperimentKind.CHAOS_IDENTITY, _identity_cells)
def run_chaos_identity(manifest: ExperimentManifest, cell: Cell):
    w, h = cell['width'], cell['height']
    lattice = rectangle_lattice(w, h, mesh=manifest.meshes[0])
    fields = manifest.option('fields', 20)
    scale = manifest.option('field_scale', 0.5)
    rng = keyed.generator(manifest.seed, f"{cell['check']}-fields", w, h)
    rows = []
    if cell['check'] == 'identity':
        corr = exact_correlations(lattice, ModelParams())
        for k in range(fields):
            xi = scale * (rng.standard_normal(lattice.n_sites) + 1j * rng.standard_normal(lattice.n_sites))
            params = ModelParams(field=xi)
            value = evaluate_high_temperature_expansion(lattice, params, corr)
            reference = complex(rescaled_partition(lattice, params, "enumeration"))
            rows.append({'width': w, 'height': h, 'field': k, 'value_re': value.real, 'value_im': value.imag,
                         'reference_re': reference.real, 'reference_im': reference.imag,
                         'relative_error': _relative_error(value, reference)})
        table = 'chaos_identity'
    else:
        for k in range(fields):
            params = ModelParams(field=scale * rng.standard_normal(lattice.n_sites))
            enumerated = exact_partition(lattice, params)
            transferred = transfer_matrix_partition(lattice, params)
            rows.append({'width': w, 'height': h, 'field': k,
                         'enumeration_re': enumerated.real, 'enumeration_im': enumerated.imag,
                         'transfer_re': transferred.real, 'transfer_im': transferred.imag,
                         'relative_error': _relative_error(transferred, enumerated)})
        table = 'backend_equivalence'
    worst = max(r['relative_error'] for r in rows)
    return tagged(table, rows), {'max_relative_error': worst, 'fields': fields}


# lindeberg

def _lindeberg_cells(manifest: ExperimentManifest) -> Iterator[Cell]:
    for a in manifest.meshes:
        for l in manifest.ls:
            yield {'mesh': a, 'l': l}


@register(ExperimentKind.LINDEBERG, _lindeberg_cells)
def run_lindeberg(manifest: ExperimentManifest, cell: Cell):
    side = manifest.option('side', 3)
    lattice = rectangle_lattice(side, side, mesh=cell['mesh'])
    lam = manifest.profiles()['lam']
    corr = exact_correlations(lattice, ModelParams(), k_max=cell['l'])
    lam_a = lambda_scale(lattice.mesh) * lam.at(lattice.interior_sites)
    kernel = build_chaos_kernel(corr, lam_a, cell['l'])
    report = influence_and_lindeberg_bound(
        [kernel], DisorderLaw(manifest.option('law_omega', DisorderLaw.RADEMACHER.value)),
        DisorderLaw(manifest.option('law_theta', DisorderLaw.GAUSSIAN.value)),
        replicas=manifest.replicas, seed=manifest.seed,
    )
    row = {'mesh': lattice.mesh, 'l': cell['l'], 'max_influence': report.max_influences[0],
           'variance': report.variances[0], 'gap': report.gap, 'gap_stderr': report.gap_stderr,
           'bound': report.bound, 'replicas': report.n_replicas}
    wiener = wiener_chaos_variance_table({lattice.mesh: corr}, {lattice.mesh: lattice}, lam, cell['l'],
                                         replicas=manifest.option('wiener_replicas', 10_000), seed=manifest.seed)
    return tagged('lindeberg', [row]) + tagged('wiener_chaos', wiener), {**row, 'wiener_chaos': wiener[0]}


# besov

def _besov_cells(manifest: ExperimentManifest) -> Iterator[Cell]:
    for a in manifest.meshes:
        yield {'check': 'norm', 'mesh': a}
    for i in range(manifest.option('smooth_pairs', 0)):
        yield {'check': 'smooth', 'pair': i}
    for i in range(manifest.option('rough_pairs', 0)):
        yield {'check': 'rough', 'pair': i}


def _besov_norms(manifest: ExperimentManifest, mesh: float):
    lattice = lattice_at(manifest, mesh)
    run = pure_run(manifest, lattice, algorithm="wolff")
    configs = min(manifest.option('configs', 8), run.n_samples)
    picks = np.linspace(0, run.n_samples - 1, configs).astype(int)
    n_max = manifest.option('n_max', int(round(math.log2(1.0 / lattice.mesh))) + 1)
    alphas = manifest.option('alphas', [-0.2, -0.05])
    basis = build_wavelet_basis(order=manifest.option('order'), alpha=min(alphas))
    rows = []
    for alpha in alphas:
        norms = [besov_holder_norm(piecewise_magnetisation(lattice, run.spins[k]), alpha, n_max, basis)
                 for k in picks]
        values = np.array([n.value for n in norms])
        rows.append({
            'mesh': lattice.mesh, 'alpha': alpha, 'norm': float(values.mean()),
            'stderr': float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0,
            'configs': int(len(values)), 'n_max': n_max,
            'argsup_level': int(np.bincount([n.argsup_level for n in norms]).argmax()),
        })
    return tagged('besov_norm', rows), {'mesh': lattice.mesh, 'norms': {r['alpha']: r['norm'] for r in rows}}


def _gauss_rectangle(fn, x0, x1, y0, y1, panels: int = 8, nodes: int = 32) -> float:
    t, w = leggauss(nodes)
    total = 0.0
    xs = np.linspace(x0, x1, panels + 1)
    ys = np.linspace(y0, y1, panels + 1)
    for i in range(panels):
        px = 0.5 * (xs[i + 1] - xs[i]) * t + 0.5 * (xs[i + 1] + xs[i])
        wx = 0.5 * (xs[i + 1] - xs[i]) * w
        for j in range(panels):
            py = 0.5 * (ys[j + 1] - ys[j]) * t + 0.5 * (ys[j + 1] + ys[j])
            wy = 0.5 * (ys[j + 1] - ys[j]) * w
            gx, gy = np.meshgrid(px, py, indexing='ij')
            total += float(wx @ fn(gx, gy) @ wy)
    return total


def _subdomain_pair(manifest: ExperimentManifest, cell: Cell):
    basis = build_wavelet_basis(order=manifest.option('order'))
    rng = keyed.generator(manifest.seed, f"subdomain-{cell['check']}", cell['pair'])
    n_cut = manifest.option('n_cut', 6)
    if cell['check'] == 'smooth':
        center = tuple(rng.uniform(0.35, 0.65, size=2))
        f = bump_field(center, radius=float(rng.uniform(0.15, 0.3)))
        xa, xb = np.sort(rng.uniform(0.1, 0.9, size=2))
        ya, yb = np.sort(rng.uniform(0.1, 0.9, size=2))
        region = Region.rectangle(xa, xb, ya, yb)
        fx0, fx1, fy0, fy1 = f.box
        lo_x, hi_x, lo_y, hi_y = max(xa, fx0), min(xb, fx1), max(ya, fy0), min(yb, fy1)
        direct = _gauss_rectangle(f, lo_x, hi_x, lo_y, hi_y) if lo_x < hi_x and lo_y < hi_y else 0.0
        alpha = manifest.option('smooth_alpha', -0.5)
        result = integrate_over_subdomain(f, region, alpha, basis, n_cut)
    else:
        f = random_grid_fields(1, manifest.option('rough_cells', 16), rng)[0]
        level = manifest.option('koch_level', 3)
        region = koch_island(level, center=(0.5, 0.5), side=0.5)
        raster = region.indicator(manifest.option('raster_level', 10))
        nx, ny = raster.values.shape
        cx = raster.origin[0] + (np.arange(nx) + 0.5) * raster.cell
        cy = raster.origin[1] + (np.arange(ny) + 0.5) * raster.cell
        gx, gy = np.meshgrid(cx, cy, indexing='ij')
        direct = float(np.sum(f(gx, gy) * raster.values) * raster.cell ** 2)
        alpha = manifest.option('rough_alpha', -0.25)
        dimension = box_dimension(region, range(3, 3 + 2 * level))
        result = integrate_over_subdomain(f, region, alpha, basis, n_cut, dimension=dimension)
    error = abs(result.value - direct)
    row = {
        'check': cell['check'], 'pair': cell['pair'], 'value': result.value, 'direct': direct, 'error': error,
        'relative_error': error / abs(direct) if direct else error, 'tail_bound': result.tail_bound,
        'dimension': result.dimension.estimate if result.dimension else math.nan,
    }
    return tagged('subdomain', [row]), row


@register(ExperimentKind.BESOV, _besov_cells)
def run_besov(manifest: ExperimentManifest, cell: Cell):
    if cell['check'] == 'norm':
        return _besov_norms(manifest, cell['mesh'])
    return _subdomain_pair(manifest, cell)


# singularity

def _singularity_cells(manifest: ExperimentManifest) -> Iterator[Cell]:
    for a in manifest.meshes:
        yield {'check': 'bc', 'mesh': a, 'control': False}
        if manifest.option('lambda_zero_control', True):
            yield {'check': 'bc', 'mesh': a, 'control': True}
    if manifest.option('conditional_cases', 0):
        yield {'check': 'conditional'}


def _conditional_cases(manifest: ExperimentManifest) -> Rows:
    """Single-block conditional factor against its Monte Carlo oracle, and its mean over W."""
    rows = []
    draws = manifest.option('conditional_draws', 200_000)
    for case in range(manifest.option('conditional_cases', 0)):
        rng = keyed.generator(manifest.seed, "conditional-case", case)
        sites = int(rng.integers(2, 6))
        mesh = float(rng.choice([1.0 / 4, 1.0 / 8, 1.0 / 16]))
        lam_x = rng.uniform(0.5, 1.5, size=sites)
        spins = rng.choice([-1.0, 1.0], size=sites)
        lam_mass = float(np.sum((mesh * lam_x) ** 2))
        phi = mesh ** (15.0 / 8.0) * float(np.sum(lam_x ** 2 * spins))
        w_value = float(rng.normal(0.0, math.sqrt(lam_mass)))
        blocks = BlockObservables(1, np.array([[phi]]), np.array([[w_value]]), np.array([[lam_mass]]),
                                  np.array([[sites]]), mesh)
        factor = conditional_rn_factor(blocks)
        oracle = conditional_rn_monte_carlo(spins, lam_x, mesh, w_value, draws, seed=manifest.seed + case)
        ws = rng.normal(0.0, math.sqrt(lam_mass), size=draws)
        averaged = conditional_rn_factor(BlockObservables(
            1, np.full((draws, 1, 1), phi), ws.reshape(draws, 1, 1), np.array([[lam_mass]]),
            np.array([[sites]]), mesh))
        z = (factor - oracle['mean']) / oracle['stderr'] if oracle['stderr'] > 0 else 0.0
        rows.append({'case': case, 'factor': factor, 'mc_mean': oracle['mean'], 'mc_stderr': oracle['stderr'],
                     'z_score': z, 'w_mean': float(np.mean(averaged)),
                     'w_stderr': float(np.std(averaged, ddof=1) / math.sqrt(draws))})
    return rows


@register(ExperimentKind.SINGULARITY, _singularity_cells)
def run_singularity(manifest: ExperimentManifest, cell: Cell):
    if cell['check'] == 'conditional':
        rows = _conditional_cases(manifest)
        return tagged('conditional', rows), {'cases': len(rows),
                                             'max_abs_z': max((abs(r['z_score']) for r in rows), default=0.0)}

    control = bool(cell['control'])
    lattice = lattice_at(manifest, cell['mesh'])
    lam = constant(0.0) if control else manifest.profiles()['lam']
    run = pure_run(manifest, lattice)
    draws = draw_disordered(lattice, lam, manifest.replicas, manifest.option('replica_sweeps', 200),
                            manifest.seed, per_replica=manifest.option('per_replica', 1),
                            burn_in=manifest.option('replica_burn_in'))
    coordinates = {'mesh': lattice.mesh, 'control': control}
    rows: Rows = []
    summary: Dict[str, Any] = {**coordinates, 'bc': {}, 'blocks': {}}
    grad_sup = lambda_gradient_sup(lam)
    for N in sorted(manifest.Ns):
        grid = build_block_grid(lattice, N)
        samples = feature_samples(run, draws, lam, grid, seed=manifest.seed)
        pure, disordered = samples.features()
        curve = bc_curve(pure, disordered, N, manifest.ms, seed=manifest.seed)
        rows += tagged('bc', curve, **coordinates)
        summary['bc'][str(N)] = {str(r['m']): r['bc'] for r in curve}
        diagnostics = {'resolution': choose_resolution(pure, N, manifest.ms)}
        if not control:
            ratio = block_noise_variance_ratio(samples.disordered.w, samples.disordered.lam_mass)
            smeared = smeared_block_magnetisation(run.spins[-1], lam, grid)
            diagnostics.update({
                'noise_variance_ratio': float(np.nanmean(ratio)),
                'smeared_gap': float(np.max(np.abs(samples.pure.phi[-1] - smeared))),
                'smeared_gap_bound': smeared_gap_bound(lattice.mesh, N, lam.sup(lattice.spec), grad_sup),
            })
        summary['blocks'][str(N)] = diagnostics
        if N >= 4:
            census = disjoint_annuli_census(run.spins[-1], grid)
            center = circuit_probability(run.spins[-manifest.option('circuit_samples', 200):], grid,
                                         (N // 2, N // 2))
            row = {**census.to_dict(), 'center_probability': center['probability'],
                   'center_stderr': center['stderr']}
            rows += tagged('annuli', [row], mesh=lattice.mesh)

    if not control:
        summary['epsilon'] = epsilon_report(lattice, lam, run, replicas=manifest.option('epsilon_replicas', 200),
                                            seed=manifest.seed)
        rows += tagged('divergence', coarse_magnetisation_divergence(run, lam, manifest.Ns, lattice),
                       mesh=lattice.mesh)
        if manifest.option('certificate', True):
            for N in sorted(manifest.Ns):
                for m in sorted(manifest.ms):
                    certificate = fractional_moment_certificate(
                        lattice, lam, N, m, run, replicas=manifest.option('certificate_replicas', 1000),
                        seed=manifest.seed)
                    row = certificate.to_dict()
                    row.pop('rho', None)
                    rows += tagged('certificate', [row])
    return rows, summary


# moments

def _moment_cells(manifest: ExperimentManifest) -> Iterator[Cell]:
    for a in manifest.meshes:
        for check in manifest.option('checks', ['positive', 'tail', 'paley-zygmund', 'overlap']):
            yield {'check': check, 'mesh': a}
    if manifest.option('stability_meshes'):
        yield {'check': 'stability'}


@register(ExperimentKind.MOMENTS, _moment_cells)
def run_moments(manifest: ExperimentManifest, cell: Cell):
    profiles = manifest.profiles()
    lam, h = profiles['lam'], profiles['h']
    law = manifest.law
    if cell['check'] == 'stability':
        table = second_moment_stability(lam, h, manifest.option('stability_meshes'),
                                        replicas=manifest.replicas, sweeps=manifest.sweeps, seed=manifest.seed)
        rows = table.to_dict('records')
        return tagged('second_moment', rows), {'stable': bool(table['stable'].all())}

    lattice = lattice_at(manifest, cell['mesh'])
    coordinates = {'mesh': lattice.mesh}
    if cell['check'] == 'positive':
        rows: Rows = []
        for p in manifest.option('ps', [2.0, 4.0]):
            report = positive_moment_bound_check(lattice, lam, h, p=p, replicas=manifest.replicas, law=law,
                                                 seed=manifest.seed)
            rows += tagged('positive_moments', [report.to_dict()])
        ensemble = build_ensemble(lattice, lam, h)
        log_z = replica_log_partitions(ensemble, manifest.replicas, law, manifest.seed, purpose="lyapunov")
        rows += tagged('lyapunov', lyapunov_table(log_z, manifest.option('ps', [2.0, 4.0]) + [1.0],
                                                  manifest.seed).to_dict('records'), **coordinates)
        inverse = inverse_moment(log_z, seed=manifest.seed, mesh=lattice.mesh)
        rows += tagged('negative_moments', [{**inverse.to_dict(), **jensen_check(log_z)}])
        holds = all(r['holds'] is not False for r in rows if r['table'] == 'positive_moments')
        return rows, {**coordinates, 'holds': holds}
    if cell['check'] == 'tail':
        tail = negative_tail_check(lattice, lam, h, replicas=manifest.replicas, law=law, seed=manifest.seed)
        rows = tagged('tail_curve', tail.curve.to_dict('records'), **coordinates)
        rows += tagged('tail_fit', [tail.to_dict()])
        return rows, tail.to_dict()
    if cell['check'] == 'paley-zygmund':
        result = paley_zygmund_check(lattice, lam, h, replicas=manifest.replicas, law=law, seed=manifest.seed)
        return tagged('paley_zygmund', [result]), result
    if cell['check'] == 'overlap':
        omega = sample_disorder(lattice, law, manifest.seed)
        result = overlap_gradient_estimate(lattice, lam, h, omega, chains=manifest.option('chains', 2),
                                           sweeps=manifest.sweeps, seed=manifest.seed)
        return tagged('overlap', [result]), result
    raise ValueError(f"unknown moments check {cell['check']!r}")


# tanh-table

def _tanh_cells(manifest: ExperimentManifest) -> Iterator[Cell]:
    yield {'law': manifest.law.value}


@register(ExperimentKind.TANH_TABLE, _tanh_cells)
def run_tanh_table(manifest: ExperimentManifest, cell: Cell):
    profiles = manifest.profiles()
    table = tanh_moment_table(DisorderLaw(cell['law']), manifest.meshes, profiles['lam'], profiles['h'],
                              profiles['phi'], n_samples=manifest.option('samples'), seed=manifest.seed)
    fits = []
    for moment in manifest.option('fit_moments', ['re', 're2']):
        try:
            exponent = fit_residual_exponent(table, moment)
        except ValueError as e:
            logger.warning(f"No residual fit for {moment}: {e}")
            exponent = math.nan
        fits.append({'moment': moment, 'exponent': exponent})
    rows = tagged('tanh_table', table.to_dict('records')) + tagged('tanh_fit', fits)
    return rows, {f['moment']: f['exponent'] for f in fits}

"""
Tests for block observables, Bhattacharyya coefficients, the conditional factor,
the tilt certificate and plus circuits.
"""
import dataclasses
import math
import sys
import tempfile
from pathlib import Path

import numpy as np
from scipy import stats

# Add parent directory to path
sys.path.append(str(Path(__file__).parent.parent))

from src.disorder.field import lambda_scale
from src.disorder.laws import DisorderLaw
from src.disorder.profiles import bump, constant
from src.errors import EmptySamples, NonGaussianLaw
from src.ising.model import ModelParams
from src.ising.sampler import sample_gibbs
from src.lattice.blocks import build_block_grid
from src.lattice.domain import unit_square_lattice
from src.singularity.blocks import (
    block_noise_variance_ratio, block_observables, dyadic_discretize, lambda_gradient_sup,
    smeared_block_magnetisation, smeared_gap_bound,
)
from src.singularity.certificate import (
    MIN_TILT, fractional_moment_certificate, gaussian_tail_bound, tilt_schedule, tilt_statistic,
)
from src.singularity.circuits import UnionFind, annulus_plus_circuit, circuit_probability
from src.singularity.conditional import (
    conditional_gaussian_law, conditional_rn_factor, conditional_rn_monte_carlo,
    radon_nikodym_check, tilted_disorder_sampler,
)
from src.singularity.divergence import coarse_magnetisation_divergence
from src.singularity.histogram import (
    EmpiricalJointLaw, bc_curve, bhattacharyya_coefficient, bhattacharyya_fractional_moment, choose_resolution,
)
from src.singularity.sampling import PURE_STREAM, draw_disordered, epsilon_report, feature_samples


def _single_block(spins, w):
    lattice = unit_square_lattice(4)
    grid = build_block_grid(lattice, 1)
    blocks = block_observables(spins, None, constant(1.0), grid)
    return lattice, blocks, dataclasses.replace(blocks, w=np.asarray(w, dtype=float))


def test_dyadic_discretize():
    values = dyadic_discretize(np.array([0.3, -0.3, 1.0]), 2)
    assert np.allclose(values, [0.25, -0.5, 1.0])
    assert np.allclose(dyadic_discretize(np.array([0.7]), 0), [0.0])


def test_bhattacharyya_two_point():
    half = EmpiricalJointLaw.from_keys([[0, 0], [1, 0]], m=0, N=1)
    point = EmpiricalJointLaw.from_keys([[0, 0], [0, 0]], m=0, N=1)
    assert np.isclose(bhattacharyya_coefficient(half, point), math.sqrt(0.5))
    assert np.isclose(bhattacharyya_coefficient(half, half), 1.0)
    disjoint = EmpiricalJointLaw.from_keys([[5, 5]], m=0, N=1)
    assert bhattacharyya_coefficient(point, disjoint) == 0.0


def test_histogram_save_load():
    rng = np.random.default_rng(3)
    law = EmpiricalJointLaw.from_samples(rng.standard_normal((200, 8)), m=1, N=2)
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "law.npz"
        law.save(path)
        loaded = EmpiricalJointLaw.load(path)
    assert loaded.m == 1 and loaded.N == 2
    assert np.array_equal(loaded.keys, law.keys)
    assert np.array_equal(loaded.counts, law.counts)
    assert loaded.total == 200


def test_pushforwards_do_not_decrease_bc():
    rng = np.random.default_rng(11)
    pure = rng.standard_normal((2000, 8))
    disordered = rng.standard_normal((2000, 8)) + 0.3
    rows = bc_curve(pure, disordered, N=2, ms=[1, 2, 3], resamples=50, seed=5)
    assert [r['m'] for r in rows] == [1, 2, 3]
    for row in rows:
        assert 0.0 <= row['bc'] <= 1.0
        assert row['ci_low'] <= row['bc'] <= row['ci_high']
        assert row['coarsen_monotone'] and row['merge_monotone']
    # finer bins can only separate the laws further
    assert rows[-1]['bc'] <= rows[0]['bc'] + 1e-12


def test_conditional_gaussian_law():
    law = conditional_gaussian_law([1.0, 3.0], total=2.0)
    assert np.allclose(law.means, [0.5, 1.5])
    assert np.isclose(law.covariance[0, 0], 0.75)
    assert np.isclose(law.covariance[0, 1], -0.75)
    draws = law.sample(np.random.default_rng(0), 20000)
    assert np.allclose(draws.sum(axis=1), 2.0)
    assert abs(np.var(draws[:, 0]) - 0.75) < 0.05
    try:
        conditional_gaussian_law([1.0, 0.0], total=1.0)
        assert False, "zero variance must be rejected"
    except ValueError:
        pass


def test_conditional_factor_matches_brute_force():
    spins = np.array([1, 1, -1, 1, 1, 1, -1, 1, 1])
    lattice, _, blocks = _single_block(spins, [[0.4]])
    factor = conditional_rn_factor(blocks)
    lam_x = constant(1.0).at(lattice.interior_sites)
    brute = conditional_rn_monte_carlo(spins, lam_x, lattice.mesh, 0.4, draws=200000, seed=2)
    assert abs(brute['mean'] - factor) < 4 * brute['stderr'] + 1e-9


def test_conditional_factor_has_unit_mean():
    spins = np.ones(9, dtype=int)
    _, blocks, _ = _single_block(spins, [[0.0]])
    draws = 100000
    lam_mass = blocks.lam_mass[0, 0]
    w = np.random.default_rng(4).normal(scale=math.sqrt(lam_mass), size=(draws, 1, 1))
    phi = np.broadcast_to(blocks.phi, (draws, 1, 1))
    factors = conditional_rn_factor(dataclasses.replace(blocks, phi=phi, w=w))
    assert factors.shape == (draws,)
    stderr = factors.std(ddof=1) / math.sqrt(draws)
    assert abs(factors.mean() - 1.0) < 4 * stderr


def test_tilted_law_is_gaussian_only():
    try:
        tilted_disorder_sampler(np.ones(4), np.ones(4), 0, law=DisorderLaw.RADEMACHER)
        assert False, "tilting Rademacher disorder must fail"
    except NonGaussianLaw:
        pass
    omega = tilted_disorder_sampler(np.ones(4), np.full(4, 0.5), 1, replicas=50000)
    assert np.allclose(omega.mean(axis=0), 0.5, atol=0.03)


def test_radon_nikodym_reweighting():
    spins = np.array([1, -1, 1, 1])
    lam_a = np.full(4, 0.5)
    check = radon_nikodym_check(spins, lam_a, 1.0, lambda om: om[:, 1], draws=100000, seed=9)
    spread = math.hypot(check['importance_stderr'], check['tilted_stderr'])
    assert abs(check['importance'] - check['tilted']) < 5 * spread
    assert abs(check['tilted'] + 0.5) < 5 * check['tilted_stderr']


def test_tilt_schedule():
    assert tilt_schedule(0.5, 1) == MIN_TILT
    expected = math.log(math.log(1024.0)) + math.log(4)
    assert np.isclose(tilt_schedule(2.0 ** -10, 4), expected)


def test_gaussian_tail_bound():
    assert gaussian_tail_bound(-1.0, 1.0) == 1.0
    assert gaussian_tail_bound(1.0, 0.0) == 0.0
    for t in (1.0, 2.0, 4.0):
        assert gaussian_tail_bound(t, 1.0) >= stats.norm.sf(t)
    assert gaussian_tail_bound(4.0, 1.0) < gaussian_tail_bound(2.0, 1.0)


def test_tilt_statistic_without_rounding():
    lattice = unit_square_lattice(8)
    grid = build_block_grid(lattice, 2)
    rng = np.random.default_rng(6)
    omega = rng.standard_normal(lattice.n_sites)
    lam_x = constant(1.0).at(lattice.interior_sites)
    rho = np.array([[1, -1], [-1, 1]])
    lam_a = lambda_scale(lattice.mesh) * lam_x
    expected = float(np.sum(rho * grid.block_sums(lam_a * omega)))
    assert np.isclose(tilt_statistic(omega, rho, lam_x, grid), expected)


def test_certificate_on_small_lattice():
    lattice = unit_square_lattice(4)
    run = sample_gibbs(lattice, ModelParams(), 2000, seed=0)
    cert = fractional_moment_certificate(lattice, constant(1.0), 2, 2, run, replicas=200, seed=1)
    assert math.isfinite(cert.product_bound) and cert.product_bound > 0
    assert cert.inverse_f_estimate >= 1.0
    assert 0.0 < cert.tilted_f_estimate <= 1.0
    assert cert.inverse_f_bound >= 1.0
    summary = cert.to_dict()
    assert summary['N'] == 2 and summary['m'] == 2
    assert len(summary['rho']) == 2


def test_certificate_without_disorder():
    lattice = unit_square_lattice(4)
    run = sample_gibbs(lattice, ModelParams(), 500, seed=0)
    cert = fractional_moment_certificate(lattice, constant(0.0), 2, 1, run, replicas=50, seed=1)
    assert np.isclose(cert.product_bound, 1.0)
    assert cert.inverse_f_estimate == 1.0


def test_fractional_moment_estimate():
    rng = np.random.default_rng(12)
    samples = rng.standard_normal((500, 2))
    same = bhattacharyya_fractional_moment(samples, samples, m=2, N=1, resamples=100, seed=1)
    assert np.isclose(same.value, 1.0)
    shifted = bhattacharyya_fractional_moment(samples, samples + 3.0, m=2, N=1, resamples=100, seed=1)
    assert shifted.value < same.value
    assert shifted.lower <= shifted.value <= shifted.upper
    try:
        bhattacharyya_fractional_moment(np.empty((0, 2)), samples, m=2, N=1)
        assert False, "empty samples must fail"
    except EmptySamples:
        pass


def test_resolution_choice():
    rng = np.random.default_rng(13)
    assert choose_resolution(np.zeros((100, 2)), 1, [1, 3, 5], min_occupancy=20) == 5
    spread = rng.uniform(0.0, 1.0, size=(200, 2))
    assert choose_resolution(spread, 1, [1, 6], min_occupancy=20) == 1


def test_block_noise_variance():
    lattice = unit_square_lattice(8)
    grid = build_block_grid(lattice, 2)
    noise = np.random.default_rng(14).standard_normal((4000, lattice.n_sites))
    blocks = block_observables(np.ones((4000, lattice.n_sites)), noise, constant(1.0), grid)
    ratio = block_noise_variance_ratio(blocks.w, blocks.lam_mass)
    assert np.allclose(ratio, 1.0, atol=0.1)
    assert np.isnan(block_noise_variance_ratio(blocks.w, np.zeros((2, 2)))).all()


def test_smeared_gap_within_bound():
    lattice = unit_square_lattice(16)
    lam = bump(radius=0.5, amplitude=1.0, value=1.0)
    spins = np.random.default_rng(15).choice([-1, 1], size=lattice.n_sites)
    for N in (1, 2, 4):
        grid = build_block_grid(lattice, N)
        atomic = block_observables(spins, None, lam, grid).phi
        smeared = smeared_block_magnetisation(spins, lam, grid)
        bound = smeared_gap_bound(lattice.mesh, N, lam.sup(lattice.spec), lambda_gradient_sup(lam))
        assert np.max(np.abs(atomic - smeared)) <= bound


def test_epsilon_report():
    lattice = unit_square_lattice(4)
    run = sample_gibbs(lattice, ModelParams(), 2000, seed=3)
    report = epsilon_report(lattice, constant(1.0), run, replicas=100, seed=4)
    assert report['epsilon'] == report['p5']
    assert 0.0 < report['p1'] <= report['epsilon'] <= report['p50']
    assert report['replicas'] == 100


def test_pure_and_disordered_chains_are_independent():
    lattice = unit_square_lattice(8)
    draws = draw_disordered(lattice, constant(0.0), 9, 200, seed=3, per_replica=50)
    pure = sample_gibbs(lattice, ModelParams(), 200, 3, replica=8, stream=PURE_STREAM)
    again = sample_gibbs(lattice, ModelParams(), 200, 3, replica=8, stream=PURE_STREAM)
    assert np.array_equal(pure.spins, again.spins)
    tail = draws.spins[-50:]
    assert not np.array_equal(tail, pure.spins[-len(tail):])


def test_divergence_on_fixed_configurations():
    lattice = unit_square_lattice(8)
    weight = (1 / 8) ** (15 / 8)
    plus = np.ones((2, lattice.n_sites), dtype=np.int8)
    rows = coarse_magnetisation_divergence(plus, constant(1.0), [1, 2, 4], lattice)
    assert [r['N'] for r in rows] == [1, 2, 4]
    for row in rows:
        assert np.isclose(row['mean'], lattice.n_sites * weight)
        assert row['stderr'] == 0.0
    assert rows[0]['monotone'] and not rows[1]['monotone']

    spins = np.random.default_rng(5).choice(np.array([-1, 1], dtype=np.int8), size=(30, lattice.n_sites))
    rows = coarse_magnetisation_divergence(spins, constant(0.5), [1], lattice)
    expected = np.abs(spins.sum(axis=1) * weight * 0.25).mean()
    assert np.isclose(rows[0]['mean'], expected)


def test_divergence_needs_separated_growth():
    lattice = unit_square_lattice(8)
    right = lattice.interior_sites[:, 0] >= 0.5
    split = np.where(right, -1, 1).astype(np.int8)
    plus = np.ones(lattice.n_sites, dtype=np.int8)

    noisy = coarse_magnetisation_divergence(np.stack([plus, split]), constant(1.0), [1, 2], lattice)
    assert noisy[1]['mean'] > noisy[0]['mean']
    assert not noisy[1]['monotone']

    resolved = coarse_magnetisation_divergence(np.stack([plus, split] * 50), constant(1.0), [1, 2], lattice)
    assert resolved[1]['monotone']


def test_control_without_disorder_has_unit_bc():
    lattice = unit_square_lattice(4)
    lam = constant(0.0)
    run = sample_gibbs(lattice, ModelParams(), 500, seed=1, burn_in=10, stream=PURE_STREAM)
    draws = draw_disordered(lattice, lam, 4, 100, seed=2, per_replica=20, burn_in=10)
    grid = build_block_grid(lattice, 2)
    pure, disordered = feature_samples(run, draws, lam, grid, seed=1).features()
    assert np.all(pure == 0) and np.all(disordered == 0)
    for row in bc_curve(pure, disordered, 2, [0, 1], resamples=50, seed=1):
        assert np.isclose(row['bc'], 1.0)
        assert row['ci_low'] <= 1.0 + 1e-12 and row['ci_high'] >= 1.0 - 1e-12


def test_union_find():
    uf = UnionFind(5)
    assert uf.union(0, 1) and uf.union(3, 4)
    assert not uf.union(1, 0)
    assert uf.connected(0, 1) and not uf.connected(1, 3)
    assert uf.num_components == 3
    uf.union(1, 4)
    assert uf.connected(0, 3)
    assert uf.num_components == 2


def test_plus_circuits():
    lattice = unit_square_lattice(32)
    grid = build_block_grid(lattice, 8)
    block = (4, 4)
    spins = np.ones(lattice.n_sites, dtype=int)
    assert annulus_plus_circuit(spins, grid, block)

    annulus = grid.annulus(*block)
    points = lattice.interior_sites
    inner = annulus.inner_sites
    row_y = points[inner[0], 1]
    inner_left = points[inner, 0].min()
    ring = annulus.ring_sites
    path = ring[np.isclose(points[ring, 1], row_y) & (points[ring, 0] < inner_left)]
    assert len(path) > 0

    lone = spins.copy()
    lone[path[0]] = -1
    assert annulus_plus_circuit(lone, grid, block)

    crossed = spins.copy()
    crossed[path] = -1
    assert not annulus_plus_circuit(crossed, grid, block)

    samples = np.stack([spins, crossed, spins, lone])
    probability = circuit_probability(samples, grid, block)
    assert probability['probability'] == 0.75 and probability['samples'] == 4


def main():
    """Run all singularity tests."""
    print("=" * 80)
    print("Singularity Tests")
    print("=" * 80)

    tests = [
        test_dyadic_discretize, test_bhattacharyya_two_point, test_histogram_save_load,
        test_pushforwards_do_not_decrease_bc, test_conditional_gaussian_law,
        test_conditional_factor_matches_brute_force, test_conditional_factor_has_unit_mean,
        test_tilted_law_is_gaussian_only, test_radon_nikodym_reweighting, test_tilt_schedule,
        test_gaussian_tail_bound, test_tilt_statistic_without_rounding, test_certificate_on_small_lattice,
        test_certificate_without_disorder, test_fractional_moment_estimate, test_resolution_choice,
        test_block_noise_variance, test_smeared_gap_within_bound, test_epsilon_report,
        test_pure_and_disordered_chains_are_independent, test_divergence_on_fixed_configurations,
        test_divergence_needs_separated_growth, test_control_without_disorder_has_unit_bc, test_union_find,
        test_plus_circuits,
    ]
    failed = []
    for test in tests:
        try:
            test()
            print(f"✓ {test.__name__}")
        except Exception as e:
            print(f"✗ {test.__name__}: {e}")
            failed.append(test.__name__)

    print("=" * 80)
    if failed:
        print(f"❌ {len(failed)} of {len(tests)} tests failed")
        return 1
    print(f"✓ All {len(tests)} tests passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())

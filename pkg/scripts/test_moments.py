"""
Tests for partition-function moments, left tails, Paley-Zygmund and the replica overlap.
"""
import math
import sys
from pathlib import Path

import numpy as np

# Add parent directory to path
sys.path.append(str(Path(__file__).parent.parent))

from src.disorder.laws import DisorderLaw
from src.disorder.profiles import constant
from src.ising.exact import exact_correlations
from src.ising.model import ModelParams
from src.lattice.domain import unit_square_lattice
from src.moments.ensemble import MomentReport, build_ensemble, log_mean_exp, replica_log_partitions
from src.moments.hypercontractivity import (
    hypercontractivity_constant, lyapunov_table, positive_moment_bound_check,
    second_moment_stability, standardised_kernel, tanh_site_moments,
)
from src.moments.overlap import overlap, overlap_gradient_estimate
from src.moments.tails import inverse_moment, jensen_check, negative_tail_check, paley_zygmund_check

LAM = constant(1.0)


def _small_lattice():
    # 2 x 2 interior sites
    return unit_square_lattice(3)


def test_zero_disorder_partition_is_one():
    ensemble = build_ensemble(_small_lattice(), constant(0.0))
    assert ensemble.exact
    log_z = replica_log_partitions(ensemble, 10, seed=1)
    assert np.allclose(log_z, 0.0, atol=1e-12)


def test_first_moment():
    ensemble = build_ensemble(_small_lattice(), LAM)
    z = np.exp(replica_log_partitions(ensemble, 50000, seed=2))
    expected = ensemble.theta * math.exp(0.5 * np.sum(ensemble.lam_a ** 2))
    stderr = z.std(ddof=1) / math.sqrt(len(z))
    assert abs(z.mean() - expected) < 5 * stderr


def test_kernel_reproduces_partition_function():
    lattice = _small_lattice()
    corr = exact_correlations(lattice, ModelParams())
    mu, vartheta = tanh_site_moments(lattice, LAM)
    psi = standardised_kernel(corr.dense, mu, vartheta)
    ensemble = build_ensemble(lattice, LAM)
    n = lattice.n_sites
    bits = (np.arange(1 << n)[:, None] >> np.arange(n)) & 1
    rng = np.random.default_rng(7)
    for _ in range(5):
        omega = rng.standard_normal((1, n))
        xi = ensemble.fields(omega)[0]
        eta = (np.tanh(xi) - mu) / vartheta
        from_kernel = float(psi @ np.prod(np.where(bits == 1, eta, 1.0), axis=1))
        log_psi = ensemble.log_partition(omega)[0] - math.log(ensemble.theta) - np.sum(np.log(np.cosh(xi)))
        assert np.isclose(from_kernel, math.exp(log_psi), rtol=1e-10)


def test_kernel_without_centring_is_correlations():
    corr = np.array([1.0, 0.4, 0.3, 0.2])
    psi = standardised_kernel(corr, np.zeros(2), np.ones(2))
    assert np.allclose(psi, corr)
    shifted = standardised_kernel(np.array([1.0, 0.5]), np.array([0.2]), np.array([0.5]))
    assert np.allclose(shifted, [1.1, 0.25])
    try:
        standardised_kernel(np.ones(3), np.zeros(2), np.ones(2))
        assert False, "wrong kernel length must fail"
    except ValueError:
        pass


def test_hypercontractivity_constant():
    assert hypercontractivity_constant(2.0) == 1.0
    assert np.isclose(hypercontractivity_constant(4.0, DisorderLaw.RADEMACHER), math.sqrt(3.0))
    assert hypercontractivity_constant(4.0, DisorderLaw.UNIFORM, eta_norm_p=1.2) >= 2 * math.sqrt(3.0)
    try:
        hypercontractivity_constant(1.5)
        assert False, "p below 2 must fail"
    except ValueError:
        pass


def test_second_moment_equals_kernel_sum():
    report = positive_moment_bound_check(_small_lattice(), LAM, p=2.0, replicas=40000, seed=3)
    assert report.extras['c_p'] == 1.0
    assert abs(report.empirical / report.bound - 1.0) < 0.05
    assert report.holds


def test_fourth_moment_bound():
    report = positive_moment_bound_check(_small_lattice(), LAM, p=4.0, replicas=40000, seed=4)
    assert report.holds
    summary = report.to_dict()
    assert summary['ci_low'] <= summary['empirical'] <= summary['ci_high']


def test_moment_bound_compares_the_estimate():
    def report(empirical, lower, bound):
        return MomentReport(p=2.0, empirical=empirical, lower=lower, upper=empirical + 0.1, bound=bound,
                            replicas=100, mesh=0.5, extras={'tolerance': 0.05})

    assert report(1.04, 0.9, 1.0).holds
    assert not report(1.2, 0.9, 1.0).holds
    assert report(1.2, 0.9, None).holds is None
    assert report(1.2, 0.9, 1.0).to_dict()['holds'] is False


def test_lyapunov_ordering():
    log_z = np.random.default_rng(5).normal(scale=0.4, size=5000)
    table = lyapunov_table(log_z, [4, 1, 2], seed=5)
    assert list(table['p']) == [1, 2, 4]
    assert table['monotone'].all()
    assert np.all(np.diff(table['norm']) >= 0)


def test_second_moment_stability_small_meshes():
    table = second_moment_stability(LAM, inverse_meshes=(3, 4), replicas=2000, seed=6, max_ratio=10.0)
    assert list(table['n_sites']) == [4, 9]
    assert table['exact'].all()
    assert table['stable'].all()
    assert np.all(table['second_moment'] >= table['first_moment'] ** 2)


def test_jensen_and_inverse_moment():
    ensemble = build_ensemble(_small_lattice(), LAM)
    log_z = replica_log_partitions(ensemble, 20000, seed=8)
    assert jensen_check(log_z)['jensen_holds']
    report = inverse_moment(log_z, checkpoints=(2000, 20000), seed=8)
    assert report.empirical >= math.exp(-float(log_mean_exp(log_z)))
    assert report.lower <= report.empirical <= report.upper
    assert 'inverse_at_2000' in report.extras


def test_degenerate_tail():
    tail = negative_tail_check(_small_lattice(), constant(0.0), replicas=500, seed=1)
    assert tail.degenerate
    assert tail.consistent is None


def test_tail_curve():
    tail = negative_tail_check(_small_lattice(), LAM, replicas=20000, seed=2)
    assert not tail.degenerate
    assert tail.gamma == 2.0
    assert tail.slope is not None
    assert np.all(np.diff(tail.curve['probability']) <= 0)
    assert tail.extras['jensen_holds'] and tail.extras['finite']


def test_paley_zygmund_scale_invariance():
    first = paley_zygmund_check(_small_lattice(), LAM, replicas=20000, seed=9)
    scaled = paley_zygmund_check(_small_lattice(), LAM, replicas=20000, seed=9, scale=10.0)
    assert first['holds']
    assert first['probability'] == scaled['probability']
    assert np.isclose(first['bound'], scaled['bound'])
    assert first['c2'] >= first['c1'] ** 2


def test_overlap_ceiling():
    lam_a = np.array([0.5, 1.0, 0.25])
    sigma = np.array([1, -1, 1])
    assert np.isclose(overlap(sigma, sigma, lam_a), np.sum(lam_a ** 2))
    assert np.isclose(overlap(sigma, -sigma, lam_a), -np.sum(lam_a ** 2))


def test_overlap_matches_exact_gradient():
    lattice = _small_lattice()
    omega = np.random.default_rng(10).standard_normal(lattice.n_sites)
    result = overlap_gradient_estimate(lattice, LAM, None, omega, chains=2, sweeps=40000, seed=11)
    assert 0.0 <= result['exact'] <= result['ceiling']
    assert abs(result['z_score']) < 5
    zero = overlap_gradient_estimate(lattice, constant(0.0), None, omega)
    assert zero['estimate'] == 0.0 and zero['exact'] == 0.0


def main():
    """Run all moment tests."""
    print("=" * 80)
    print("Moment Tests")
    print("=" * 80)

    tests = [
        test_zero_disorder_partition_is_one, test_first_moment, test_kernel_reproduces_partition_function,
        test_kernel_without_centring_is_correlations, test_hypercontractivity_constant,
        test_second_moment_equals_kernel_sum, test_fourth_moment_bound,
        test_moment_bound_compares_the_estimate, test_lyapunov_ordering,
        test_second_moment_stability_small_meshes, test_jensen_and_inverse_moment, test_degenerate_tail,
        test_tail_curve, test_paley_zygmund_scale_invariance, test_overlap_ceiling,
        test_overlap_matches_exact_gradient,
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

"""
Tests for the high-temperature expansion, chaos kernels and Lindeberg swaps.
"""
import sys
from pathlib import Path

import numpy as np

# Add parent directory to path
sys.path.append(str(Path(__file__).parent.parent))

from src.chaos.expansion import (evaluate_high_temperature_expansion, transform_chaos, truncation_error,
                                 wiener_chaos_partition, wiener_chaos_variance_table)
from src.chaos.kernel import build_chaos_kernel, correlation_kernel
from src.chaos.lindeberg import influence_and_lindeberg_bound, lindeberg_swap_path
from src.chaos.tanh_table import fit_residual_exponent, tanh_moment_table
from src.disorder.field import build_external_field, lambda_scale
from src.disorder.laws import DisorderLaw
from src.disorder.profiles import constant
from src.errors import DegreeExceeded, NonPositiveLambda
from src.ising.exact import exact_correlations, exact_partition
from src.ising.model import ModelParams, theta_a
from src.lattice.domain import rectangle_lattice


def test_high_temperature_identity():
    rng = np.random.default_rng(0)
    for width, height in [(2, 2), (3, 3), (4, 4)]:
        lattice = rectangle_lattice(width, height, mesh=0.25)
        corr = exact_correlations(lattice, ModelParams())
        for _ in range(3):
            n = lattice.n_sites
            field = rng.normal(0, 0.5, n) + 1j * rng.normal(0, 0.3, n)
            params = ModelParams(field=field, lam_l2_squared=1.0)
            expansion = evaluate_high_temperature_expansion(lattice, params, corr)
            direct = theta_a(lattice.mesh, 1.0) * exact_partition(lattice, params)
            assert abs(expansion - direct) <= 1e-10 * abs(direct)


def test_kernel_structure():
    lattice = rectangle_lattice(3, 1, mesh=0.25)
    corr = exact_correlations(lattice, ModelParams())
    kernel = build_chaos_kernel(corr, 0.5, 3)
    assert np.isclose(kernel.constant, 1.0)
    assert np.isclose(kernel[(0,)], 0.5 * corr[(0,)])
    assert np.isclose(kernel[(0, 2)], 0.25 * corr[(0, 2)])
    assert np.isclose(kernel.influence().sum(),
                      sum(len(s) * abs(v) ** 2 for s, v in kernel.items() if s))
    truncated = kernel.restrict(1)
    assert np.isclose(truncated.variance() + kernel.tail_mass(1), kernel.variance())
    try:
        kernel.restrict(4)
        assert False, "degree above the kernel must fail"
    except DegreeExceeded:
        pass


def test_truncate_rung_recovers_partition():
    lattice = rectangle_lattice(2, 2, mesh=0.25)
    corr = exact_correlations(lattice, ModelParams())
    lam_a = lambda_scale(lattice.mesh)
    kernel = build_chaos_kernel(corr, lam_a, lattice.n_sites)
    omega = np.array([0.3, -1.2, 0.8, 2.0])
    field = build_external_field(lattice, constant(1.0), constant(1.0), omega=omega)
    value = transform_chaos(kernel, "truncate", field)(omega).value
    z = exact_partition(lattice, ModelParams(field=field.xi))
    assert np.isclose(value * np.prod(np.cosh(field.xi)), z, rtol=1e-12)


def test_rungs_need_positive_lambda():
    lattice = rectangle_lattice(2, 2, mesh=0.25)
    kernel = correlation_kernel(exact_correlations(lattice, ModelParams()), 2)
    field = build_external_field(lattice, constant(0.0))
    try:
        transform_chaos(kernel, "linearize", field)
        assert False, "zero lambda must fail"
    except NonPositiveLambda:
        pass


def test_truncation_error_tracks_tail_mass():
    lattice = rectangle_lattice(3, 3, mesh=0.25)
    corr = exact_correlations(lattice, ModelParams())
    kernel = build_chaos_kernel(corr, lambda_scale(lattice.mesh), lattice.n_sites)
    field = build_external_field(lattice, constant(1.0))
    rows = truncation_error(kernel, field, [1, 2, 3], replicas=5000, seed=4)
    errors = [r['mc_error'] for r in rows]
    assert errors[0] >= errors[1] >= errors[2]


def test_lindeberg_same_law_has_no_gap():
    lattice = rectangle_lattice(3, 3, mesh=0.25)
    kernel = build_chaos_kernel(exact_correlations(lattice, ModelParams(), k_max=3), lambda_scale(0.25), 3)
    report = influence_and_lindeberg_bound([kernel], DisorderLaw.GAUSSIAN, DisorderLaw.GAUSSIAN,
                                           replicas=2000, seed=1)
    assert report.gap == 0.0
    assert report.bound > 0


def test_swap_path_telescopes():
    lattice = rectangle_lattice(2, 2, mesh=0.25)
    kernel = build_chaos_kernel(exact_correlations(lattice, ModelParams()), lambda_scale(0.25), 4)
    rows = lindeberg_swap_path([kernel], DisorderLaw.RADEMACHER, replicas=4000, seed=2)
    report = influence_and_lindeberg_bound([kernel], DisorderLaw.RADEMACHER, replicas=4000, seed=2, batch=4000)
    total = sum(r['increment'] for r in rows)
    assert np.isclose(abs(total), report.gap, atol=1e-12)
    assert len(rows) == lattice.n_sites


def test_tanh_residuals():
    meshes = [2.0 ** -k for k in range(3, 7)]
    symmetric = tanh_moment_table(DisorderLaw.GAUSSIAN, meshes)
    assert np.all(np.abs(symmetric['re_residual']) < 1e-12)
    table = tanh_moment_table(DisorderLaw.GAUSSIAN, meshes, h=constant(1.0))
    assert fit_residual_exponent(table, 're') > 2
    assert fit_residual_exponent(table, 're2') > 2
    with_phi = tanh_moment_table(DisorderLaw.RADEMACHER, meshes, phi=constant(1.0))
    ratio = np.abs(with_phi['im_residual'] / with_phi['phi_a'])
    assert ratio.iloc[-1] < ratio.iloc[0]


def test_wiener_chaos_variance():
    lattice = rectangle_lattice(2, 2, mesh=0.25)
    corr = exact_correlations(lattice, ModelParams(), k_max=2)
    noise = np.random.default_rng(3).standard_normal((40_000, lattice.n_sites))
    value = wiener_chaos_partition(corr, lattice, noise, lam=constant(1.0))
    assert abs(value.mean - 1.0) < 0.02
    assert abs(value.empirical_variance / value.variance_h0 - 1.0) < 0.1


def test_wiener_chaos_variance_table():
    lattices = {a: rectangle_lattice(2, 2, mesh=a) for a in (0.5, 0.25)}
    corrs = {a: exact_correlations(lat, ModelParams(), k_max=2) for a, lat in lattices.items()}
    rows = wiener_chaos_variance_table(corrs, lattices, constant(1.0), 2, replicas=40_000, seed=4)
    assert [r['mesh'] for r in rows] == [0.25, 0.5]
    for row in rows:
        assert row['degree'] == 2
        assert abs(row['empirical_variance'] / row['analytic_variance'] - 1.0) < 0.1
    assert rows[0]['analytic_variance'] < rows[1]['analytic_variance']


def main():
    """Run all chaos tests."""
    print("=" * 80)
    print("Chaos Tests")
    print("=" * 80)

    tests = [
        test_high_temperature_identity, test_kernel_structure, test_truncate_rung_recovers_partition,
        test_rungs_need_positive_lambda, test_truncation_error_tracks_tail_mass,
        test_lindeberg_same_law_has_no_gap, test_swap_path_telescopes, test_tanh_residuals,
        test_wiener_chaos_variance, test_wiener_chaos_variance_table,
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

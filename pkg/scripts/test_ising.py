"""
Tests for the exact backends, the samplers and the magnetisation observables.
"""
import sys
from pathlib import Path

import numpy as np

# Add parent directory to path
sys.path.append(str(Path(__file__).parent.parent))

from src.config import BETA_C
from src.disorder.profiles import constant, l2_norm_squared
from src.errors import TooLarge, WolffWithField
from src.ising.exact import exact_correlations, exact_partition, spins_from_states, state_probabilities
from src.ising.model import ModelParams, theta_a
from src.ising.observables import magnetisation_observables
from src.ising.partition import characteristic_function, choose_backend, prefactor_check, rescaled_partition
from src.ising.sampler import sample_gibbs, sampled_correlations
from src.ising.transfer import transfer_matrix_partition
from src.lattice.blocks import build_block_grid
from src.lattice.domain import DomainSpec, rectangle_lattice, unit_square_lattice

TANH_4BETA = np.tanh(4 * BETA_C)


def test_zero_field_partition():
    lattice = rectangle_lattice(3, 3)
    assert np.isclose(exact_partition(lattice, ModelParams()), 1.0, rtol=1e-14)


def test_single_site_partition():
    lattice = rectangle_lattice(1, 1)
    xi = 0.3
    z = exact_partition(lattice, ModelParams(field=np.array([xi])))
    expected = np.cosh(4 * BETA_C + xi) / np.cosh(4 * BETA_C)
    assert np.isclose(z, expected, rtol=1e-13)


def test_conjugate_symmetry():
    lattice = rectangle_lattice(2, 2)
    phi = np.array([0.01, -0.02, 0.03, 0.015])
    plus = exact_partition(lattice, ModelParams(field=1j * phi))
    minus = exact_partition(lattice, ModelParams(field=-1j * phi))
    assert np.isclose(minus, np.conj(plus), rtol=1e-13)
    assert abs(plus) <= 1 + 1e-12


def test_transfer_matches_enumeration():
    lattice = rectangle_lattice(3, 3)
    rng = np.random.default_rng(5)
    for _ in range(5):
        params = ModelParams(field=rng.normal(0, 0.5, lattice.n_sites))
        exact = exact_partition(lattice, params)
        transfer = transfer_matrix_partition(lattice, params)
        assert abs(transfer - exact) <= 1e-12 * abs(exact)


def test_transfer_transpose():
    row = rectangle_lattice(4, 1)
    column = rectangle_lattice(1, 4)
    field = np.array([0.1, -0.2, 0.3, 0.05])
    a = transfer_matrix_partition(row, ModelParams(field=field))
    b = transfer_matrix_partition(column, ModelParams(field=field))
    assert np.isclose(a, b, rtol=1e-12)


def test_backend_choice():
    assert choose_backend(rectangle_lattice(3, 3)) == "enumeration"
    assert choose_backend(rectangle_lattice(5, 6)) == "transfer"
    shape = ((0, 0), (1, 0), (1, 0.5), (0.5, 0.5), (0.5, 1), (0, 1))
    from src.lattice.domain import discretize_domain
    l_shape = discretize_domain(DomainSpec(mesh=1.0 / 16, shape=shape))
    assert choose_backend(l_shape) == "monte_carlo"
    try:
        choose_backend(l_shape, exact_only=True)
        assert False, "large L-shape has no exact backend"
    except TooLarge:
        pass


def test_correlations():
    single = exact_correlations(rectangle_lattice(1, 1), ModelParams())
    assert np.isclose(single[(0,)], TANH_4BETA, rtol=1e-13)

    lattice = rectangle_lattice(3, 3)
    plus = exact_correlations(lattice, ModelParams(), k_max=2)
    minus = exact_correlations(lattice, ModelParams.minus_boundary(lattice), k_max=2)
    assert np.allclose(minus.one_point(), -plus.one_point())
    assert np.all((plus.one_point() >= 0) & (plus.one_point() <= 1))
    for x in range(lattice.n_sites):
        for y in range(x + 1, lattice.n_sites):
            assert plus[(x, y)] >= plus[(x,)] * plus[(y,)] - 1e-12


def test_single_site_heatbath():
    lattice = rectangle_lattice(1, 1)
    run = sample_gibbs(lattice, ModelParams(), 200_000, seed=1, burn_in=100)
    series = run.spins[:, 0].astype(float)
    assert abs(series.mean() - TANH_4BETA) <= 3 * run.standard_error(series)


def test_infinite_temperature():
    lattice = rectangle_lattice(4, 4)
    run = sample_gibbs(lattice, ModelParams(beta=0.0), 20_000, seed=2, burn_in=10)
    series = run.spins.mean(axis=1)
    assert abs(series.mean()) <= 4 * run.standard_error(series)


def test_samplers_agree():
    lattice = rectangle_lattice(8, 8)
    center = lattice.site_index(4, 4)
    heat = sample_gibbs(lattice, ModelParams(), 40_000, seed=3, algorithm="heatbath")
    wolff = sample_gibbs(lattice, ModelParams(), 40_000, seed=3, algorithm="wolff")
    h, w = heat.spins[:, center].astype(float), wolff.spins[:, center].astype(float)
    combined = np.hypot(heat.standard_error(h), wolff.standard_error(w))
    assert abs(h.mean() - w.mean()) <= 4 * combined
    assert heat.n_effective > 0 and wolff.tau_int >= 0.5


def test_samplers_match_enumeration():
    lattice = rectangle_lattice(3, 3)
    params = ModelParams()
    probs = state_probabilities(lattice, params)
    spins = spins_from_states(np.arange(probs.size), lattice.n_sites)
    exact = float(probs @ spins.mean(axis=1))
    assert abs(exact - 0.90814) < 1e-4
    for algorithm in ("heatbath", "wolff"):
        run = sample_gibbs(lattice, params, 40_000, seed=11, algorithm=algorithm)
        series = run.spins.mean(axis=1)
        assert abs(series.mean() - exact) <= 4 * run.standard_error(series), algorithm


def test_wolff_rejects_fields():
    lattice = rectangle_lattice(2, 2)
    try:
        sample_gibbs(lattice, ModelParams(field=np.full(4, 0.1)), 10, seed=0, algorithm="wolff")
        assert False, "wolff with a field must fail"
    except WolffWithField:
        pass


def test_block_observables():
    lattice = unit_square_lattice(3)
    grid = build_block_grid(lattice, 1)
    spins = np.ones(lattice.n_sites, dtype=np.int8)
    obs = magnetisation_observables(spins, grid, constant(1.0))
    assert np.isclose(obs.blocks[0, 0], 4 * (1 / 3) ** (15 / 8))
    flipped = magnetisation_observables(-spins, grid, constant(1.0))
    assert np.allclose(flipped.blocks, -obs.blocks)
    zero = magnetisation_observables(spins, grid, constant(0.0))
    assert np.all(zero.blocks == 0)


def test_rescaled_partition():
    lattice = unit_square_lattice(4)
    assert np.isclose(rescaled_partition(lattice, ModelParams()), 1.0)
    lam_l2 = l2_norm_squared(constant(1.0), lattice.spec)
    assert np.isclose(theta_a(0.25, lam_l2), np.exp(-0.5 * 4 ** 0.25))


def test_characteristic_function():
    single = rectangle_lattice(1, 1)
    phi = 0.7
    value = characteristic_function(single, ModelParams(), np.array([phi]))
    assert np.isclose(value, np.cos(phi) + 1j * np.sin(phi) * TANH_4BETA, rtol=1e-12)

    lattice = rectangle_lattice(3, 3)
    rng = np.random.default_rng(9)
    params = ModelParams(field=rng.normal(0, 0.3, lattice.n_sites))
    assert np.isclose(characteristic_function(lattice, params, np.zeros(lattice.n_sites)), 1.0)
    for _ in range(100):
        assert abs(characteristic_function(lattice, params, rng.normal(0, 1, lattice.n_sites))) <= 1 + 1e-12


def test_prefactor_check():
    lam = constant(1.0)
    coarse = prefactor_check(unit_square_lattice(4), lam, omega=np.zeros(9))
    assert np.isclose(coarse['cosh_product_real'], coarse['theta_a'])
    assert coarse['cosh_product_imag'] == 0.0
    a = 0.25
    expected = np.exp(0.5 * 9 * a ** 1.75 - 0.5 * a ** -0.25 * coarse['lam_l2_squared'])
    assert np.isclose(coarse['gaussian_mgf_product'], expected)
    fine = prefactor_check(unit_square_lattice(64), lam)
    assert abs(np.log(fine['gaussian_mgf_product'])) < abs(np.log(coarse['gaussian_mgf_product']))


def test_sampled_correlations():
    lattice = unit_square_lattice(3)
    run = sample_gibbs(lattice, ModelParams(), 40_000, seed=4)
    sampled = sampled_correlations(run, 2, lattice)
    exact = exact_correlations(lattice, ModelParams(), k_max=2)
    assert sampled.source == "sampled"
    assert np.allclose(sampled.one_point(), exact.one_point(), atol=0.05)
    assert abs(sampled[(0, 3)] - exact[(0, 3)]) < 0.05
    try:
        sampled_correlations(run, 3)
        assert False, "three-point sampled correlations must fail"
    except ValueError:
        pass


def main():
    """Run all Ising model tests."""
    print("=" * 80)
    print("Ising Model Tests")
    print("=" * 80)

    tests = [
        test_zero_field_partition, test_single_site_partition, test_conjugate_symmetry,
        test_transfer_matches_enumeration, test_transfer_transpose, test_backend_choice, test_correlations,
        test_single_site_heatbath, test_infinite_temperature, test_samplers_agree,
        test_samplers_match_enumeration, test_wolff_rejects_fields,
        test_block_observables, test_rescaled_partition, test_characteristic_function, test_prefactor_check,
        test_sampled_correlations,
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

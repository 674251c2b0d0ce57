"""
Tests for disorder laws, profiles, scaled fields and white-noise grids.
"""
import sys
from pathlib import Path

import numpy as np

# Add parent directory to path
sys.path.append(str(Path(__file__).parent.parent))

from src.disorder.field import build_external_field, h_scale, lambda_scale
from src.disorder.laws import DisorderLaw, disorder_from_uniforms, sample_disorder, third_absolute_moment
from src.disorder.profiles import bump, cell_integrals, constant, l2_norm_squared, linear
from src.disorder.white_noise import pair_white_noise, sample_white_noise_grid, white_noise_pairing_variance
from src.errors import NonPositiveLambda
from src.lattice.domain import DomainSpec, unit_square_lattice


def test_laws_are_standardised():
    lattice = unit_square_lattice(32)
    for law in DisorderLaw:
        omega = sample_disorder(lattice, law, seed=7, replicas=400)
        assert abs(omega.mean()) < 0.02, law
        assert abs(omega.var() - 1.0) < 0.03, law
        assert abs(np.mean(np.abs(omega) ** 3) - third_absolute_moment(law)) < 0.05, law
    assert np.isclose(third_absolute_moment(DisorderLaw.RADEMACHER), 1.0)


def test_disorder_is_reproducible():
    lattice = unit_square_lattice(8)
    first = sample_disorder(lattice, DisorderLaw.GAUSSIAN, seed=3, replica=2)
    second = sample_disorder(lattice, DisorderLaw.GAUSSIAN, seed=3, replica=2)
    other = sample_disorder(lattice, DisorderLaw.GAUSSIAN, seed=3, replica=5)
    assert np.array_equal(first, second)
    assert not np.array_equal(first, other)


def test_monotone_coupling():
    u = np.linspace(0.01, 0.99, 50)
    for law in DisorderLaw:
        values = disorder_from_uniforms(u, law)
        assert np.all(np.diff(values) >= 0)


def test_scalings():
    assert np.isclose(lambda_scale(0.5), 0.5 ** 0.875)
    assert np.isclose(h_scale(0.25), 0.25 ** 1.875)
    lattice = unit_square_lattice(4)
    omega = np.arange(lattice.n_sites, dtype=float)
    ext = build_external_field(lattice, constant(2.0), constant(1.0), omega=omega)
    expected = 2.0 * lambda_scale(0.25) * omega + h_scale(0.25)
    assert np.allclose(ext.xi, expected)


def test_positive_lambda_required():
    lattice = unit_square_lattice(4)
    try:
        build_external_field(lattice, constant(0.0), require_positive_lambda=True)
        assert False, "zero lambda must fail"
    except NonPositiveLambda:
        pass


def test_profile_integrals():
    spec = DomainSpec(mesh=0.25)
    assert np.isclose(l2_norm_squared(constant(2.0), spec), 4.0)
    # exact for bilinear profiles
    lattice = unit_square_lattice(4)
    profile = linear(1.0, (1.0, -2.0))
    integrals = cell_integrals(profile, lattice)
    centers = profile.at(lattice.interior_sites)
    assert np.allclose(integrals, centers * 0.25 ** 2)
    b = bump(radius=0.25)
    values = b(np.array([0.5, 0.9]), np.array([0.5, 0.9]))
    assert np.allclose(values, [1.0, 0.0])


def test_white_noise_refinement():
    lattice = unit_square_lattice(8)
    grid = sample_white_noise_grid(lattice, seed=11)
    fine = grid.refine()
    assert fine.shape == (2 * grid.shape[0], 2 * grid.shape[1])
    assert np.allclose(fine.coarsen().values, grid.values)
    assert np.allclose(grid.cell_masses().sum(), fine.cell_masses().sum())
    theta = grid.site_values(lattice)
    assert theta.shape == (lattice.n_sites,)


def test_white_noise_pairing():
    lattice = unit_square_lattice(8)
    phi = constant(1.0)
    noise = np.ones(lattice.n_sites)
    # with unit noise the pairing is a^{-1} times the covered area
    assert np.isclose(pair_white_noise(lattice, noise, phi), lattice.n_sites * lattice.mesh)
    assert np.isclose(white_noise_pairing_variance(lattice, phi), lattice.n_sites * lattice.mesh ** 2)


def main():
    """Run all disorder tests."""
    print("=" * 80)
    print("Disorder Tests")
    print("=" * 80)

    tests = [
        test_laws_are_standardised, test_disorder_is_reproducible, test_monotone_coupling, test_scalings,
        test_positive_lambda_required, test_profile_integrals, test_white_noise_refinement,
        test_white_noise_pairing,
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

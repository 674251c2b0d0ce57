"""
Tests for wavelet bases, multi-resolution projections, Besov norms and subdomain integrals.
"""
import sys
from pathlib import Path

import numpy as np

# Add parent directory to path
sys.path.append(str(Path(__file__).parent.parent))

from src.besov import bumps
from src.besov.functionals import GridField, atomic_magnetisation, piecewise_magnetisation
from src.besov.mra import (
    CoefficientMap, besov_holder_norm, decompose, dilation_discrepancy, mra_project, reconstruct,
)
from src.besov.subdomain import Region, box_dimension, integrate_over_subdomain, koch_island
from src.besov.wavelets import build_wavelet_basis
from src.errors import DimensionTooLarge, InsufficientRegularity
from src.lattice.domain import unit_square_lattice


def _random_grid(seed: int, cells: int = 8) -> GridField:
    values = np.random.default_rng(seed).standard_normal((cells, cells))
    return GridField(values, (0.0, 0.0), 1.0 / cells)


def test_filters_are_orthonormal():
    basis = build_wavelet_basis(order=3)
    assert np.isclose(basis.h.sum(), np.sqrt(2.0))
    assert np.isclose(np.dot(basis.h, basis.h), 1.0)
    assert np.isclose(np.dot(basis.h, basis.g), 0.0, atol=1e-12)
    gram = basis.translate_gram()
    center = (len(gram) - 1) // 2
    expected = np.zeros(len(gram))
    expected[center] = 1.0
    assert np.allclose(gram, expected, atol=1e-10)


def test_regularity_check():
    try:
        build_wavelet_basis("haar", alpha=-0.5)
        assert False, "haar cannot resolve negative exponents"
    except InsufficientRegularity:
        pass
    basis = build_wavelet_basis(order=3, alpha=-0.5)
    assert basis.regularity == 1


def test_fast_transform_is_invertible():
    basis = build_wavelet_basis(order=3)
    values = np.random.default_rng(1).standard_normal((12, 10))
    original = CoefficientMap(4, 0, (3, -2), values)
    rebuilt = reconstruct(decompose(original, basis), basis)
    a = original.origin[0] - rebuilt.origin[0]
    b = original.origin[1] - rebuilt.origin[1]
    window = rebuilt.values[a:a + values.shape[0], b:b + values.shape[1]]
    assert np.allclose(window, values, atol=1e-10)
    outside = rebuilt.values.copy()
    outside[a:a + values.shape[0], b:b + values.shape[1]] = 0.0
    assert np.allclose(outside, 0.0, atol=1e-10)


def test_dilation():
    basis = build_wavelet_basis(order=3)
    report = dilation_discrepancy(_random_grid(2), basis, 2)
    assert report['coefficient_gap'] < 1e-10


def test_besov_norm():
    basis = build_wavelet_basis(order=3, alpha=-0.2)
    f = _random_grid(3)
    norm = besov_holder_norm(f, -0.2, 5, basis)
    assert norm.value >= norm.scaling_sup
    assert norm.argsup_level in norm.contributions
    doubled = besov_holder_norm(f.scaled(2.0), -0.2, 5, basis)
    assert np.isclose(doubled.value, 2.0 * norm.value)
    zero = besov_holder_norm(f.scaled(0.0), -0.2, 5, basis)
    assert zero.value == 0.0


def test_magnetisation_norm_levels():
    lattice = unit_square_lattice(16)
    basis = build_wavelet_basis(order=3, alpha=-0.2)
    f = piecewise_magnetisation(lattice, np.ones(lattice.n_sites))
    norm = besov_holder_norm(f, -0.2, 5, basis)
    assert norm.n_max == 5 and set(norm.contributions) == {1, 2, 3, 4, 5}
    assert np.isfinite(norm.value) and norm.value > 0


def test_test_function_norm():
    f = _random_grid(4, cells=4)
    base = bumps.test_function_norm(f, -0.2, levels=range(0, 3), nodes=8)
    scaled = bumps.test_function_norm(f.scaled(3.0), -0.2, levels=range(0, 3), nodes=8)
    assert base.value > 0
    assert np.isclose(scaled.value, 3.0 * base.value)
    fit = bumps.fit_norm_constant([1.0, 2.0], [2.0, 2.0])
    assert fit['constant'] == 1.0 and fit['min_ratio'] == 0.5


def test_box_dimensions():
    square = box_dimension(Region.rectangle(0.25, 0.75, 0.25, 0.75))
    assert abs(square.estimate - 1.0) < 0.05
    point = box_dimension(Region.point_set([(0.3, 0.4)]))
    assert abs(point.estimate) < 1e-12
    koch = box_dimension(koch_island(4), levels=range(3, 10))
    assert abs(koch.estimate - 1.5) < 0.1


def test_subdomain_integral_is_exact_for_haar():
    basis = build_wavelet_basis("haar")
    f = _random_grid(5, cells=4)
    region = Region.rectangle(0.25, 0.75, 0.5, 1.0)
    result = integrate_over_subdomain(f, region, -0.25, basis, n_cut=4)
    expected = f.values[1:3, 2:4].sum() * 0.25 ** 2
    assert np.isclose(result.value, expected, atol=1e-10)
    assert np.isclose(result.value, result.scaling_term + sum(result.level_terms.values()))


def test_subdomain_levels_are_consistent():
    basis = build_wavelet_basis(order=3)
    f = _random_grid(6)
    region = Region.rectangle(0.2, 0.7, 0.1, 0.6)
    coarse = integrate_over_subdomain(f, region, -0.25, basis, n_cut=5, n0=0)
    fine = integrate_over_subdomain(f, region, -0.25, basis, n_cut=5, n0=3)
    assert np.isclose(coarse.value, fine.value, atol=1e-10)
    assert coarse.tail_bound >= 0


def test_projection_of_zero_field():
    basis = build_wavelet_basis(order=3)
    projection = mra_project(GridField(np.zeros((4, 4)), (0.0, 0.0), 0.25), 3, basis)
    assert len(projection.wavelets) == 3
    for cmap in [projection.scaling] + projection.wavelets:
        assert cmap.values.size > 0 and cmap.sup() == 0.0


def test_haar_scaling_function_projects_to_unit_coefficient():
    basis = build_wavelet_basis("haar")
    level, k = 2, (1, 2)
    f = GridField(np.full((1, 1), 2.0 ** level), (k[0] / 4, k[1] / 4), 0.25)
    projection = mra_project(f, level, basis)
    expected = np.zeros_like(projection.scaling.values)
    expected[k[0] - projection.scaling.origin[0], k[1] - projection.scaling.origin[1]] = 1.0
    assert np.allclose(projection.scaling.values, expected, atol=1e-12)
    for cmap in projection.wavelets:
        assert cmap.sup() < 1e-12


def test_constant_field_has_no_interior_wavelets():
    basis = build_wavelet_basis(order=3)
    level = 4
    f = GridField(np.ones((8, 8)), (0.0, 0.0), 0.125)
    projection = mra_project(f, level, basis)
    last = 2 ** level - int(basis.support)
    for cmap in [projection.scaling] + projection.wavelets:
        ox, oy = cmap.origin
        interior = cmap.values[-ox:last - ox + 1, -oy:last - oy + 1]
        assert interior.shape == (last + 1, last + 1)
        if cmap.kind == 0:
            assert np.allclose(interior, 2.0 ** -level, atol=1e-10)
        else:
            assert np.max(np.abs(interior)) < 1e-8


def test_atomic_integral_over_left_half():
    basis = build_wavelet_basis(order=3)
    lattice = unit_square_lattice(7)
    spins = np.random.default_rng(8).choice([-1, 1], size=lattice.n_sites)
    f = atomic_magnetisation(lattice, spins)
    result = integrate_over_subdomain(f, Region.rectangle(0.0, 0.5, 0.0, 1.0), -0.25, basis, n_cut=6)
    exact = f.masses[f.points[:, 0] < 0.5].sum()
    assert abs(result.value - exact) <= result.tail_bound + 1e-9
    assert abs(result.value - exact) < 1e-9


def test_disjoint_region_integrates_to_zero():
    basis = build_wavelet_basis(order=3)
    result = integrate_over_subdomain(_random_grid(9), Region.rectangle(2.0, 3.0, 2.0, 3.0), -0.25, basis, n_cut=3)
    assert abs(result.value) < 1e-14
    assert result.scaling_term == 0.0


def test_rough_boundary_rejected():
    basis = build_wavelet_basis(order=3)
    try:
        integrate_over_subdomain(_random_grid(7), koch_island(4), -0.6, basis, n_cut=4,
                                 dimension=box_dimension(koch_island(4), levels=range(3, 10)))
        assert False, "dimension above 2 + alpha must fail"
    except DimensionTooLarge:
        pass


def main():
    """Run all Besov tests."""
    print("=" * 80)
    print("Besov Tests")
    print("=" * 80)

    tests = [
        test_filters_are_orthonormal, test_regularity_check, test_fast_transform_is_invertible, test_dilation,
        test_besov_norm, test_magnetisation_norm_levels, test_test_function_norm, test_box_dimensions,
        test_subdomain_integral_is_exact_for_haar, test_subdomain_levels_are_consistent,
        test_projection_of_zero_field, test_haar_scaling_function_projects_to_unit_coefficient,
        test_constant_field_has_no_interior_wavelets, test_atomic_integral_over_left_half,
        test_disjoint_region_integrates_to_zero, test_rough_boundary_rejected,
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

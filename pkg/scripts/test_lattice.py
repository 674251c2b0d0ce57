"""
Tests for domain discretization and dyadic block grids.
"""
import sys
import tempfile
from pathlib import Path

import numpy as np

# Add parent directory to path
sys.path.append(str(Path(__file__).parent.parent))

from src.errors import AnnulusOutsideDomain, EmptyLattice, InvalidPolygon
from src.lattice.blocks import build_block_grid
from src.lattice.domain import DomainSpec, discretize_domain, dump_lattice, rectangle_lattice, unit_square_lattice
from src.persistence import load_table


def test_unit_square_counts():
    lattice = discretize_domain(DomainSpec(mesh=0.25))
    assert lattice.n_sites == 9
    assert lattice.n_boundary == 12
    # every interior site has four neighbours, interior or boundary
    slots = (lattice.interior_neighbors >= 0) | (lattice.boundary_neighbors >= 0)
    assert slots.all()


def test_small_square():
    lattice = discretize_domain(DomainSpec(mesh=1.0 / 3.0))
    assert lattice.n_sites == 4
    assert lattice.rectangle_shape() == (2, 2)


def test_row_major_order():
    lattice = rectangle_lattice(3, 2)
    ij = lattice.interior_ij
    assert [tuple(p) for p in ij[:3]] == [(1, 1), (2, 1), (3, 1)]
    assert lattice.site_index(2, 2) == 4


def test_bonds():
    lattice = rectangle_lattice(3, 3)
    # 2 * 3 * 2 interior bonds and 12 boundary bonds
    assert len(lattice.bonds) == 12
    assert len(lattice.boundary_bonds) == 12


def test_degenerate_domains():
    try:
        discretize_domain(DomainSpec(mesh=2.0))
        assert False, "mesh above the diameter must fail"
    except EmptyLattice:
        pass
    try:
        discretize_domain(DomainSpec(mesh=0.1, shape=((0, 0), (1, 1), (1, 0), (0, 1))))
        assert False, "bow-tie must fail"
    except InvalidPolygon:
        pass


def test_nonpositive_mesh_names_the_mesh():
    bow_tie = ((0, 0), (1, 1), (1, 0), (0, 1))
    for spec in (DomainSpec(mesh=0.0), DomainSpec(mesh=-0.25, shape=bow_tie)):
        try:
            spec.validate()
            assert False, "a nonpositive mesh must fail"
        except InvalidPolygon:
            assert False, "a nonpositive mesh is not a polygon error"
        except ValueError as e:
            assert "mesh" in str(e)


def test_l_shape():
    shape = ((0, 0), (1, 0), (1, 0.5), (0.5, 0.5), (0.5, 1), (0, 1))
    lattice = discretize_domain(DomainSpec(mesh=0.125, shape=shape))
    pts = lattice.interior_sites
    assert not np.any((pts[:, 0] > 0.5) & (pts[:, 1] > 0.5))
    assert lattice.rectangle_shape() is None


def test_block_grid():
    lattice = unit_square_lattice(16)
    grid = build_block_grid(lattice, 4)
    counts = grid.counts()
    assert counts.sum() == lattice.n_sites
    assert counts.shape == (4, 4)
    values = np.ones(lattice.n_sites)
    assert np.array_equal(grid.block_sums(values), counts)
    # sites on x = 1/4 go to the right-hand block
    site = lattice.site_index(4, 1)
    assert tuple(grid.assignment[site]) == (2, 1)


def test_refinement_nests():
    lattice = unit_square_lattice(16)
    coarse = build_block_grid(lattice, 2)
    fine = coarse.refine()
    parent = (fine.assignment - 1) // 2 + 1
    assert np.array_equal(parent, coarse.assignment)


def test_annuli():
    lattice = unit_square_lattice(32)
    grid = build_block_grid(lattice, 8)
    annulus = grid.annulus(4, 4)
    assert len(annulus.ring_sites) == 8 * len(annulus.inner_sites)
    try:
        grid.annulus(1, 4)
        assert False, "edge block annulus must fail"
    except AnnulusOutsideDomain:
        pass
    assert len(grid.disjoint_annuli()) >= (8 - 2) ** 2 // 9


def test_dump_lattice():
    lattice = unit_square_lattice(4)
    grid = build_block_grid(lattice, 2)
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "lattice.csv"
        dump_lattice(lattice, path, grid.assignment)
        frame = load_table(path)
    assert len(frame) == 9 + 12
    assert int(frame['is_boundary'].sum()) == 12
    assert list(frame['index']) == list(range(21))
    interior = frame[~frame['is_boundary']]
    assert set(interior['block_i'].astype(int)) == {1, 2}


def main():
    """Run all lattice tests."""
    print("=" * 80)
    print("Lattice Tests")
    print("=" * 80)

    tests = [
        test_unit_square_counts, test_small_square, test_row_major_order, test_bonds,
        test_degenerate_domains, test_nonpositive_mesh_names_the_mesh, test_l_shape, test_block_grid,
        test_refinement_nests, test_annuli, test_dump_lattice,
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

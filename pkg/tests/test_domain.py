"""Grid domain, cuboid splitting, and seeded point sampling."""

import json

import numpy as np
import pytest
from scipy import stats

from meshprof.domain import GridCuboid, GridDomain, sample_cell_indices
from meshprof.errors import OutOfDomainError, UnsplittableCuboidError


def cells_of(box: GridCuboid) -> set:
    return set(box.iter_cells())


class TestGridDomain:
    def test_cell_centers(self):
        dom = GridDomain((4, 4), origin=(10.0, -2.0), cell_size=(2.0, 0.5))
        assert dom.world((0, 0)) == (11.0, -1.75)
        assert dom.world((3, 1)) == (17.0, -1.25)

    def test_defaults_are_unit_cells_at_zero(self):
        dom = GridDomain((5, 3))
        assert dom.origin == (0.0, 0.0)
        assert dom.cell_size == (1.0, 1.0)
        assert dom.cell_count == 15

    def test_validation(self):
        with pytest.raises(ValueError):
            GridDomain(())
        with pytest.raises(ValueError):
            GridDomain((4, 0))
        with pytest.raises(ValueError):
            GridDomain((4,), cell_size=(0.0,))
        with pytest.raises(ValueError):
            GridDomain((4, 4), origin=(0.0,))

    def test_point_bounds(self):
        dom = GridDomain((8, 8))
        p = dom.point((7, 0))
        assert p.index == (7, 0) and p.world == (7.5, 0.5)
        with pytest.raises(OutOfDomainError):
            dom.point((8, 0))
        with pytest.raises(OutOfDomainError):
            dom.point((-1, 3))

    def test_linear_index_roundtrip(self):
        dom = GridDomain((3, 5, 2))
        seen = set()
        for index in np.ndindex(*dom.extents):
            lin = dom.linear_index(index)
            seen.add(lin)
            assert dom.point_from_linear(lin).index == index
        assert seen == set(range(30))

    def test_json_roundtrip(self):
        dom = GridDomain((6, 2), origin=(0.25, -1.0), cell_size=(0.5, 3.0))
        doc = json.loads(dom.to_json())
        assert set(doc) == {"extents", "origin", "cell_size"}
        assert GridDomain.from_json(dom.to_json()) == dom


class TestSplit:
    def test_power_of_two_quadrants(self):
        children = GridCuboid((0, 0), (4, 4)).split()
        assert [c.lo + c.hi for c in children] == [
            (0, 0, 2, 2), (0, 2, 2, 4), (2, 0, 4, 2), (2, 2, 4, 4)]

    def test_degenerate_axis_not_cut(self):
        children = GridCuboid((0, 0), (3, 1)).split()
        assert [(c.lo, c.hi) for c in children] == [((0, 0), (1, 1)), ((1, 0), (3, 1))]

    def test_odd_1d(self):
        children = GridCuboid((0,), (5,)).split()
        assert [(c.lo, c.hi) for c in children] == [((0,), (2,)), ((2,), (5,))]

    def test_single_cell_is_unsplittable(self):
        with pytest.raises(UnsplittableCuboidError):
            GridCuboid((2, 3), (3, 4)).split()

    def test_partition_exact_on_random_cuboids(self):
        rng = np.random.default_rng(4)
        for _ in range(40):
            d = int(rng.integers(1, 4))
            lo = rng.integers(0, 5, size=d)
            ext = rng.integers(1, 12, size=d)
            box = GridCuboid(tuple(lo), tuple(lo + ext))
            if box.cell_count == 1:
                continue
            children = box.split()
            union = set()
            for child in children:
                cs = cells_of(child)
                assert not (union & cs), "children overlap"
                union |= cs
            assert union == cells_of(box)
            assert len(children) == 2 ** sum(e >= 2 for e in box.extents())

    def test_child_order_matches_child_index(self):
        box = GridCuboid((0, 0, 0), (4, 4, 1))
        children = box.split()
        for i, child in enumerate(children):
            for cell in child.iter_cells():
                assert box.child_index(cell) == i

    def test_grid_diameter(self):
        assert GridCuboid((0, 0), (256, 256)).grid_diameter == pytest.approx(256 * np.sqrt(2))
        assert GridCuboid((3,), (8,)).grid_diameter == 5.0


class TestSampling:
    def test_exhaustion_returns_every_cell_once(self):
        dom = GridDomain((16, 16))
        box = GridCuboid((4, 4), (6, 6))
        pts = dom.sample_points(box, 10, np.random.default_rng(0))
        assert sorted(p.index for p in pts) == [(4, 4), (4, 5), (5, 4), (5, 5)]

    def test_deterministic_for_fixed_seed(self):
        dom = GridDomain((16, 16))
        box = dom.root_cuboid()
        a = [p.index for p in dom.sample_points(box, 2, np.random.default_rng(42))]
        b = [p.index for p in dom.sample_points(box, 2, np.random.default_rng(42))]
        assert a == b and len(a) == 2

    def test_without_replacement(self):
        dom = GridDomain((9, 7))
        for seed in range(20):
            pts = dom.sample_points(dom.root_cuboid(), 30, np.random.default_rng(seed))
            idx = [p.index for p in pts]
            assert len(idx) == len(set(idx)) == 30

    def test_points_stay_inside_cuboid(self):
        dom = GridDomain((20, 20))
        box = GridCuboid((3, 11), (9, 17))
        for p in dom.sample_points(box, 25, np.random.default_rng(7)):
            assert box.contains_index(p.index)

    def test_empirical_uniformity(self):
        # 1000 fixed seeds, 20 draws each from 100 cells; every cell's hit
        # count should sit in the binomial bulk and the aggregate should not
        # reject uniformity.
        box = GridCuboid((0, 0), (10, 10))
        counts = np.zeros(100)
        for seed in range(1000):
            np.add.at(counts, sample_cell_indices(box, 20, np.random.default_rng(seed)), 1)
        sigma = np.sqrt(1000 * 0.2 * 0.8)
        assert np.abs(counts - 200.0).max() <= 3.05 * sigma
        _, p = stats.chisquare(counts)
        assert p > 0.01

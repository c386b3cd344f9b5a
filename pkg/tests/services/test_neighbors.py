"""Tests for the neighbor-index service."""

import numpy as np
import pytest

from entrofunc.errors import InvalidArgumentError
from entrofunc.models import Sample
from entrofunc.services.neighbors import (
    brute_force_counts,
    brute_force_within,
    build_grid,
    count_summary,
    count_within,
    count_within_many,
    exact_match_counts,
    neighbor_counts,
    pairwise_equal_counts,
    query_cell_range,
)


class TestBuildGrid:
    """Test grid construction."""

    def test_three_point_buckets(self):
        index = build_grid([0.0, 0.1, 5.0], 0.2)
        assert index.buckets == {(0,): [0, 1], (25,): [2]}
        assert index.cell_side == 0.2
        assert index.size == 3

    def test_empty_index(self):
        index = build_grid([], 1.0)
        assert index.size == 0
        assert index.buckets == {}
        assert count_within(index, [0.0]) == 0

    def test_every_point_in_its_own_cell(self):
        rng = np.random.default_rng(0)
        points = rng.uniform(size=(1000, 2))
        index = build_grid(points, 0.05)
        for cell, members in index.buckets.items():
            expected = np.floor(points[members] / 0.05).astype(np.int64)
            assert np.all(expected == np.array(cell))
        assert np.all(count_within_many(index, points) >= 1)

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidArgumentError):
            build_grid([0.0, np.inf], 0.1)

    def test_rejects_bad_epsilon(self):
        with pytest.raises(InvalidArgumentError):
            build_grid([0.0, 1.0], 0.0)


class TestCountWithin:
    """Test ball queries against the index."""

    def test_center_on_point(self):
        index = build_grid([0.0, 0.1, 5.0], 0.2)
        assert count_within(index, [0.0], 0.2) == 2

    def test_isolated_point(self):
        index = build_grid([0.0, 0.1, 5.0], 0.2)
        assert count_within(index, [5.0], 0.2) == 1

    @pytest.mark.parametrize("d", [1, 2, 3, 5])
    def test_matches_linear_scan(self, d):
        rng = np.random.default_rng(d)
        points = rng.normal(size=(200, d))
        centers = rng.normal(size=(50, d))
        eps = 0.4 * d
        index = build_grid(points, eps)
        np.testing.assert_array_equal(
            count_within_many(index, centers), brute_force_within(points, centers, eps)
        )

    def test_dimension_mismatch(self):
        index = build_grid(np.zeros((3, 2)), 0.5)
        with pytest.raises(InvalidArgumentError):
            count_within(index, [0.0, 0.0, 0.0])

    def test_radius_must_match_cell_side(self):
        index = build_grid([0.0, 1.0], 0.5)
        with pytest.raises(InvalidArgumentError):
            count_within(index, [0.0], 0.7)

    def test_far_away_center(self):
        index = build_grid([0.0, 0.1], 0.2)
        assert count_within(index, [1e300]) == 0

    def test_boundary_tie_two_cells_away(self):
        # -1e-17 sits in cell -1 and 0.2 in cell 1, yet they are exactly one radius apart
        points = [-1e-17, 0.2]
        index = build_grid(points, 0.2)
        np.testing.assert_array_equal(
            count_within_many(index, points), brute_force_within(points, points, 0.2)
        )
        assert count_within(index, [-1e-17]) == 2

    def test_query_range_widens_only_near_boundaries(self):
        low, high = query_cell_range(np.array([[0.5], [-1e-17], [0.2]]), 0.2)
        assert low[:, 0].tolist() == [-1, -1, -2]
        assert high[:, 0].tolist() == [1, 2, 1]

    def test_lattice_ties_match_linear_scan(self):
        rng = np.random.default_rng(11)
        eps = 0.1
        points = rng.integers(-20, 20, size=(300, 2)) * eps
        points[::3] += rng.choice([-1e-17, 1e-17], size=(100, 2))
        index = build_grid(points, eps)
        np.testing.assert_array_equal(
            count_within_many(index, points), brute_force_within(points, points, eps)
        )


class TestNeighborCounts:
    """Test a_i and b_i counting."""

    def test_three_points(self):
        counts = neighbor_counts(Sample.continuous([0.0, 0.1, 5.0]), None, 0.2)
        assert counts.a.tolist() == [1, 1, 0]
        assert counts.b.tolist() == [0, 0, 0]
        assert counts.n2 == 0

    def test_cross_counts(self):
        counts = neighbor_counts(Sample.continuous([0.0]), Sample.continuous([0.1, 0.3]), 0.2)
        assert counts.a.tolist() == [0]
        assert counts.b.tolist() == [1]

    def test_gaussian_clouds_match_brute_force(self):
        rng = np.random.default_rng(42)
        x = Sample.continuous(rng.normal(size=(500, 2)))
        y = Sample.continuous(rng.normal(1.0, 1.0, size=(500, 2)))
        grid = neighbor_counts(x, y, 0.15)
        brute = brute_force_counts(x, y, 0.15)
        np.testing.assert_array_equal(grid.a, brute.a)
        np.testing.assert_array_equal(grid.b, brute.b)

    def test_random_instances_match_brute_force(self):
        rng = np.random.default_rng(7)
        for trial in range(100):
            d = [1, 2, 3, 5][trial % 4]
            x = Sample.continuous(rng.normal(size=(int(rng.integers(1, 60)), d)))
            y = Sample.continuous(rng.normal(size=(int(rng.integers(0, 60)), d)))
            eps = float(rng.uniform(0.05, 2.0))
            grid = neighbor_counts(x, y, eps)
            brute = brute_force_counts(x, y, eps)
            np.testing.assert_array_equal(grid.a, brute.a)
            np.testing.assert_array_equal(grid.b, brute.b)

    def test_duplicate_increments_a_by_one(self):
        rng = np.random.default_rng(8)
        points = rng.normal(size=(40, 2))
        before = neighbor_counts(Sample.continuous(points), None, 0.3)
        after = neighbor_counts(Sample.continuous(np.vstack([points, points[:1]])), None, 0.3)
        assert after.a[0] == before.a[0] + 1
        assert np.all(after.a <= after.n1 - 1)

    def test_symmetric_closeness(self):
        rng = np.random.default_rng(9)
        points = rng.normal(size=(60, 3))
        counts = neighbor_counts(Sample.continuous(points), None, 0.8)
        diff = points[:, None, :] - points[None, :, :]
        close = (np.sum(diff * diff, axis=2) <= 0.64) & ~np.eye(60, dtype=bool)
        assert np.all(close == close.T)
        np.testing.assert_array_equal(counts.a, close.sum(axis=1))

    def test_high_dimension_uses_fallback(self, monkeypatch):
        monkeypatch.setenv("ENTROFUNC_GRID_MAX_DIM", "1")
        rng = np.random.default_rng(10)
        x = Sample.continuous(rng.normal(size=(80, 2)))
        counts = neighbor_counts(x, None, 0.5)
        np.testing.assert_array_equal(counts.a, brute_force_counts(x, None, 0.5).a)

    def test_small_pair_chunks(self, monkeypatch):
        monkeypatch.setenv("ENTROFUNC_PAIR_CHUNK", "1024")
        rng = np.random.default_rng(11)
        x = Sample.continuous(rng.normal(scale=0.2, size=(400, 1)))
        y = Sample.continuous(rng.normal(scale=0.2, size=(300, 1)))
        grid = neighbor_counts(x, y, 0.1)
        brute = brute_force_counts(x, y, 0.1)
        np.testing.assert_array_equal(grid.a, brute.a)
        np.testing.assert_array_equal(grid.b, brute.b)

    def test_huge_lattice_span_falls_back(self):
        x = Sample.continuous([[0.0, 0.0, 0.0], [1e10, 1e10, 1e10], [1e-11, 0.0, 0.0]])
        counts = neighbor_counts(x, None, 1e-10)
        assert counts.a.tolist() == [1, 0, 1]

    def test_rejects_discrete(self):
        with pytest.raises(InvalidArgumentError):
            neighbor_counts(Sample.discrete([1, 2]), None, 0.5)


class TestExactMatchCounts:
    """Test multiplicity counting for discrete samples."""

    def test_pair_example(self):
        counts = exact_match_counts(Sample.discrete([1, 1, 2]), Sample.discrete([1, 2, 2]))
        assert counts.a.tolist() == [1, 1, 0]
        assert counts.b.tolist() == [1, 1, 2]
        assert counts.epsilon == 0.0

    def test_all_distinct(self):
        counts = exact_match_counts(Sample.discrete([4, 8, 15, 16, 23, 42]), None)
        assert counts.a.tolist() == [0] * 6

    def test_matches_pairwise_oracle(self):
        rng = np.random.default_rng(12)
        x = Sample.discrete((rng.random((300, 3)) < 0.8).astype(int))
        y = Sample.discrete((rng.random((200, 3)) < 0.6).astype(int))
        fast = exact_match_counts(x, y)
        slow = pairwise_equal_counts(x, y)
        np.testing.assert_array_equal(fast.a, slow.a)
        np.testing.assert_array_equal(fast.b, slow.b)

    def test_rejects_continuous(self):
        with pytest.raises(InvalidArgumentError):
            exact_match_counts(Sample.continuous([0.5]), None)

    def test_summary(self):
        counts = exact_match_counts(Sample.discrete([1, 1, 2]), Sample.discrete([1, 2, 2]))
        summary = count_summary(counts)
        assert summary["mean_a"] == pytest.approx(2 / 3)
        assert summary["mean_b"] == pytest.approx(4 / 3)

"""Indicator correctness against independent oracles."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from siteopt.domain import InvalidArgumentError, ObjectiveVector, dominates
from siteopt.metrics import (
    env_score,
    gini,
    hypervolume_exact,
    hypervolume_mc,
    igd,
    nondominated_mask,
    rcr,
    transit_access,
)

from conftest import make_city, make_parcel


def brute_force_nondominated(pts: np.ndarray) -> np.ndarray:
    """O(n^2) oracle straight from the dominance definition."""
    n = pts.shape[0]
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            a = ObjectiveVector.from_array(pts[j])
            b = ObjectiveVector.from_array(pts[i])
            if dominates(a, b):
                keep[i] = False
                break
    return keep


class TestNondominatedMask:
    def test_single_point_kept(self):
        assert nondominated_mask(np.array([[0.5, 0.5, 0.5, 0.5]])).tolist() == [True]

    def test_dominated_point_dropped(self):
        pts = np.array([[1.0, 1.0, 1.0, 1.0], [0.5, 0.5, 0.5, 0.5]])
        assert nondominated_mask(pts).tolist() == [True, False]

    def test_duplicates_all_kept(self):
        pts = np.array([[0.5, 0.5, 0.5, 0.5]] * 3)
        assert nondominated_mask(pts).tolist() == [True, True, True]

    def test_matches_brute_force_on_random_sets(self):
        rng = np.random.default_rng(42)
        for trial in range(30):
            n = int(rng.integers(1, 60))
            pts = rng.random((n, 4)).round(2)   # rounding forces ties
            got = nondominated_mask(pts)
            want = brute_force_nondominated(pts)
            assert got.tolist() == want.tolist(), f"trial {trial}"


class TestHypervolumeExact:
    def test_empty_set(self):
        assert hypervolume_exact([]) == 0.0

    def test_single_point_is_coordinate_product(self):
        assert hypervolume_exact([(0.5, 0.5, 0.5, 0.5)]) == pytest.approx(0.0625)

    def test_unit_point(self):
        assert hypervolume_exact([(1.0, 1.0, 1.0, 1.0)]) == pytest.approx(1.0)

    def test_out_of_range_rejected(self):
        with pytest.raises(InvalidArgumentError):
            hypervolume_exact([(1.5, 0.5, 0.5, 0.5)])
        with pytest.raises(InvalidArgumentError):
            hypervolume_exact([(-0.1, 0.5, 0.5, 0.5)])

    def test_two_point_union_by_inclusion_exclusion(self):
        # vol(A) + vol(B) - vol(A ∩ B) with the intersection at min coords
        a = (0.8, 0.4, 0.5, 0.6)
        b = (0.3, 0.9, 0.7, 0.5)
        inter = tuple(min(x, y) for x, y in zip(a, b))
        expected = (np.prod(a) + np.prod(b) - np.prod(inter))
        assert hypervolume_exact([a, b]) == pytest.approx(float(expected))

    def test_permutation_invariance(self):
        rng = np.random.default_rng(3)
        pts = [tuple(rng.random(4)) for _ in range(12)]
        base = hypervolume_exact(pts)
        for _ in range(5):
            perm = [pts[i] for i in rng.permutation(len(pts))]
            assert hypervolume_exact(perm) == pytest.approx(base, abs=1e-12)

    def test_monotone_in_points(self):
        rng = np.random.default_rng(4)
        pts: list[tuple] = []
        last = 0.0
        for _ in range(20):
            pts.append(tuple(rng.random(4)))
            hv = hypervolume_exact(pts)
            assert hv >= last - 1e-12
            last = hv

    def test_dominated_point_does_not_change_hv(self):
        pts = [(0.9, 0.8, 0.7, 0.6), (0.2, 0.3, 0.1, 0.4)]
        assert hypervolume_exact(pts) == pytest.approx(
            hypervolume_exact(pts[:1]))

    def test_agrees_with_monte_carlo(self):
        rng = np.random.default_rng(7)
        for trial in range(10):
            pts = rng.random((int(rng.integers(1, 13)), 4))
            exact = hypervolume_exact(pts)
            mc, se = hypervolume_mc(pts, samples=200_000, seed=trial)
            assert abs(exact - mc) <= max(0.01, 3 * se), f"trial {trial}"

    def test_lower_dimensional_cases(self):
        # the recursion bottoms out in the 1-D/2-D branches
        assert hypervolume_exact([(0.7,)], ref=(0.0,)) == pytest.approx(0.7)
        assert hypervolume_exact([(0.5, 0.5), (0.8, 0.2)],
                                 ref=(0.0, 0.0)) == pytest.approx(0.31)


class TestHypervolumeMC:
    def test_unit_point_covers_everything(self):
        est, se = hypervolume_mc([(1.0, 1.0, 1.0, 1.0)], samples=10_000)
        assert est == 1.0 and se == 0.0

    def test_empty_set(self):
        assert hypervolume_mc([], samples=100) == (0.0, 0.0)

    def test_zero_samples_rejected(self):
        with pytest.raises(InvalidArgumentError):
            hypervolume_mc([(0.5, 0.5, 0.5, 0.5)], samples=0)

    def test_single_point_binomial_bound(self):
        est, se = hypervolume_mc([(0.5, 0.5, 0.5, 0.5)], samples=1_000_000, seed=1)
        assert abs(est - 0.0625) <= 3 * se


class TestIgd:
    def test_identical_fronts(self):
        front = [(0.5, 0.5, 0.5, 0.5), (0.9, 0.1, 0.2, 0.3)]
        assert igd(front, front) == 0.0

    def test_unit_distance_case(self):
        assert igd([(1.0, 1.0, 1.0, 1.0)], [(0.0, 0.0, 0.0, 0.0)]) == pytest.approx(2.0)

    def test_empty_reference_rejected(self):
        with pytest.raises(InvalidArgumentError):
            igd([(0.5, 0.5, 0.5, 0.5)], [])

    def test_matches_nested_loop_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            f = rng.random((int(rng.integers(1, 8)), 4))
            r = rng.random((int(rng.integers(1, 8)), 4))
            expected = np.mean([min(np.linalg.norm(rp - fp) for fp in f) for rp in r])
            assert igd(f, r) == pytest.approx(float(expected), abs=1e-12)

    def test_zero_iff_reference_subset_of_front(self):
        front = [(0.5, 0.5, 0.5, 0.5), (0.9, 0.1, 0.2, 0.3)]
        assert igd(front, [front[1]]) == 0.0
        assert igd(front, [(0.6, 0.5, 0.5, 0.5)]) > 0.0


class TestGini:
    def test_equal_counts_zero(self):
        assert gini([3, 3, 3, 3]) == 0.0

    def test_single_district_zero(self):
        assert gini([7]) == 0.0

    def test_two_district_half(self):
        # sum |n_i - n_j| = 8; denominator 2 * 2^2 * 2 = 16
        assert gini([0, 4]) == pytest.approx(0.5)

    def test_all_zero_rejected(self):
        with pytest.raises(InvalidArgumentError):
            gini([0, 0, 0])

    def test_negative_rejected(self):
        with pytest.raises(InvalidArgumentError):
            gini([1, -1])

    def test_matches_formula_oracle_on_random_vectors(self):
        rng = np.random.default_rng(13)
        for _ in range(1000):
            d = int(rng.integers(1, 12))
            counts = rng.integers(0, 10, size=d)
            if counts.sum() == 0:
                counts[0] = 1
            total = 0.0
            for i in range(d):
                for j in range(d):
                    total += abs(int(counts[i]) - int(counts[j]))
            expected = total / (2.0 * d * d * (counts.sum() / d))
            assert gini(counts) == pytest.approx(expected, abs=1e-12)

    @given(st.lists(st.integers(min_value=0, max_value=50), min_size=1,
                    max_size=15).filter(lambda c: sum(c) > 0))
    @settings(max_examples=200)
    def test_range(self, counts):
        assert 0.0 <= gini(counts) <= 1.0


class TestRcr:
    def test_all_feasible(self):
        assert rcr([True] * 5) == 1.0

    def test_none_feasible(self):
        assert rcr([False] * 5) == 0.0

    def test_mixed(self):
        assert rcr([True] * 7 + [False] * 3) == pytest.approx(0.7)


class TestPortfolioIndicators:
    def _city(self):
        parcels = [
            make_parcel(0, 0, walk=82.0, carbon=100.0, green=1.0, air=1.0,
                        flood=False),
            make_parcel(1, 1, walk=60.0, carbon=400.0, green=0.0, air=0.0,
                        flood=True),
            make_parcel(2, 1, walk=100.0, carbon=200.0, green=0.5, air=0.5),
        ]
        return make_city(parcels, districts=2, budget=100.0, capacity=2)

    def test_transit_single(self):
        assert transit_access(self._city(), [0]) == pytest.approx(82.0)

    def test_transit_mean(self):
        assert transit_access(self._city(), [1, 2]) == pytest.approx(80.0)

    def test_transit_empty_rejected(self):
        with pytest.raises(InvalidArgumentError):
            transit_access(self._city(), [])

    def test_env_score_best_parcel(self):
        # carbon sub 100*(1-100/400)=75, green 100, flood 100, air 100
        expected = 0.4 * 75 + 0.3 * 100 + 0.2 * 100 + 0.1 * 100
        assert env_score(self._city(), [0]) == pytest.approx(expected)

    def test_env_score_worst_parcel_floor(self):
        # carbon sub 0, green 0, flood 0, air 0
        assert env_score(self._city(), [1]) == pytest.approx(0.0)

    def test_env_score_two_parcel_manual(self):
        # means over {0,1}: carbon 250 -> 37.5, green 0.5 -> 50,
        # flood 0.5 -> 50, air 0.5 -> 50
        expected = 0.4 * 37.5 + 0.3 * 50 + 0.2 * 50 + 0.1 * 50
        assert env_score(self._city(), [0, 1]) == pytest.approx(expected)

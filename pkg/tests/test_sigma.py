import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rodeo.dataset import Dataset
from rodeo.sigma import (
    HALF_SQRT_PI,
    MEDIAN_CONSTANT,
    lower_median,
    nearest_pairs,
    sigma_median,
    sigma_rice,
)


def points_013(Y=(0.0, 0.0, 0.0)):
    return Dataset(np.array([[0.0], [1.0], [3.0]]), np.array(Y))


class TestNearestPairs:
    def test_smallest_gap(self):
        assert nearest_pairs(points_013(), 1) == [(0, 1, 1.0)]

    def test_all_pairs_ascending(self):
        pairs = nearest_pairs(points_013(), 3)
        assert [(i, l) for i, l, _ in pairs] == [(0, 1), (1, 2), (0, 2)]
        assert [dist for *_, dist in pairs] == [1.0, 2.0, 3.0]

    def test_duplicate_rows_rank_first(self):
        X = np.array([[0.3, 0.1], [0.9, 0.9], [0.3, 0.1], [0.5, 0.5]])
        pairs = nearest_pairs(Dataset(X, np.zeros(4)), 2)
        assert pairs[0] == (0, 2, 0.0)

    def test_ties_are_lexicographic(self):
        # equally spaced points: every neighbour gap is 1
        X = np.arange(5.0)[:, None]
        pairs = nearest_pairs(Dataset(X, np.zeros(5)), 4)
        assert [(i, l) for i, l, _ in pairs] == [(0, 1), (1, 2), (2, 3), (3, 4)]

    @pytest.mark.parametrize("J", [0, 4])
    def test_j_out_of_range(self, J):
        with pytest.raises(ValueError):
            nearest_pairs(points_013(), J)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(size=(25, 3))
        brute = sorted(
            (float(np.linalg.norm(X[i] - X[l])), i, l)
            for i in range(25)
            for l in range(i + 1, 25)
        )[:20]
        got = nearest_pairs(Dataset(X, np.zeros(25)), 20)
        assert [(i, l) for i, l, _ in got] == [(i, l) for _, i, l in brute]
        np.testing.assert_allclose([dist for *_, dist in got], [dist for dist, *_ in brute], rtol=1e-14)


class TestRice:
    def test_two_points(self):
        est = sigma_rice(Dataset(np.array([[0.0], [1.0]]), np.array([0.0, 2.0])), 1)
        assert est.sigma2 == 2.0
        assert est.sigma == pytest.approx(math.sqrt(2.0))
        assert est.D == 1.0

    def test_constant_response(self):
        rng = np.random.default_rng(1)
        est = sigma_rice(Dataset(rng.uniform(size=(30, 2)), np.full(30, 4.0)), 10)
        assert est.sigma2 == 0.0

    def test_max_distance_grows_with_j(self):
        rng = np.random.default_rng(2)
        data = Dataset(rng.uniform(size=(40, 2)), rng.normal(size=40))
        Ds = [sigma_rice(data, J).D for J in (1, 5, 20, 100)]
        assert Ds == sorted(Ds)


class TestMedian:
    def test_printed_scaling_with_equal_differences(self):
        data = Dataset(np.array([[0.0], [1.0], [3.0]]), np.array([0.0, 2.0, 0.0]))
        # pairs (0,1) and (1,2) both have |dY| = 2
        est = sigma_median(data, 2, constant=HALF_SQRT_PI)
        assert est.sigma == pytest.approx(math.sqrt(math.pi), rel=1e-15)

    def test_default_constant_is_consistent_for_gaussian_differences(self):
        # median |N(0, 2)| = sqrt(2) * Phi^{-1}(3/4)
        assert MEDIAN_CONSTANT * math.sqrt(2.0) * 0.6744897501960817 == pytest.approx(1.0, rel=1e-12)

    def test_lower_middle_median(self):
        assert lower_median([4.0, 1.0]) == 1.0
        assert lower_median([3.0, 1.0, 2.0]) == 2.0

    def test_robust_to_one_wild_response(self):
        rng = np.random.default_rng(3)
        X = rng.uniform(size=(200, 2))
        Y = rng.normal(size=200)
        clean = Dataset(X, Y)
        Y2 = Y.copy()
        i, l, _ = nearest_pairs(clean, 1)[0]
        Y2[i] += 1e3
        dirty = clean.with_response(Y2)
        assert sigma_median(dirty).sigma < 2 * sigma_median(clean).sigma
        assert sigma_rice(dirty).sigma > 50 * sigma_rice(clean).sigma


@settings(max_examples=30, deadline=None)
@given(scale=st.floats(0.01, 100.0), shift=st.floats(-100.0, 100.0), seed=st.integers(0, 10_000))
def test_scale_equivariance_and_shift_invariance(scale, shift, seed):
    rng = np.random.default_rng(seed)
    base = Dataset(rng.uniform(size=(30, 2)), rng.normal(size=30))
    moved = base.with_response(scale * base.Y + shift)
    for fn in (sigma_rice, sigma_median):
        a, b = fn(base, 10), fn(moved, 10)
        assert b.sigma == pytest.approx(scale * a.sigma, rel=1e-9, abs=1e-9)
        assert b.D == a.D

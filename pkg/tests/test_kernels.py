"""Tests for bandwidth selection, basis sampling, and kernel features."""

import numpy as np
import pytest

from semismi import (
    BasisSet,
    feature_columns,
    gaussian_gram,
    gaussian_kernel,
    median_heuristic,
    sample_basis,
)


def test_median_heuristic_single_pair():
    # one pair at distance 2 forces sigma = 2 / sqrt(2)
    assert median_heuristic([[0.0], [2.0]]) == pytest.approx(np.sqrt(2.0))


def test_median_heuristic_three_points():
    # distances {1, 2, 3}, median 2
    assert median_heuristic([[0.0], [1.0], [3.0]]) == pytest.approx(np.sqrt(2.0))


def test_median_heuristic_even_pair_count_averages():
    # points 0,1,2,3 -> distances {1,1,1,2,2,3}, central pair (1, 2)
    sigma = median_heuristic([[0.0], [1.0], [2.0], [3.0]])
    assert sigma == pytest.approx(1.5 / np.sqrt(2.0))


def test_median_heuristic_standard_normal_range():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        sigma = median_heuristic(rng.standard_normal((100, 2)))
        assert 0.7 <= sigma <= 1.7


def test_median_heuristic_matches_brute_force():
    rng = np.random.default_rng(7)
    pts = rng.standard_normal((40, 3))
    dists = [
        np.linalg.norm(pts[i] - pts[j])
        for i in range(40)
        for j in range(i + 1, 40)
    ]
    expected = np.median(dists) / np.sqrt(2.0)
    assert median_heuristic(pts) == pytest.approx(expected, rel=1e-12)


def test_median_heuristic_translation_and_scale():
    rng = np.random.default_rng(1)
    pts = rng.standard_normal((30, 2))
    base = median_heuristic(pts)
    assert median_heuristic(pts + 5.0) == pytest.approx(base)
    assert median_heuristic(3.0 * pts) == pytest.approx(3.0 * base)


def test_median_heuristic_order_invariant():
    rng = np.random.default_rng(2)
    pts = rng.standard_normal((25, 2))
    perm = rng.permutation(25)
    assert median_heuristic(pts[perm]) == pytest.approx(median_heuristic(pts))


def test_median_heuristic_errors():
    with pytest.raises(ValueError, match="insufficient samples"):
        median_heuristic([[1.0]])
    with pytest.raises(ValueError, match="degenerate bandwidth"):
        median_heuristic([[1.0], [1.0], [1.0]])


def test_median_heuristic_subsamples_large_pools():
    rng = np.random.default_rng(0)
    pts = rng.standard_normal((3000, 1))
    sub = median_heuristic(pts, max_points=500)
    full = np.median(
        [abs(a - b) for i, a in enumerate(pts[:, 0]) for b in pts[i + 1 :, 0]]
    ) / np.sqrt(2.0)
    assert sub == pytest.approx(full, rel=0.1)


def test_gaussian_kernel_values():
    assert gaussian_kernel([0.0], [0.0], 1.0) == 1.0
    assert gaussian_kernel([0.0], [2.0], np.sqrt(2.0)) == pytest.approx(np.exp(-1.0))
    # symmetry
    a, b = [0.3, -1.2], [1.0, 0.5]
    assert gaussian_kernel(a, b, 0.7) == pytest.approx(gaussian_kernel(b, a, 0.7))


def test_gaussian_kernel_bad_inputs():
    with pytest.raises(ValueError, match="dimension mismatch"):
        gaussian_kernel([0.0], [0.0, 1.0], 1.0)
    with pytest.raises(ValueError, match="bandwidth"):
        gaussian_kernel([0.0], [1.0], 0.0)
    with pytest.raises(ValueError, match="bandwidth"):
        gaussian_kernel([0.0], [1.0], -2.0)


def test_gaussian_gram_matches_scalar_kernel():
    rng = np.random.default_rng(5)
    centers = rng.standard_normal((4, 2))
    points = rng.standard_normal((6, 2))
    G = gaussian_gram(centers, points, 0.9)
    assert G.shape == (4, 6)
    for l in range(4):
        for i in range(6):
            assert G[l, i] == pytest.approx(
                gaussian_kernel(centers[l], points[i], 0.9)
            )


def test_gaussian_gram_self_diagonal_is_one():
    rng = np.random.default_rng(6)
    pts = rng.standard_normal((5, 3))
    G = gaussian_gram(pts, pts, 1.3)
    np.testing.assert_allclose(np.diag(G), 1.0)


def test_sample_basis_within_capacity():
    rng = np.random.default_rng(0)
    basis = sample_basis(
        rng.standard_normal((500, 2)), rng.standard_normal((500, 1)), 200, seed=4
    )
    assert basis.b == 200
    # points are actual pool members, no duplicates per side
    assert len(np.unique(basis.x_basis, axis=0)) == 200
    assert len(np.unique(basis.y_basis, axis=0)) == 200


def test_sample_basis_clamps_to_smaller_pool():
    rng = np.random.default_rng(1)
    basis = sample_basis(
        rng.standard_normal((50, 2)), rng.standard_normal((80, 1)), 200, seed=0
    )
    assert basis.b == 50
    assert basis.x_basis.shape == (50, 2)
    assert basis.y_basis.shape == (50, 1)


def test_sample_basis_points_come_from_pools():
    rng = np.random.default_rng(2)
    pool_x = rng.standard_normal((30, 2))
    pool_y = rng.standard_normal((40, 1))
    basis = sample_basis(pool_x, pool_y, 10, seed=3)
    for row in basis.x_basis:
        assert any(np.array_equal(row, p) for p in pool_x)
    for row in basis.y_basis:
        assert any(np.array_equal(row, p) for p in pool_y)


def test_sample_basis_deterministic():
    rng = np.random.default_rng(3)
    pool_x = rng.standard_normal((60, 2))
    pool_y = rng.standard_normal((60, 1))
    b1 = sample_basis(pool_x, pool_y, 20, seed=11)
    b2 = sample_basis(pool_x, pool_y, 20, seed=11)
    np.testing.assert_array_equal(b1.x_basis, b2.x_basis)
    np.testing.assert_array_equal(b1.y_basis, b2.y_basis)
    assert b1.sigma_x == b2.sigma_x and b1.sigma_y == b2.sigma_y


def test_basis_set_validation():
    with pytest.raises(ValueError, match="equal length"):
        BasisSet(np.zeros((3, 1)), np.zeros((2, 1)), 1.0, 1.0)
    with pytest.raises(ValueError, match="bandwidth"):
        BasisSet(np.zeros((2, 1)), np.ones((2, 1)), -1.0, 1.0)


def test_feature_columns_identity_at_basis_points():
    rng = np.random.default_rng(4)
    pool = rng.standard_normal((10, 2))
    basis = sample_basis(pool, pool, 5, seed=0)
    K, L = feature_columns(basis, basis.x_basis, basis.y_basis)
    np.testing.assert_allclose(np.diag(K), 1.0)
    np.testing.assert_allclose(np.diag(L), 1.0)
    assert K.shape == (5, 5) and L.shape == (5, 5)


def test_feature_columns_shapes():
    rng = np.random.default_rng(8)
    basis = sample_basis(
        rng.standard_normal((20, 3)), rng.standard_normal((20, 1)), 7, seed=1
    )
    K, L = feature_columns(basis, rng.standard_normal((13, 3)), rng.standard_normal((9, 1)))
    assert K.shape == (7, 13)
    assert L.shape == (7, 9)
    assert np.all((K > 0) & (K <= 1)) and np.all((L > 0) & (L <= 1))

"""Gaussian kernel features for the density-ratio model.

A pair (x, y) is scored by b basis functions, each the product of a
Gaussian bump centred at a sampled x point and one centred at a sampled
y point.  This module owns bandwidth selection, basis sampling, and the
kernel feature matrices everything else is built from.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

__all__ = [
    "BasisSet",
    "median_heuristic",
    "gaussian_kernel",
    "gaussian_gram",
    "sample_basis",
    "feature_columns",
]


def as_points(samples, name: str = "samples") -> np.ndarray:
    """Coerce to an (N, d) float array; 1-D input becomes a column."""
    pts = np.asarray(samples, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D, got shape {pts.shape}")
    return pts


def _check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not np.isfinite(sigma) or sigma <= 0.0:
        raise ValueError(f"bandwidth must be positive and finite, got {sigma}")
    return sigma


def median_heuristic(samples, max_points: int = 2000, seed: int = 0) -> float:
    """Kernel bandwidth: median pairwise Euclidean distance over sqrt(2).

    The median runs over unordered distinct pairs only; self-distances
    would bias it toward zero.  Pools with more than ``max_points``
    points are reduced to a seeded uniform subsample first, since the
    O(N^2) distance computation dominates otherwise.

    Raises
    ------
    ValueError
        If fewer than two samples are given, or all samples coincide
        (median distance zero gives a degenerate bandwidth).
    """
    pts = as_points(samples)
    if pts.shape[0] < 2:
        raise ValueError("insufficient samples for the median heuristic (need >= 2)")
    if pts.shape[0] > max_points:
        rng = np.random.default_rng(seed)
        pts = pts[rng.choice(pts.shape[0], size=max_points, replace=False)]
    med = float(np.median(pdist(pts)))
    if med <= 0.0:
        raise ValueError("degenerate bandwidth: median pairwise distance is zero")
    return med / float(np.sqrt(2.0))


def gaussian_kernel(x, x2, sigma: float) -> float:
    """exp(-||x - x2||^2 / (2 sigma^2)) for a single pair of points."""
    xa = np.asarray(x, dtype=float).ravel()
    xb = np.asarray(x2, dtype=float).ravel()
    if xa.shape != xb.shape:
        raise ValueError(f"dimension mismatch: {xa.shape} vs {xb.shape}")
    sigma = _check_sigma(sigma)
    diff = xa - xb
    return float(np.exp(-float(diff @ diff) / (2.0 * sigma * sigma)))


def gaussian_gram(centers, points, sigma: float) -> np.ndarray:
    """Kernel matrix G[l, i] = exp(-||c_l - p_i||^2 / (2 sigma^2))."""
    c = as_points(centers, "centers")
    p = as_points(points, "points")
    if c.shape[1] != p.shape[1]:
        raise ValueError(
            f"dimension mismatch: centers have d={c.shape[1]}, points d={p.shape[1]}"
        )
    sigma = _check_sigma(sigma)
    d2 = cdist(c, p, metric="sqeuclidean")
    return np.exp(-d2 / (2.0 * sigma * sigma))


@dataclass
class BasisSet:
    """Paired kernel centres and per-side bandwidths of the ratio model."""

    x_basis: np.ndarray
    y_basis: np.ndarray
    sigma_x: float
    sigma_y: float

    def __post_init__(self):
        self.x_basis = as_points(self.x_basis, "x_basis")
        self.y_basis = as_points(self.y_basis, "y_basis")
        if self.x_basis.shape[0] != self.y_basis.shape[0]:
            raise ValueError("x_basis and y_basis must have equal length")
        if self.x_basis.shape[0] < 1:
            raise ValueError("basis must contain at least one point")
        self.sigma_x = _check_sigma(self.sigma_x)
        self.sigma_y = _check_sigma(self.sigma_y)

    @property
    def b(self) -> int:
        return self.x_basis.shape[0]


def sample_basis(pool_x, pool_y, b: int, seed: int = 0) -> BasisSet:
    """Draw b basis centres per side, uniformly without replacement.

    The two sides are sampled independently from their pools.  If b
    exceeds a pool size it is clamped to the smaller pool so the two
    basis lists stay aligned.  Each side's bandwidth is the median
    pairwise distance of its full pool, so the kernel value at the
    median distance is e^{-1/2}; narrower widths leave visible ripple
    in the fitted ratio when the true ratio is nearly flat.
    Deterministic for a fixed seed.
    """
    px = as_points(pool_x, "pool_x")
    py = as_points(pool_y, "pool_y")
    if px.shape[0] == 0 or py.shape[0] == 0:
        raise ValueError("basis sampling pool is empty")
    if b < 1:
        raise ValueError(f"basis count must be >= 1, got {b}")
    b_eff = min(b, px.shape[0], py.shape[0])
    rng = np.random.default_rng(seed)
    idx_x = rng.choice(px.shape[0], size=b_eff, replace=False)
    idx_y = rng.choice(py.shape[0], size=b_eff, replace=False)
    root2 = float(np.sqrt(2.0))
    sigma_x = root2 * median_heuristic(px, seed=seed)
    sigma_y = root2 * median_heuristic(py, seed=seed)
    return BasisSet(px[idx_x], py[idx_y], sigma_x, sigma_y)


def feature_columns(basis: BasisSet, xs, ys) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample kernel columns (K, L) with K[l, i] = K(x_basis_l, xs_i).

    The joint feature of a pair (xs_i, ys_j) is the Hadamard product of
    column i of K with column j of L.
    """
    K = gaussian_gram(basis.x_basis, xs, basis.sigma_x)
    L = gaussian_gram(basis.y_basis, ys, basis.sigma_y)
    return K, L

"""Closed-form ridge fitting of the joint density ratio.

The model is r(x, y) = sum_l alpha_l K(x_l, x) L(y_l, y): a linear
combination of separable Gaussian features.  For a fixed transport plan
the weights minimize a quadratic, so they come from one symmetric
positive-definite solve; no iterative optimizer is involved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .kernels import BasisSet, feature_columns

__all__ = [
    "RatioModel",
    "quadratic_term",
    "mixed_linear_term",
    "solve_alpha",
    "ratio_pairs",
    "ratio_cross",
]

#: Relative residual accepted from the linear solver before the jitter retry.
SOLVE_RTOL = 1e-8

#: Scale of the trace-proportional jitter added on a failed first solve.
JITTER_SCALE = 1e-10


@dataclass
class RatioModel:
    """Fitted ratio model: a basis, its weight vector, and the ridge used."""

    basis: BasisSet
    alpha: np.ndarray
    lam: float = 0.0

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float).ravel()
        if self.alpha.shape[0] != self.basis.b:
            raise ValueError(
                f"alpha has length {self.alpha.shape[0]}, basis has {self.basis.b}"
            )

    def pairs(self, xs, ys) -> np.ndarray:
        """Ratio values r(xs_i, ys_i) on aligned samples."""
        K, L = feature_columns(self.basis, xs, ys)
        return ratio_pairs(self.alpha, K, L)

    def cross(self, xs, ys) -> np.ndarray:
        """Full matrix of ratio values r(xs_i, ys_j)."""
        K, L = feature_columns(self.basis, xs, ys)
        return ratio_cross(self.alpha, K, L)


def quadratic_term(K_all: np.ndarray, L_all: np.ndarray) -> np.ndarray:
    """Quadratic coefficient H of the ridge objective.

    H averages phi(x, y) phi(x, y)^T over every cross pair of the
    columns of K_all with the columns of L_all, where phi is the
    elementwise product of a K column and an L column.  Because the
    features factorize, the double sum over pairs collapses to

        H = (K_all K_all^T) * (L_all L_all^T) / (N_x * N_y)

    with * elementwise — two rank-b Gram products instead of an
    N_x * N_y loop.
    """
    K_all = np.asarray(K_all, dtype=float)
    L_all = np.asarray(L_all, dtype=float)
    if K_all.shape[0] != L_all.shape[0]:
        raise ValueError("K_all and L_all must have the same number of basis rows")
    n_x = K_all.shape[1]
    n_y = L_all.shape[1]
    if n_x == 0 or n_y == 0:
        raise ValueError("quadratic term needs at least one sample per side")
    return (K_all @ K_all.T) * (L_all @ L_all.T) / float(n_x * n_y)


def mixed_linear_term(
    K_pair: np.ndarray,
    L_pair: np.ndarray,
    K_unpair: np.ndarray,
    L_unpair: np.ndarray,
    plan: np.ndarray,
    beta: float,
) -> np.ndarray:
    """Linear coefficient h: paired-sample mean blended with the plan.

    The paired part averages phi over the n labelled couples; the
    unpaired part takes the plan-weighted sum of phi over all
    n_x * n_y candidate couples, evaluated without materializing the
    b x n_x x n_y tensor:

        sum_ij plan_ij K[:, i] * L[:, j] = rowsum((K @ plan) * L).

    Either side may be absent (beta = 1 skips the plan, n = 0 with
    beta = 0 skips the pairs); at least one must contribute.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    K_pair = np.asarray(K_pair, dtype=float)
    L_pair = np.asarray(L_pair, dtype=float)
    n = K_pair.shape[1]
    if L_pair.shape != K_pair.shape[:1] + (n,):
        raise ValueError("paired feature blocks must share shape (b, n)")
    parts = []
    if beta > 0.0:
        if n == 0:
            raise ValueError("beta > 0 requires at least one paired sample")
        parts.append((beta / n) * np.einsum("bi,bi->b", K_pair, L_pair))
    if beta < 1.0:
        K_unpair = np.asarray(K_unpair, dtype=float)
        L_unpair = np.asarray(L_unpair, dtype=float)
        plan = np.asarray(plan, dtype=float)
        if plan.shape != (K_unpair.shape[1], L_unpair.shape[1]):
            raise ValueError(
                f"plan shape {plan.shape} does not match unpaired features "
                f"({K_unpair.shape[1]}, {L_unpair.shape[1]})"
            )
        parts.append((1.0 - beta) * np.sum((K_unpair @ plan) * L_unpair, axis=1))
    return sum(parts)


def solve_alpha(H: np.ndarray, h: np.ndarray, lam: float) -> np.ndarray:
    """Ridge weights alpha = (H + lam I)^{-1} h via an SPD solve.

    Solves the regularized normal equations directly rather than
    forming an inverse.  If the Cholesky-backed solve fails outright or
    leaves a relative residual above ``SOLVE_RTOL``, one retry adds a
    tiny trace-proportional jitter; a second failure raises, since the
    system is then singular at this ``lam`` and a larger ridge penalty
    is the correct fix.
    """
    H = np.asarray(H, dtype=float)
    h = np.asarray(h, dtype=float).ravel()
    b = h.shape[0]
    if H.shape != (b, b):
        raise ValueError(f"H has shape {H.shape}, expected ({b}, {b})")
    if lam < 0.0:
        raise ValueError(f"ridge penalty must be non-negative, got {lam}")

    h_norm = float(np.linalg.norm(h))
    if h_norm == 0.0:
        return np.zeros(b)
    tol = SOLVE_RTOL * h_norm

    def _try(ridge: float):
        A = H + ridge * np.eye(b)
        try:
            alpha = scipy.linalg.solve(A, h, assume_a="pos")
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            return None
        if not np.all(np.isfinite(alpha)):
            return None
        if float(np.linalg.norm(A @ alpha - h)) > tol:
            return None
        return alpha

    alpha = _try(float(lam))
    if alpha is None:
        jitter = JITTER_SCALE * float(np.trace(H)) / b
        alpha = _try(float(lam) + jitter)
    if alpha is None:
        raise np.linalg.LinAlgError(
            "ridge system remained singular after jitter; increase lam"
        )
    return alpha


def ratio_pairs(alpha: np.ndarray, K: np.ndarray, L: np.ndarray) -> np.ndarray:
    """Ratio values on aligned columns: r_i = sum_l alpha_l K[l, i] L[l, i]."""
    alpha = np.asarray(alpha, dtype=float).ravel()
    return alpha @ (np.asarray(K, dtype=float) * np.asarray(L, dtype=float))


def ratio_cross(alpha: np.ndarray, K: np.ndarray, L: np.ndarray) -> np.ndarray:
    """All cross ratios: R[i, j] = sum_l alpha_l K[l, i] L[l, j]."""
    alpha = np.asarray(alpha, dtype=float).ravel()
    K = np.asarray(K, dtype=float)
    L = np.asarray(L, dtype=float)
    return (K * alpha[:, None]).T @ L

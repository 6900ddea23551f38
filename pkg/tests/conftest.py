"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest

from semismi import SampleSet, sample_basis


def make_dataset(seed=0, n=8, n_x=15, n_y=12, d_x=2, d_y=1, linked=False):
    """Small random dataset; ``linked`` makes y a noisy copy of x[:, :1]."""
    rng = np.random.default_rng(seed)
    paired_x = rng.standard_normal((n, d_x))
    if linked:
        paired_y = paired_x[:, :d_y] + 0.1 * rng.standard_normal((n, d_y))
    else:
        paired_y = rng.standard_normal((n, d_y))
    unpaired_x = rng.standard_normal((n_x, d_x))
    unpaired_y = rng.standard_normal((n_y, d_y))
    return SampleSet(paired_x, paired_y, unpaired_x, unpaired_y)


def assert_valid_plan(plan, n_x, n_y, tol=1e-6):
    """Check the invariants every returned transport plan must satisfy."""
    pi = plan.pi
    assert pi.shape == (n_x, n_y)
    assert np.all(pi >= 0.0)
    np.testing.assert_allclose(pi.sum(), 1.0, atol=tol)
    np.testing.assert_allclose(pi.sum(axis=1), np.full(n_x, 1.0 / n_x), atol=tol)
    np.testing.assert_allclose(pi.sum(axis=0), np.full(n_y, 1.0 / n_y), atol=tol)


@pytest.fixture
def small_data():
    return make_dataset(seed=3)


@pytest.fixture
def small_basis(small_data):
    return sample_basis(small_data.pooled_x, small_data.pooled_y, 6, seed=1)

"""From soft plans to hard correspondences.

A fitted plan weights every cross pair; matching applications need a
one-to-one assignment instead.  This module rounds plans to
assignments, scores them against known correspondences, and lays items
out on a fixed grid of positions by treating the grid coordinates as
the second variable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from .estimator import EstimatorConfig, SampleSet, fit
from .kernels import as_points
from .transport import TransportPlan

__all__ = [
    "Assignment",
    "GridSpec",
    "plan_to_assignment",
    "topk_accuracy",
    "normalize_positions",
    "grid_summarize",
]


def _plan_matrix(plan) -> np.ndarray:
    pi = plan.pi if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=float)
    if pi.ndim != 2:
        raise ValueError(f"plan must be a matrix, got shape {pi.shape}")
    return pi


@dataclass
class Assignment:
    """One-to-one pairs covering the smaller side of the plan."""

    pairs: list

    def __post_init__(self):
        self.pairs = [(int(i), int(j)) for i, j in self.pairs]
        xs = [i for i, _ in self.pairs]
        ys = [j for _, j in self.pairs]
        if len(set(xs)) != len(xs) or len(set(ys)) != len(ys):
            raise ValueError("assignment repeats an index")

    def total_mass(self, plan) -> float:
        pi = _plan_matrix(plan)
        return float(sum(pi[i, j] for i, j in self.pairs))


def plan_to_assignment(plan, method: str = "optimal") -> Assignment:
    """Round a plan to min(n_x, n_y) one-to-one pairs.

    ``greedy`` repeatedly takes the largest remaining entry (smallest
    (row, column) on ties) and strikes out its row and column —
    quadratic and simple.  ``optimal`` solves the maximum-weight
    bipartite matching with the Hungarian method, which can only
    capture at least as much mass.
    """
    pi = _plan_matrix(plan)
    n_x, n_y = pi.shape
    m = min(n_x, n_y)
    if method == "optimal":
        rows, cols = linear_sum_assignment(pi, maximize=True)
        pairs = list(zip(rows.tolist(), cols.tolist()))
    elif method == "greedy":
        work = pi.copy()
        pairs = []
        for _ in range(m):
            # argmax scans in row-major order, so the first maximum is
            # exactly the lexicographically smallest tied (i, j).
            flat = int(np.argmax(work))
            i, j = divmod(flat, n_y)
            pairs.append((i, j))
            work[i, :] = -np.inf
            work[:, j] = -np.inf
        pairs.sort()
    else:
        raise ValueError(f"unknown method {method!r}; use 'greedy' or 'optimal'")
    return Assignment(pairs)


def topk_accuracy(plan, truth, k: int = 1) -> float:
    """Fraction of true pairs (i, j) whose entry ranks in row i's top k.

    Within a row, equal entries are ordered by column index, so a
    uniform row credits only its k leftmost columns.
    """
    pi = _plan_matrix(plan)
    if k < 1:
        raise ValueError("k must be >= 1")
    truth = [(int(i), int(j)) for i, j in truth]
    if not truth:
        raise ValueError("truth is empty")
    hits = 0
    for i, j in truth:
        row = pi[i]
        value = row[j]
        rank = int(np.count_nonzero(row > value)) + int(
            np.count_nonzero(row[:j] == value)
        )
        hits += rank < k
    return hits / len(truth)


@dataclass
class GridSpec:
    """Target positions plus fixed item-to-position correspondences."""

    positions: np.ndarray
    anchors: list

    def __post_init__(self):
        self.positions = as_points(self.positions, "positions")
        uniq = {tuple(p) for p in self.positions}
        if len(uniq) != self.positions.shape[0]:
            raise ValueError("grid positions must be distinct")
        self.anchors = [(int(i), int(p)) for i, p in self.anchors]
        items = [i for i, _ in self.anchors]
        spots = [p for _, p in self.anchors]
        if len(set(items)) != len(items) or len(set(spots)) != len(spots):
            raise ValueError("conflicting anchors: an index is fixed twice")
        for _, p in self.anchors:
            if not 0 <= p < self.positions.shape[0]:
                raise ValueError(f"anchor position index {p} out of range")


def normalize_positions(positions: np.ndarray) -> np.ndarray:
    """Zero-mean, unit-variance grid coordinates (flat axes untouched),
    so kernel bandwidths behave the same across grid shapes."""
    positions = as_points(positions, "positions")
    centered = positions - positions.mean(axis=0)
    scale = centered.std(axis=0)
    scale[scale == 0.0] = 1.0
    return centered / scale


def grid_summarize(features, grid: GridSpec, config: EstimatorConfig) -> list:
    """Assign items to grid positions, keeping anchored items in place.

    Items are the x samples; normalized grid coordinates are the y
    samples; anchors form the paired set and everything else is
    unpaired.  After fitting, the plan over the free items/positions is
    rounded with the Hungarian method.  Returns (item_index,
    position_index) pairs sorted by position; when there are more items
    than positions, the surplus items are simply absent from the result.
    """
    items = as_points(features, "features")
    n_items = items.shape[0]
    for i, _ in grid.anchors:
        if not 0 <= i < n_items:
            raise ValueError(f"anchor item index {i} out of range")
    coords = normalize_positions(grid.positions)

    anchored_items = [i for i, _ in grid.anchors]
    anchored_spots = [p for _, p in grid.anchors]
    free_items = [i for i in range(n_items) if i not in set(anchored_items)]
    free_spots = [p for p in range(coords.shape[0]) if p not in set(anchored_spots)]

    placements = list(grid.anchors)
    if free_items and free_spots:
        beta = config.beta if grid.anchors else 0.0
        data = SampleSet(
            items[anchored_items],
            coords[anchored_spots],
            items[free_items],
            coords[free_spots],
        )
        result = fit(data, replace(config, beta=beta))
        assignment = plan_to_assignment(result.plan, method="optimal")
        placements.extend(
            (free_items[i], free_spots[j]) for i, j in assignment.pairs
        )
    return sorted(placements, key=lambda ip: ip[1])

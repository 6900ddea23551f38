"""Dataset construction: synthetic generators and tabular ingestion.

The synthetic kinds cover the standard dependence shapes (independent,
linear, sinusoidal, principal-component projection).  Paired samples
are drawn jointly; unpaired pools are fresh independent draws from the
same marginals, so nothing secretly pairs them.  Tabular data enters as
delimiter-separated numeric files and is split into an (x, y) view by
cross-correlation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .estimator import SampleSet
from .kernels import as_points

__all__ = [
    "SyntheticSpec",
    "generate",
    "load_table",
    "split_features",
    "make_semi_supervised",
]

KINDS = ("random", "linear", "nonlinear", "pca")


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one synthetic dataset.

    ``dim`` and ``noise_sd`` default per kind: dimension 1 except for
    the 2-D pca inputs; noise 0.1 for linear (variance 0.01) and 0 for
    the other kinds, whose maps are exact.
    """

    kind: str
    n: int
    n_x: int
    n_y: int
    dim: int | None = None
    noise_sd: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.n < 0 or self.n_x < 0 or self.n_y < 0:
            raise ValueError("sample counts must be non-negative")
        if self.dim is not None and self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.noise_sd is not None and self.noise_sd < 0:
            raise ValueError("noise_sd must be non-negative")

    @property
    def resolved_dim(self) -> int:
        if self.dim is not None:
            return self.dim
        return 2 if self.kind == "pca" else 1

    @property
    def resolved_noise_sd(self) -> float:
        if self.noise_sd is not None:
            return self.noise_sd
        return 0.1 if self.kind == "linear" else 0.0


def _top_component(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and first principal axis of a point cloud, sign-fixed."""
    mean = points.mean(axis=0)
    centered = points - mean
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    w = vt[0]
    # Deterministic orientation: largest-magnitude coordinate positive.
    lead = np.argmax(np.abs(w))
    if w[lead] < 0:
        w = -w
    return mean, w


def generate(spec: SyntheticSpec) -> SampleSet:
    """Draw a SampleSet for the requested kind, fully seed-determined.

    Three independent streams (paired, x pool, y pool) guarantee that
    the pools carry no hidden pairing with each other or with the
    paired couples.
    """
    dim = spec.resolved_dim
    sd = spec.resolved_noise_sd
    rng_pair, rng_x, rng_y = (
        np.random.default_rng(s) for s in np.random.SeedSequence(spec.seed).spawn(3)
    )

    if spec.kind == "random":
        paired_x = rng_pair.standard_normal((spec.n, dim))
        paired_y = rng_pair.standard_normal((spec.n, dim))
        unpaired_x = rng_x.standard_normal((spec.n_x, dim))
        unpaired_y = rng_y.standard_normal((spec.n_y, dim))
    elif spec.kind == "linear":
        paired_x = rng_pair.standard_normal((spec.n, dim))
        paired_y = 0.5 * paired_x + sd * rng_pair.standard_normal((spec.n, dim))
        unpaired_x = rng_x.standard_normal((spec.n_x, dim))
        hidden = rng_y.standard_normal((spec.n_y, dim))
        unpaired_y = 0.5 * hidden + sd * rng_y.standard_normal((spec.n_y, dim))
    elif spec.kind == "nonlinear":
        paired_x = rng_pair.standard_normal((spec.n, dim))
        paired_y = np.sin(paired_x) + sd * rng_pair.standard_normal((spec.n, dim))
        unpaired_x = rng_x.standard_normal((spec.n_x, dim))
        hidden = rng_y.standard_normal((spec.n_y, dim))
        unpaired_y = np.sin(hidden) + sd * rng_y.standard_normal((spec.n_y, dim))
    else:  # pca
        paired_x = rng_pair.standard_normal((spec.n, dim))
        unpaired_x = rng_x.standard_normal((spec.n_x, dim))
        hidden = rng_y.standard_normal((spec.n_y, dim))
        pool = np.vstack([paired_x, unpaired_x])
        if pool.shape[0] == 0:
            raise ValueError("pca kind needs at least one x sample to fit the axis")
        mean, w = _top_component(pool)
        paired_y = (paired_x - mean) @ w.reshape(-1, 1)
        unpaired_y = (hidden - mean) @ w.reshape(-1, 1)

    return SampleSet(paired_x, paired_y, unpaired_x, unpaired_y)


def load_table(path, delimiter: str | None = None, has_header: bool | None = None) -> np.ndarray:
    """Read a rectangular numeric table; sniffs delimiter and header.

    Returns an (n_rows, n_cols) float array.  ``delimiter=None`` picks
    comma when the first line contains one, else whitespace;
    ``has_header=None`` skips the first line when any of its fields is
    non-numeric.
    """
    with open(path) as fh:
        first = fh.readline()
    if not first.strip():
        raise ValueError(f"{path}: empty table")
    if delimiter is None:
        delimiter = "," if "," in first else None
    if has_header is None:
        fields = [f for f in first.strip().split(delimiter) if f]
        has_header = False
        for f in fields:
            try:
                float(f)
            except ValueError:
                has_header = True
                break
    try:
        table = np.loadtxt(path, delimiter=delimiter, skiprows=1 if has_header else 0, ndmin=2)
    except ValueError as exc:
        raise ValueError(f"{path}: not a rectangular numeric table ({exc})") from exc
    return table


def split_features(table, d_x: int) -> tuple[np.ndarray, np.ndarray]:
    """Split columns into an x block and a y block by cross-correlation.

    Greedily takes the most correlated remaining column pair and puts
    its members on opposite sides (lower index to x), so strongly
    related columns end up across the split; once one side is full, or
    no correlation signal remains, the leftover columns fill the open
    side in index order.  Constant columns correlate with nothing and
    are treated as correlation zero, with a warning.
    """
    table = as_points(table, "table")
    n_cols = table.shape[1]
    if n_cols < 2:
        raise ValueError("need at least 2 columns to split")
    if not 1 <= d_x < n_cols:
        raise ValueError(f"d_x must lie in [1, {n_cols - 1}], got {d_x}")

    std = table.std(axis=0)
    if np.any(std == 0.0):
        warnings.warn(
            "constant columns have undefined correlation; treating as 0",
            RuntimeWarning,
            stacklevel=2,
        )
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.corrcoef(table, rowvar=False)
    corr = np.abs(np.nan_to_num(corr, nan=0.0))
    np.fill_diagonal(corr, 0.0)

    d_y = n_cols - d_x
    x_side: list[int] = []
    y_side: list[int] = []
    unassigned = set(range(n_cols))
    while len(x_side) < d_x and len(y_side) < d_y:
        free = sorted(unassigned)
        sub = corr[np.ix_(free, free)]
        if len(free) < 2 or sub.max() == 0.0:
            break
        flat = int(np.argmax(sub))  # first max in row-major order: smallest (i, j)
        i, j = divmod(flat, len(free))
        i, j = free[min(i, j)], free[max(i, j)]
        x_side.append(i)
        y_side.append(j)
        unassigned -= {i, j}
    for c in sorted(unassigned):
        if len(x_side) < d_x:
            x_side.append(c)
        else:
            y_side.append(c)
    x_side.sort()
    y_side.sort()
    return table[:, x_side], table[:, y_side]


def make_semi_supervised(
    x, y, n: int, n_x: int, n_y: int, seed: int = 0
) -> SampleSet:
    """Carve paired couples and unpaired pools out of aligned rows.

    A seeded shuffle reserves the first ``n`` rows as pairs.  Both
    pools come from the remaining rows only — never from a paired row —
    and the y pool re-selects rows under an independent shuffle, which
    severs any positional pairing between the two pools.
    """
    x = as_points(x, "x")
    y = as_points(y, "y")
    rows = x.shape[0]
    if y.shape[0] != rows:
        raise ValueError("x and y must have the same number of rows")
    if n + max(n_x, n_y) > rows:
        raise ValueError(
            f"insufficient rows: need n + max(n_x, n_y) = {n + max(n_x, n_y)}, have {rows}"
        )
    rng_split, rng_y = (
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2)
    )
    perm = rng_split.permutation(rows)
    paired = perm[:n]
    remainder = perm[n:]
    x_rows = remainder[:n_x]
    y_rows = rng_y.permutation(remainder)[:n_y]
    return SampleSet(x[paired], y[paired], x[x_rows], y[y_rows])

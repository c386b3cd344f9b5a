"""
Fixed-radius neighbor counting.

Continuous samples are bucketed into a uniform grid with cell side epsilon.
A query scans, per axis, the cells between floor((c - eps) / eps) and
floor((c + eps) / eps), widened by a few ulps so that boundary ties decided
by the rounded distance test are never missed. Discrete samples are counted with exact
multiset matching. A chunked pairwise scan serves as fallback and oracle.
"""

import itertools
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from entrofunc.config import get_settings
from entrofunc.errors import InvalidArgumentError
from entrofunc.logger import logger
from entrofunc.models import NeighborCounts, Sample, SampleMode

# Lattice keys must stay well inside int64
_MAX_KEY_SPAN = 2**62
# Indexed cell coordinates stay below this, so shifted query cells cannot overflow
_CELL_LIMIT = 2**61
# Relative slack, in machine epsilons, on the scanned range of scaled coordinates
_RANGE_SLACK = 8 * float(np.finfo(np.float64).eps)


def squared_distances(
    centers: NDArray[np.float64], points: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Row-wise squared Euclidean distances between matched rows.

    Coordinates are accumulated left to right so every caller gets bit-identical
    values for the same pair, whatever the batch layout.
    """
    diff = centers - points
    d2 = diff[:, 0] * diff[:, 0]
    for k in range(1, diff.shape[1]):
        d2 += diff[:, k] * diff[:, k]
    return d2


@dataclass(frozen=True, eq=False)
class GridIndex:
    """Uniform grid over a point set with cell side equal to epsilon."""

    cell_side: float
    dimension: int
    points: NDArray[np.float64]
    order: NDArray[np.int64]
    sorted_points: NDArray[np.float64]
    sorted_keys: NDArray[np.int64]
    origin: NDArray[np.int64]
    extents: NDArray[np.int64]
    cells: NDArray[np.int64] = field(repr=False)

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    @property
    def buckets(self) -> dict[tuple[int, ...], list[int]]:
        """Map from lattice cell to the indices of the points it holds."""
        result: dict[tuple[int, ...], list[int]] = {}
        for idx, cell in enumerate(self.cells):
            result.setdefault(tuple(int(c) for c in cell), []).append(idx)
        return result

    def keys_for(self, cells: NDArray[np.int64]) -> tuple[NDArray[np.int64], NDArray[np.bool_]]:
        """Linear keys of lattice cells, with a mask of cells inside the index box."""
        shifted = cells - self.origin
        inside = np.all((shifted >= 0) & (shifted < self.extents), axis=1)
        keys = np.zeros(cells.shape[0], dtype=np.int64)
        if np.any(inside):
            keys[inside] = np.ravel_multi_index(
                tuple(shifted[inside].T), tuple(int(e) for e in self.extents)
            )
        return keys, inside


def _as_points(points: ArrayLike) -> NDArray[np.float64]:
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise InvalidArgumentError("points must form an (n, d) array", shape=arr.shape)
    return arr


def _check_epsilon(epsilon: float) -> float:
    epsilon = float(epsilon)
    if not np.isfinite(epsilon) or epsilon <= 0:
        raise InvalidArgumentError("epsilon must be a positive finite number", epsilon=epsilon)
    return epsilon


def lattice_cells(points: NDArray[np.float64], cell_side: float) -> NDArray[np.int64]:
    """floor(x / cell_side) per axis, saturated far outside any indexable range."""
    scaled = np.clip(points / cell_side, -(_CELL_LIMIT + 2), _CELL_LIMIT + 2)
    return np.floor(scaled).astype(np.int64)


def query_cell_range(
    centers: NDArray[np.float64], cell_side: float
) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    """Per-axis offsets, relative to each center's cell, of the cells its ball can reach.

    Offsets lie in [-2, 2]: a center just below a cell boundary can reach a
    point sitting exactly one radius above it, two cells away.
    """
    scaled = np.clip(centers / cell_side, -(_CELL_LIMIT + 2), _CELL_LIMIT + 2)
    slack = _RANGE_SLACK * (np.abs(scaled) + 1.0)
    home = lattice_cells(centers, cell_side)
    low = np.floor(scaled - 1.0 - slack).astype(np.int64) - home
    high = np.floor(scaled + 1.0 + slack).astype(np.int64) - home
    return np.clip(low, -2, 0), np.clip(high, 0, 2)


def build_grid(points: ArrayLike, epsilon: float, dimension: int | None = None) -> GridIndex:
    """Bucket points into the lattice floor(x / epsilon)."""
    epsilon = _check_epsilon(epsilon)
    arr = _as_points(points)
    if arr.shape[0] == 0 and dimension is not None:
        arr = arr.reshape(0, dimension)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("grid points must be finite")
    if arr.size and np.max(np.abs(arr)) / epsilon >= _CELL_LIMIT:
        raise InvalidArgumentError(
            "coordinates too large relative to epsilon for a grid", epsilon=epsilon
        )

    dim = int(arr.shape[1])
    cells = lattice_cells(arr, epsilon)
    if arr.shape[0]:
        origin = cells.min(axis=0)
        extents = cells.max(axis=0) - origin + 1
    else:
        origin = np.zeros(dim, dtype=np.int64)
        extents = np.ones(dim, dtype=np.int64)

    span = 1
    for e in extents:
        span *= int(e)
    if span >= _MAX_KEY_SPAN:
        raise InvalidArgumentError(
            "point cloud spans too many grid cells for a linear key", cells=span
        )

    shifted = cells - origin
    keys = (
        np.ravel_multi_index(tuple(shifted.T), tuple(int(e) for e in extents))
        if arr.shape[0]
        else np.zeros(0, dtype=np.int64)
    ).astype(np.int64)
    order = np.argsort(keys, kind="stable")
    return GridIndex(
        cell_side=epsilon,
        dimension=dim,
        points=arr,
        order=order,
        sorted_points=arr[order],
        sorted_keys=keys[order],
        origin=origin,
        extents=extents,
        cells=cells,
    )


def count_within_many(
    index: GridIndex, centers: ArrayLike, epsilon: float | None = None
) -> NDArray[np.int64]:
    """Count indexed points inside the closed epsilon-ball of each center."""
    eps = index.cell_side if epsilon is None else _check_epsilon(epsilon)
    if eps != index.cell_side:
        raise InvalidArgumentError(
            "query radius must equal the grid cell side",
            epsilon=eps,
            cell_side=index.cell_side,
        )
    q = _as_points(centers)
    if q.shape[1] != index.dimension:
        raise InvalidArgumentError(
            "center dimension does not match the index",
            center_dim=q.shape[1],
            index_dim=index.dimension,
        )

    counts = np.zeros(q.shape[0], dtype=np.int64)
    if q.shape[0] == 0 or index.size == 0:
        return counts

    eps2 = eps**2
    chunk_pairs = get_settings().PAIR_CHUNK
    q_cells = lattice_cells(q, eps)
    reach_low, reach_high = query_cell_range(q, eps)
    span_low, span_high = reach_low.min(axis=0), reach_high.max(axis=0)
    axes = [range(int(lo), int(hi) + 1) for lo, hi in zip(span_low, span_high)]
    offsets = np.array(list(itertools.product(*axes)), dtype=np.int64)

    for offset in offsets:
        reaching = np.flatnonzero(
            np.all((offset >= reach_low) & (offset <= reach_high), axis=1)
        )
        if reaching.size == 0:
            continue
        keys, inside = index.keys_for(q_cells[reaching] + offset)
        lo = np.searchsorted(index.sorted_keys, keys, side="left")
        hi = np.searchsorted(index.sorted_keys, keys, side="right")
        per_center = np.where(inside, hi - lo, 0)
        candidates = np.flatnonzero(per_center)
        if candidates.size == 0:
            continue

        # Split the candidate centers so each pass materializes a bounded pair list
        cum = np.cumsum(per_center[candidates])
        bounds = np.searchsorted(cum, np.arange(chunk_pairs, cum[-1], chunk_pairs))
        for part in np.split(candidates, bounds):
            if part.size == 0:
                continue
            sizes = per_center[part]
            center_idx = np.repeat(reaching[part], sizes)
            starts = np.repeat(lo[part], sizes)
            within = np.arange(center_idx.size) - np.repeat(np.cumsum(sizes) - sizes, sizes)
            d2 = squared_distances(q[center_idx], index.sorted_points[starts + within])
            hits = center_idx[d2 <= eps2]
            counts += np.bincount(hits, minlength=q.shape[0])
    return counts


def count_within(index: GridIndex, center: ArrayLike, epsilon: float | None = None) -> int:
    """Count indexed points inside the closed epsilon-ball of one center."""
    c = np.asarray(center, dtype=np.float64).reshape(1, -1)
    return int(count_within_many(index, c, epsilon)[0])


def brute_force_within(
    points: ArrayLike, centers: ArrayLike, epsilon: float
) -> NDArray[np.int64]:
    """Pairwise-scan version of count_within_many."""
    p = _as_points(points)
    q = _as_points(centers)
    counts = np.zeros(q.shape[0], dtype=np.int64)
    if p.shape[0] == 0 or q.shape[0] == 0:
        return counts
    eps2 = float(epsilon) ** 2
    rows = max(1, get_settings().PAIR_CHUNK // p.shape[0])
    for start in range(0, q.shape[0], rows):
        block = q[start : start + rows]
        center_idx = np.repeat(np.arange(block.shape[0]), p.shape[0])
        point_idx = np.tile(np.arange(p.shape[0]), block.shape[0])
        d2 = squared_distances(block[center_idx], p[point_idx])
        counts[start : start + rows] = np.count_nonzero(
            (d2 <= eps2).reshape(block.shape[0], p.shape[0]), axis=1
        )
    return counts


def _require_continuous(x: Sample, y: Sample | None) -> None:
    if x.mode is not SampleMode.CONTINUOUS or (
        y is not None and y.mode is not SampleMode.CONTINUOUS
    ):
        raise InvalidArgumentError("epsilon-ball counting needs continuous samples")
    if y is not None and y.n and y.d != x.d:
        raise InvalidArgumentError("sample dimensions differ", d_x=x.d, d_y=y.d)


def _count(points: NDArray[np.float64], centers: NDArray[np.float64], epsilon: float) -> NDArray[np.int64]:
    dim = centers.shape[1]
    if dim > get_settings().GRID_MAX_DIM:
        return brute_force_within(points, centers, epsilon)
    try:
        index = build_grid(points, epsilon, dimension=dim)
    except InvalidArgumentError as exc:
        logger.debug("grid_fallback", reason=str(exc), n=len(points), d=dim)
        return brute_force_within(points, centers, epsilon)
    return count_within_many(index, centers, epsilon)


def neighbor_counts(x: Sample, y: Sample | None, epsilon: float) -> NeighborCounts:
    """Counts a_i (other X points) and b_i (Y points) within epsilon of each X_i."""
    epsilon = _check_epsilon(epsilon)
    _require_continuous(x, y)
    a = _count(x.points, x.points, epsilon) - 1 if x.n else np.zeros(0, dtype=np.int64)
    n2 = 0 if y is None else y.n
    if n2:
        b = _count(y.points, x.points, epsilon)  # type: ignore[union-attr]
    else:
        b = np.zeros(x.n, dtype=np.int64)
    return NeighborCounts(a=a, b=b, epsilon=epsilon, n1=x.n, n2=n2)


def brute_force_counts(x: Sample, y: Sample | None, epsilon: float) -> NeighborCounts:
    """O(n1 * (n1 + n2)) version of neighbor_counts."""
    epsilon = _check_epsilon(epsilon)
    _require_continuous(x, y)
    a = brute_force_within(x.points, x.points, epsilon) - 1
    n2 = 0 if y is None else y.n
    b = (
        brute_force_within(y.points, x.points, epsilon)  # type: ignore[union-attr]
        if n2
        else np.zeros(x.n, dtype=np.int64)
    )
    return NeighborCounts(a=a, b=b, epsilon=epsilon, n1=x.n, n2=n2)


def exact_match_counts(x: Sample, y: Sample | None) -> NeighborCounts:
    """Multiplicity counts for exact coincidences of integer vectors."""
    if x.mode is not SampleMode.DISCRETE or (
        y is not None and y.mode is not SampleMode.DISCRETE
    ):
        raise InvalidArgumentError("exact matching needs discrete samples")
    n2 = 0 if y is None else y.n
    if n2 and y.d != x.d:  # type: ignore[union-attr]
        raise InvalidArgumentError("sample dimensions differ", d_x=x.d, d_y=y.d)  # type: ignore[union-attr]
    if x.n == 0:
        empty = np.zeros(0, dtype=np.int64)
        return NeighborCounts(a=empty, b=empty, epsilon=0.0, n1=0, n2=n2)

    stacked = x.points if not n2 else np.vstack([x.points, y.points])  # type: ignore[union-attr]
    _, inverse = np.unique(stacked, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    n_cells = int(inverse.max()) + 1
    x_cells = inverse[: x.n]
    count_x = np.bincount(x_cells, minlength=n_cells)
    count_y = np.bincount(inverse[x.n :], minlength=n_cells)
    return NeighborCounts(
        a=count_x[x_cells] - 1,
        b=count_y[x_cells],
        epsilon=0.0,
        n1=x.n,
        n2=n2,
    )


def pairwise_equal_counts(x: Sample, y: Sample | None) -> NeighborCounts:
    """O(n^2) version of exact_match_counts."""
    px = x.points
    a = (np.all(px[:, None, :] == px[None, :, :], axis=2).sum(axis=1) - 1).astype(np.int64)
    n2 = 0 if y is None else y.n
    if n2:
        b = np.all(px[:, None, :] == y.points[None, :, :], axis=2).sum(axis=1)  # type: ignore[union-attr]
    else:
        b = np.zeros(x.n, dtype=np.int64)
    return NeighborCounts(a=a, b=b.astype(np.int64), epsilon=0.0, n1=x.n, n2=n2)


def count_summary(counts: NeighborCounts) -> dict[str, Any]:
    """Diagnostics for reports."""
    return {
        "mean_a": float(counts.a.mean()) if counts.n1 else 0.0,
        "mean_b": float(counts.b.mean()) if counts.n1 else 0.0,
        "epsilon": counts.epsilon,
    }

"""Uniform bin grid over point positions for radius and nearest-point queries."""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .core import ConfigInvalid, PointSet


class InvalidCellSize(ConfigInvalid):
    pass


@dataclasses.dataclass(frozen=True, eq=False)
class BinGrid:
    """Bins stored CSR-style: points of bin ``b`` are
    ``order[start[b]:start[b + 1]]``, in ascending point index.

    Bin ids are row-major: ``b = row * n_cols + col``.
    """

    cell_size: float
    origin: tuple[float, float]
    n_cols: int
    n_rows: int
    start: np.ndarray
    order: np.ndarray

    def bin_of(self, x, y):
        """Clamped (col, row) bin coordinates of ``(x, y)``; works on arrays."""
        col = np.floor((np.asarray(x) - self.origin[0]) / self.cell_size)
        row = np.floor((np.asarray(y) - self.origin[1]) / self.cell_size)
        col = np.clip(col, 0, self.n_cols - 1).astype(np.int64)
        row = np.clip(row, 0, self.n_rows - 1).astype(np.int64)
        return col, row

    def bin_points(self, col: int, row: int) -> np.ndarray:
        b = row * self.n_cols + col
        return self.order[self.start[b]:self.start[b + 1]]

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.start)


def build_bin_grid(ps: PointSet, cell_size: float) -> BinGrid:
    if not (math.isfinite(cell_size) and cell_size > 0):
        raise InvalidCellSize(f"cell_size must be positive and finite, got {cell_size}")
    pos = ps.positions
    lo = pos.min(axis=0)
    hi = pos.max(axis=0)
    # One spare cell on each side of the bounding box.
    origin = (float(lo[0] - cell_size), float(lo[1] - cell_size))
    n_cols = int(math.floor((hi[0] - lo[0]) / cell_size)) + 3
    n_rows = int(math.floor((hi[1] - lo[1]) / cell_size)) + 3
    grid = BinGrid(cell_size, origin, n_cols, n_rows, np.zeros(1, np.int64), np.zeros(0, np.int64))
    col, row = grid.bin_of(pos[:, 0], pos[:, 1])
    bins = row * n_cols + col
    # Stable sort keeps ascending point index inside each bin.
    order = np.argsort(bins, kind="stable")
    counts = np.bincount(bins, minlength=n_cols * n_rows)
    start = np.zeros(n_cols * n_rows + 1, dtype=np.int64)
    np.cumsum(counts, out=start[1:])
    return dataclasses.replace(grid, start=start, order=order.astype(np.int64))


def gather_pairs(grid: BinGrid, ps: PointSet, qx: np.ndarray, qy: np.ndarray, radius: float):
    """All (query, point) pairs with ``|q - mu| <= radius``.

    Returns ``(query_index, point_index, dist2)`` sorted by query index then
    point index.
    """
    n_q = qx.shape[0]
    k = int(math.ceil(radius / grid.cell_size))
    bc, br = grid.bin_of(qx, qy)
    offs = np.arange(-k, k + 1)
    oc, orr = np.meshgrid(offs, offs)
    cc = bc[:, None] + oc.ravel()[None, :]
    rr = br[:, None] + orr.ravel()[None, :]
    valid = (cc >= 0) & (cc < grid.n_cols) & (rr >= 0) & (rr < grid.n_rows)
    b = np.where(valid, rr * grid.n_cols + cc, 0)
    starts = grid.start[b]
    counts = np.where(valid, grid.start[b + 1] - starts, 0).ravel()
    starts = starts.ravel()
    total = int(counts.sum())
    if total == 0:
        empty = np.zeros(0, np.int64)
        return empty, empty, np.zeros(0)
    q_of_block = np.repeat(np.arange(n_q), b.shape[1])
    qi = np.repeat(q_of_block, counts)
    block_begin = np.cumsum(counts) - counts
    slot = np.arange(total) - np.repeat(block_begin, counts) + np.repeat(starts, counts)
    pi = grid.order[slot]
    dx = qx[qi] - ps.positions[pi, 0]
    dy = qy[qi] - ps.positions[pi, 1]
    d2 = dx * dx + dy * dy
    keep = d2 <= radius * radius
    qi, pi, d2 = qi[keep], pi[keep], d2[keep]
    perm = np.lexsort((pi, qi))
    return qi[perm], pi[perm], d2[perm]


def query_radius(grid: BinGrid, ps: PointSet, q, radius: float) -> list[int]:
    """Indices of points within ``radius`` of ``q`` (closed ball), ascending."""
    _, pi, _ = gather_pairs(grid, ps, np.array([float(q[0])]), np.array([float(q[1])]), radius)
    return pi.tolist()


def nearest_point(grid: BinGrid, ps: PointSet, q) -> int:
    """Index of the point closest to ``q``; ties go to the smaller index.

    Expanding ring search: after scanning ring ``r`` around q's bin, every
    unscanned point is at least ``r * cell_size`` away.
    """
    qx, qy = float(q[0]), float(q[1])
    bc, br = grid.bin_of(qx, qy)
    bc, br = int(bc), int(br)
    pos = ps.positions
    best = (math.inf, -1)
    max_ring = max(bc, br, grid.n_cols - 1 - bc, grid.n_rows - 1 - br)
    for ring in range(max_ring + 1):
        for row in range(br - ring, br + ring + 1):
            if row < 0 or row >= grid.n_rows:
                continue
            edge = row in (br - ring, br + ring)
            cols = range(bc - ring, bc + ring + 1) if edge else (bc - ring, bc + ring)
            for col in cols:
                if col < 0 or col >= grid.n_cols:
                    continue
                for i in grid.bin_points(col, row):
                    dx = qx - pos[i, 0]
                    dy = qy - pos[i, 1]
                    cand = (dx * dx + dy * dy, int(i))
                    if cand < best:
                        best = cand
        reach = ring * grid.cell_size
        if best[1] >= 0 and best[0] < reach * reach:
            break
    return best[1]

"""Truncated Gaussian-mixture interpolation: forward pass and analytic backward pass.

The output frame is cut into fixed bands of ``TILE_ROWS`` rows. Each band is
an independent work item; per-band gradient partials are summed in band
order, so results do not depend on how many workers run the bands.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .core import (
    CoordinateFrame,
    Fallback,
    GmmInterpError,
    GradientSet,
    InterpConfig,
    PointSet,
    pixel_centers,
    validate_point_set,
)
from .spatial import BinGrid, build_bin_grid, gather_pairs, nearest_point

TILE_ROWS = 8


class CacheMismatch(GmmInterpError, ValueError):
    pass


@dataclasses.dataclass(frozen=True, eq=False)
class TileCache:
    """Forward state for output rows ``[row_start, row_stop)``.

    ``pixel`` holds flat pixel indices into the full frame; pairs are sorted
    by pixel then point index. Weights are shifted by the nearest contributing
    point's squared distance, which leaves every ratio ``w / total`` unchanged
    and keeps ``total >= 1``.
    """

    row_start: int
    row_stop: int
    pixel: np.ndarray
    point: np.ndarray
    weight: np.ndarray
    total: np.ndarray  # per pixel in the band; 0 at fallback pixels
    color: np.ndarray  # (n_pixels_in_band, C)
    fallback: np.ndarray  # bool per pixel in the band
    nearest: np.ndarray  # nearest point per pixel, -1 where not a NearestPoint fallback


@dataclasses.dataclass(frozen=True, eq=False)
class ForwardCache:
    frame: CoordinateFrame
    num_points: int
    num_channels: int
    sigma: float
    cutoff_radius: float
    tiles: tuple[TileCache, ...]

    @property
    def fallback_mask(self) -> np.ndarray:
        return np.concatenate([t.fallback for t in self.tiles]).reshape(self.frame.shape)

    @property
    def num_fallback(self) -> int:
        return int(sum(t.fallback.sum() for t in self.tiles))


def _tile_bounds(height: int) -> list[tuple[int, int]]:
    return [(r, min(r + TILE_ROWS, height)) for r in range(0, height, TILE_ROWS)]


def _run(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(*it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda it: fn(*it), items))


def forward_row_range(
    ps: PointSet,
    cfg: InterpConfig,
    grid: BinGrid,
    frame: CoordinateFrame,
    row_start: int,
    row_stop: int,
) -> tuple[np.ndarray, TileCache]:
    """Evaluate output rows ``[row_start, row_stop)``; returns ``(rows, cache)``."""
    width = frame.width
    n_pix = max(row_stop - row_start, 0) * width
    C = ps.num_channels
    qx, qy = pixel_centers(frame, row_start, max(row_start, row_stop))
    if n_pix == 0:
        e = np.zeros(0, np.int64)
        tile = TileCache(row_start, row_start, e, e, np.zeros(0), np.zeros(0),
                         np.zeros((0, C)), np.zeros(0, bool), e)
        return np.zeros((0, width, C)), tile

    qi, pi, d2 = gather_pairs(grid, ps, qx, qy, cfg.cutoff_radius)
    counts = np.bincount(qi, minlength=n_pix)
    fallback = counts == 0
    first = np.cumsum(counts) - counts
    d2_min = np.zeros(n_pix)
    d2_min[~fallback] = np.minimum.reduceat(d2, first[~fallback]) if qi.size else 0.0
    inv2s2 = 1.0 / (2.0 * cfg.sigma * cfg.sigma)
    w = np.exp(-(d2 - d2_min[qi]) * inv2s2)
    total = np.bincount(qi, weights=w, minlength=n_pix)

    # Average offsets from the nearest point's color: constant inputs then
    # come back exactly, and the nearest point's weight (the largest) bounds
    # the cancellation.
    color = np.zeros((n_pix, C))
    live = ~fallback
    at_min = np.flatnonzero(d2 == d2_min[qi])
    _, first_min = np.unique(qi[at_min], return_index=True)
    ref = np.zeros((n_pix, C))
    ref[live] = ps.colors[pi[at_min[first_min]]]
    offset = ps.colors[pi] - ref[qi]
    for ch in range(C):
        num = np.bincount(qi, weights=w * offset[:, ch], minlength=n_pix)
        color[live, ch] = ref[live, ch] + num[live] / total[live]

    nearest = np.full(n_pix, -1, dtype=np.int64)
    if fallback.any() and cfg.fallback is Fallback.NEAREST:
        for p in np.flatnonzero(fallback):
            j = nearest_point(grid, ps, (qx[p], qy[p]))
            nearest[p] = j
            color[p] = ps.colors[j]

    tile = TileCache(
        row_start, row_stop, qi + row_start * width, pi, w, total, color, fallback, nearest,
    )
    return color.reshape(row_stop - row_start, width, C), tile


def forward(
    ps: PointSet,
    cfg: InterpConfig,
    frame: CoordinateFrame,
    workers: int = 1,
    grid: BinGrid | None = None,
) -> tuple[np.ndarray, ForwardCache]:
    """Render ``ps`` onto ``frame``: the normalized Gaussian-weighted average of
    point colors at each pixel center, using only points within the cutoff.

    Returns the ``(H, W, C)`` image and the cache needed by :func:`backward`.
    """
    validate_point_set(ps)
    if grid is None:
        grid = build_bin_grid(ps, cfg.cutoff_radius)
    items = [(ps, cfg, grid, frame, a, b) for a, b in _tile_bounds(frame.height)]
    parts = _run(forward_row_range, items, workers)
    image = np.concatenate([p[0] for p in parts], axis=0)
    cache = ForwardCache(
        frame, len(ps), ps.num_channels, cfg.sigma, cfg.cutoff_radius,
        tuple(p[1] for p in parts),
    )
    return image, cache


def _backward_tile(ps: PointSet, sigma: float, tile: TileCache, upstream: np.ndarray, width: int):
    N, C = ps.colors.shape
    d_colors = np.zeros((N, C))
    d_pos = np.zeros((N, 2))
    if tile.row_stop <= tile.row_start:
        return d_colors, d_pos
    base = tile.row_start * width
    up = upstream[tile.row_start:tile.row_stop].reshape(-1, C)
    local = tile.pixel - base
    ratio = tile.weight / tile.total[local]
    mismatch = np.zeros_like(ratio)
    for ch in range(C):
        g = up[local, ch]
        d_colors[:, ch] = np.bincount(tile.point, weights=g * ratio, minlength=N)
        mismatch += g * (ps.colors[tile.point, ch] - tile.color[local, ch])
    coef = ratio * mismatch / (sigma * sigma)
    qx = (tile.pixel % width).astype(np.float64)
    qy = (tile.pixel // width).astype(np.float64)
    d_pos[:, 0] = np.bincount(tile.point, weights=coef * (qx - ps.positions[tile.point, 0]), minlength=N)
    d_pos[:, 1] = np.bincount(tile.point, weights=coef * (qy - ps.positions[tile.point, 1]), minlength=N)
    # NearestPoint fallback pixels pass their gradient straight to that point's color.
    for p in np.flatnonzero(tile.nearest >= 0):
        d_colors[tile.nearest[p]] += up[p]
    return d_colors, d_pos


def backward(
    ps: PointSet,
    cfg: InterpConfig,
    cache: ForwardCache,
    upstream: np.ndarray,
    workers: int = 1,
) -> GradientSet:
    """Gradients of ``sum(upstream * forward(ps))`` w.r.t. point colors and positions."""
    upstream = np.asarray(upstream, dtype=np.float64)
    frame = cache.frame
    expected = (frame.height, frame.width, cache.num_channels)
    if upstream.shape != expected:
        raise CacheMismatch(f"upstream shape {upstream.shape} does not match forward output {expected}")
    if (len(ps), ps.num_channels) != (cache.num_points, cache.num_channels):
        raise CacheMismatch("point set does not match the one the cache was built from")
    if cfg.sigma != cache.sigma or cfg.cutoff_radius != cache.cutoff_radius:
        raise CacheMismatch("config does not match the one the cache was built with")
    items = [(ps, cfg.sigma, t, upstream, frame.width) for t in cache.tiles]
    partials = _run(_backward_tile, items, workers)
    d_colors = np.zeros((len(ps), ps.num_channels))
    d_pos = np.zeros((len(ps), 2))
    for dc, dp in partials:
        d_colors += dc
        d_pos += dp
    return GradientSet(d_colors, d_pos)


def partition_of_unity(cache: ForwardCache) -> np.ndarray:
    """Per-pixel sum of normalized weights; NaN at fallback pixels."""
    out = []
    for t in cache.tiles:
        n = (t.row_stop - t.row_start) * cache.frame.width
        local = t.pixel - t.row_start * cache.frame.width
        s = np.bincount(local, weights=t.weight / t.total[local], minlength=n).astype(np.float64)
        s[t.fallback] = np.nan
        out.append(s)
    return np.concatenate(out).reshape(cache.frame.shape)

"""Slow, untruncated reference evaluator and finite-difference gradients.

Nothing here shares code with the engine: no bin grid, no truncation, no
tiling. Used only to check the engine.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .core import CoordinateFrame, GradientSet, PointSet, ShapeMismatch, validate_point_set


def _full_sum(positions: np.ndarray, colors: np.ndarray, sigma: float, frame: CoordinateFrame):
    ys, xs = np.mgrid[0:frame.height, 0:frame.width]
    xs = xs.astype(np.float64)
    ys = ys.astype(np.float64)
    n = positions.shape[0]
    d2 = [(xs - positions[i, 0]) ** 2 + (ys - positions[i, 1]) ** 2 for i in range(n)]
    # Exponents are taken relative to the nearest point so the normalizer
    # never underflows; the ratio of weights is unaffected.
    d2_min = np.minimum.reduce(d2)
    num = np.zeros((frame.height, frame.width, colors.shape[1]))
    den = np.zeros((frame.height, frame.width))
    for i in range(n):
        w = np.exp(-(d2[i] - d2_min) / (2.0 * sigma * sigma))
        den += w
        num += w[..., None] * colors[i]
    return num / den[..., None]


def oracle_forward(ps: PointSet, sigma: float, frame: CoordinateFrame) -> np.ndarray:
    """Normalized mixture average over all N points at every pixel center,
    accumulated in ascending point order."""
    validate_point_set(ps)
    return _full_sum(ps.positions, ps.colors, sigma, frame)


def oracle_gradients_fd(
    ps: PointSet,
    sigma: float,
    frame: CoordinateFrame,
    upstream: np.ndarray,
    h: float = 1e-5,
    indices=None,
) -> GradientSet:
    """Central differences of ``sum(upstream * oracle_forward(ps))``.

    ``indices`` restricts the perturbed points (others get zero rows).
    Colors may be pushed slightly outside [0, 1] by the step; that is fine.
    """
    validate_point_set(ps)
    upstream = np.asarray(upstream, dtype=np.float64)
    pos = ps.positions.copy()
    col = ps.colors.copy()

    def loss():
        return float(np.sum(upstream * _full_sum(pos, col, sigma, frame)))

    def central(arr, i, j):
        old = arr[i, j]
        arr[i, j] = old + h
        plus = loss()
        arr[i, j] = old - h
        minus = loss()
        arr[i, j] = old
        return (plus - minus) / (2.0 * h)

    d_colors = np.zeros_like(col)
    d_pos = np.zeros_like(pos)
    for i in range(len(ps)) if indices is None else indices:
        for j in range(col.shape[1]):
            d_colors[i, j] = central(col, i, j)
        for j in range(2):
            d_pos[i, j] = central(pos, i, j)
    return GradientSet(d_colors, d_pos)


@dataclasses.dataclass(frozen=True)
class BufferComparison:
    max_abs: float
    mean_abs: float
    argmax: tuple[int, ...]


def compare_buffers(a: np.ndarray, b: np.ndarray) -> BufferComparison:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch(f"cannot compare buffers of shape {a.shape} and {b.shape}")
    diff = np.abs(a - b)
    k = int(np.argmax(diff))
    return BufferComparison(float(diff.max()), float(diff.mean()), tuple(int(i) for i in np.unravel_index(k, a.shape)))

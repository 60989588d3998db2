"""Domain types and the Gaussian weight shared by every other module.

Conventions
-----------
* Pixel ``(row r, col c)`` has its center at continuous coordinates
  ``(x=c, y=r)``.
* Images are ``float64`` arrays of shape ``(H, W, C)`` in row-major order,
  values nominally in ``[0, 1]``.
* All arithmetic is double precision.
"""

from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np


class GmmInterpError(Exception):
    """Base class for all errors raised by this package."""


class PointSetError(GmmInterpError, ValueError):
    """A point set violates one of its invariants."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class EmptyPointSet(PointSetError):
    pass


class ShapeMismatch(PointSetError):
    pass


class NonFiniteValue(PointSetError):
    pass


class ColorOutOfRange(PointSetError):
    pass


class ConfigInvalid(GmmInterpError, ValueError):
    pass


class Fallback(enum.Enum):
    """What to emit at a pixel with no known point inside the cutoff radius."""

    NEAREST = "nearest"
    ZERO = "zero"


@dataclasses.dataclass(frozen=True)
class CoordinateFrame:
    width: int
    height: int

    def __post_init__(self):
        if int(self.width) < 1 or int(self.height) < 1:
            raise ConfigInvalid(f"frame must be at least 1x1, got {self.width}x{self.height}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)


@dataclasses.dataclass(frozen=True, eq=False)
class PointSet:
    """N known points: ``positions`` is (N, 2) as (x, y), ``colors`` is (N, C).

    Construction only normalizes dtypes and shapes; call
    :func:`validate_point_set` to check the invariants.
    """

    positions: np.ndarray
    colors: np.ndarray

    def __post_init__(self):
        positions = np.array(self.positions, dtype=np.float64)
        colors = np.array(self.colors, dtype=np.float64)
        if colors.ndim == 1:
            colors = colors[:, None]
        if positions.ndim == 1 and positions.size == 0:
            positions = positions.reshape(0, 2)
        positions.flags.writeable = False
        colors.flags.writeable = False
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "colors", colors)

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def num_channels(self) -> int:
        return self.colors.shape[1]

    def replace(self, positions=None, colors=None) -> PointSet:
        return PointSet(
            self.positions if positions is None else positions,
            self.colors if colors is None else colors,
        )


@dataclasses.dataclass(frozen=True)
class InterpConfig:
    """Interpolation hyperparameters.

    ``cutoff_radius`` is in absolute pixels and defaults to ``3 * sigma``.
    """

    sigma: float
    cutoff_radius: float | None = None
    fallback: Fallback = Fallback.NEAREST

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ConfigInvalid(f"sigma must be positive and finite, got {self.sigma}")
        if self.cutoff_radius is None:
            object.__setattr__(self, "cutoff_radius", 3.0 * self.sigma)
        elif not (self.cutoff_radius > 0 and not math.isnan(self.cutoff_radius)):
            raise ConfigInvalid(f"cutoff_radius must be positive, got {self.cutoff_radius}")
        object.__setattr__(self, "fallback", Fallback(self.fallback))


@dataclasses.dataclass
class GradientSet:
    d_colors: np.ndarray
    d_positions: np.ndarray


def gaussian_weight(q, mu, sigma: float) -> float:
    """Unnormalized isotropic Gaussian weight ``exp(-|q - mu|^2 / (2 sigma^2))``.

    The density's constant factor is omitted: it cancels in the normalized
    mixture average.
    """
    dx = q[0] - mu[0]
    dy = q[1] - mu[1]
    return math.exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma))


def validate_point_set(ps: PointSet) -> None:
    """Raise a :class:`PointSetError` subclass naming the first violation."""
    pos, col = ps.positions, ps.colors
    if pos.ndim != 2 or pos.shape[1] != 2:
        raise ShapeMismatch(f"positions must have shape (N, 2), got {pos.shape}")
    if col.ndim != 2 or col.shape[1] not in (1, 3):
        raise ShapeMismatch(f"colors must have shape (N, 1) or (N, 3), got {col.shape}")
    if pos.shape[0] != col.shape[0]:
        raise ShapeMismatch(f"{pos.shape[0]} positions but {col.shape[0]} colors")
    if pos.shape[0] == 0:
        raise EmptyPointSet("point set is empty")
    bad = ~np.isfinite(pos).all(axis=1) | ~np.isfinite(col).all(axis=1)
    if bad.any():
        i = int(np.argmax(bad))
        raise NonFiniteValue(f"non-finite value at point {i}", i)
    bad = ((col < 0.0) | (col > 1.0)).any(axis=1)
    if bad.any():
        i = int(np.argmax(bad))
        raise ColorOutOfRange(f"color outside [0, 1] at point {i}", i)


def pixel_centers(frame: CoordinateFrame, row_start: int = 0, row_stop: int | None = None):
    """Flattened (x, y) pixel-center coordinates for rows ``[row_start, row_stop)``."""
    if row_stop is None:
        row_stop = frame.height
    ys, xs = np.mgrid[row_start:row_stop, 0:frame.width]
    return xs.ravel().astype(np.float64), ys.ravel().astype(np.float64)

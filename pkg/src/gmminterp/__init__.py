"""Differentiable image interpolation from scattered points via a Gaussian mixture."""

from .core import (
    CoordinateFrame,
    Fallback,
    GradientSet,
    InterpConfig,
    PointSet,
    gaussian_weight,
    validate_point_set,
)
from .engine import ForwardCache, backward, forward
from .oracle import compare_buffers, oracle_forward, oracle_gradients_fd
from .resample import Filter, kernel_eval, resample
from .spatial import build_bin_grid, nearest_point, query_radius

__version__ = "0.1.0"

__all__ = [
    "CoordinateFrame",
    "Fallback",
    "ForwardCache",
    "GradientSet",
    "InterpConfig",
    "PointSet",
    "Filter",
    "backward",
    "build_bin_grid",
    "compare_buffers",
    "forward",
    "gaussian_weight",
    "kernel_eval",
    "nearest_point",
    "oracle_forward",
    "oracle_gradients_fd",
    "query_radius",
    "resample",
    "validate_point_set",
]

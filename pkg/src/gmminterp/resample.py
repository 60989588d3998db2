"""Separable uniform-grid resamplers: nearest, box, bilinear, bicubic, Hamming, Lanczos.

Kernels follow the usual PIL definitions (Keys cubic with a = -0.5,
3-lobe Lanczos, Hamming-windowed sinc on [-1, 1]). Output pixel ``j`` maps
to source coordinate ``(j + 0.5) * scale - 0.5``; when downscaling the kernel
is stretched by the scale factor.
"""

from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np

from .core import CoordinateFrame, GmmInterpError


class InvalidDimensions(GmmInterpError, ValueError):
    pass


class Filter(enum.Enum):
    NEAREST = "nearest"
    BOX = "box"
    BILINEAR = "bilinear"
    BICUBIC = "bicubic"
    HAMMING = "hamming"
    LANCZOS = "lanczos"


def _sinc(t):
    t = np.asarray(t, dtype=np.float64)
    return np.sinc(t)  # sin(pi t) / (pi t)


def _box(t):
    return np.where((t >= -0.5) & (t < 0.5), 1.0, 0.0)


def _triangle(t):
    return np.maximum(0.0, 1.0 - np.abs(t))


def _hamming(t):
    t = np.abs(t)
    return np.where(t <= 1.0, (0.54 + 0.46 * np.cos(np.pi * t)) * _sinc(t), 0.0)


def _keys(t, a=-0.5):
    t = np.abs(t)
    near = ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0
    far = ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a
    return np.where(t <= 1.0, near, np.where(t < 2.0, far, 0.0))


def _lanczos(t):
    return np.where(np.abs(t) <= 3.0, _sinc(t) * _sinc(t / 3.0), 0.0)


@dataclasses.dataclass(frozen=True)
class FilterSpec:
    name: Filter
    support: float
    kernel: object


FILTERS = {
    Filter.NEAREST: FilterSpec(Filter.NEAREST, 0.5, _box),
    Filter.BOX: FilterSpec(Filter.BOX, 0.5, _box),
    Filter.BILINEAR: FilterSpec(Filter.BILINEAR, 1.0, _triangle),
    Filter.HAMMING: FilterSpec(Filter.HAMMING, 1.0, _hamming),
    Filter.BICUBIC: FilterSpec(Filter.BICUBIC, 2.0, _keys),
    Filter.LANCZOS: FilterSpec(Filter.LANCZOS, 3.0, _lanczos),
}


def get_filter(name) -> FilterSpec:
    if isinstance(name, FilterSpec):
        return name
    try:
        return FILTERS[Filter(name)]
    except ValueError:
        raise ValueError(f"unknown filter {name!r}; choose from {[f.value for f in Filter]}") from None


def kernel_eval(filt, t: float) -> float:
    """Kernel value at offset ``t``. Nearest reports its box footprint."""
    return float(get_filter(filt).kernel(np.float64(t)))


def weight_matrix(n_in: int, n_out: int, filt) -> np.ndarray:
    """Dense ``(n_out, n_in)`` matrix of normalized 1D resampling weights."""
    spec = get_filter(filt)
    scale = n_in / n_out
    centers = (np.arange(n_out) + 0.5) * scale - 0.5
    mat = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    if spec.name is Filter.NEAREST:
        src = np.clip(np.floor((np.arange(n_out) + 0.5) * scale).astype(np.int64), 0, n_in - 1)
        mat[rows, src] = 1.0
        return mat
    stretch = max(scale, 1.0)
    reach = spec.support * stretch
    lo = np.floor(centers - reach).astype(np.int64)
    n_taps = int(math.ceil(2 * reach)) + 2
    for k in range(n_taps):
        idx = lo + k
        w = spec.kernel((idx - centers) / stretch)
        # Taps outside the image fold onto the edge pixel.
        np.add.at(mat, (rows, np.clip(idx, 0, n_in - 1)), w)
    return mat / mat.sum(axis=1, keepdims=True)


def resample(img: np.ndarray, out_frame: CoordinateFrame, filt, clamp: bool = True) -> np.ndarray:
    """Resize an ``(H, W, C)`` image to ``out_frame``: horizontal pass, then vertical."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[0] < 1 or img.shape[1] < 1:
        raise InvalidDimensions(f"expected a non-empty (H, W, C) image, got shape {img.shape}")
    h_in, w_in, _ = img.shape
    mx = weight_matrix(w_in, out_frame.width, filt)
    my = weight_matrix(h_in, out_frame.height, filt)
    out = np.einsum("xw,hwc->hxc", mx, img)
    out = np.einsum("yh,hxc->yxc", my, out)
    return np.clip(out, 0.0, 1.0) if clamp else out


def resample_vertical_first(img: np.ndarray, out_frame: CoordinateFrame, filt) -> np.ndarray:
    """Same as :func:`resample` without clamping, passes swapped. For checks."""
    img = np.asarray(img, dtype=np.float64)
    mx = weight_matrix(img.shape[1], out_frame.width, filt)
    my = weight_matrix(img.shape[0], out_frame.height, filt)
    out = np.einsum("yh,hwc->ywc", my, img)
    return np.einsum("xw,ywc->yxc", mx, out)

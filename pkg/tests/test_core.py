import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gmminterp.core import (
    ColorOutOfRange,
    ConfigInvalid,
    CoordinateFrame,
    EmptyPointSet,
    Fallback,
    InterpConfig,
    NonFiniteValue,
    PointSet,
    ShapeMismatch,
    gaussian_weight,
    validate_point_set,
)

coord = st.floats(-1e3, 1e3, allow_nan=False)
sigma = st.floats(0.05, 50.0)


class TestGaussianWeight:
    def test_zero_distance(self):
        assert gaussian_weight((0, 0), (0, 0), 1.0) == 1.0

    def test_unit_distance(self):
        assert gaussian_weight((1, 0), (0, 0), 1.0) == pytest.approx(math.exp(-0.5), rel=1e-15)

    def test_off_axis(self):
        # exp(-1.25) to 30 digits via mpmath.
        assert gaussian_weight((0.5, 0.5), (2, 0), 1.0) == pytest.approx(0.286504796860190100324885426648, rel=1e-14)

    @given(coord, coord, coord, coord, sigma)
    def test_symmetric(self, qx, qy, mx, my, s):
        assert gaussian_weight((qx, qy), (mx, my), s) == gaussian_weight((mx, my), (qx, qy), s)

    @given(st.integers(-1000, 1000), st.integers(-1000, 1000), st.integers(-64, 64), st.integers(-64, 64), sigma)
    def test_translation_invariant(self, tx, ty, dx, dy, s):
        # Dyadic coordinates keep the translated differences exact.
        q = (dx / 8, dy / 8)
        assert gaussian_weight((q[0] + tx, q[1] + ty), (tx, ty), s) == gaussian_weight(q, (0.0, 0.0), s)

    @given(st.floats(0, 5), st.floats(0, 5), sigma)
    def test_monotone_in_distance(self, a, b, s):
        if a == b:
            return
        near, far = sorted((a, b))
        wn = gaussian_weight((near, 0), (0, 0), s)
        wf = gaussian_weight((far, 0), (0, 0), s)
        assert wn >= wf
        if wn > 0 and far - near > 1e-6 * s:
            assert wn > wf

    @given(coord, coord, sigma)
    def test_bounded(self, x, y, s):
        w = gaussian_weight((x, y), (0, 0), s)
        assert 0 <= w <= 1


class TestValidatePointSet:
    def test_ok(self):
        validate_point_set(PointSet([[0, 0]], [[0.5]]))

    def test_empty(self):
        with pytest.raises(EmptyPointSet):
            validate_point_set(PointSet(np.zeros((0, 2)), np.zeros((0, 1))))

    def test_color_out_of_range_names_index(self):
        colors = np.full((5, 1), 0.5)
        colors[3] = 1.5
        with pytest.raises(ColorOutOfRange) as exc:
            validate_point_set(PointSet(np.zeros((5, 2)), colors))
        assert exc.value.index == 3

    def test_non_finite(self):
        pos = np.zeros((4, 2))
        pos[2, 1] = np.inf
        with pytest.raises(NonFiniteValue) as exc:
            validate_point_set(PointSet(pos, np.zeros((4, 3))))
        assert exc.value.index == 2

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            validate_point_set(PointSet(np.zeros((3, 2)), np.zeros((2, 1))))
        with pytest.raises(ShapeMismatch):
            validate_point_set(PointSet(np.zeros((2, 2)), np.zeros((2, 2))))

    def test_positions_outside_image_are_fine(self):
        validate_point_set(PointSet([[-100.0, 1e6]], [[0.0]]))

    def test_immutable(self):
        ps = PointSet([[0, 0]], [[0.5]])
        with pytest.raises(ValueError):
            ps.positions[0, 0] = 1.0


class TestConfig:
    def test_default_radius(self):
        assert InterpConfig(2.0).cutoff_radius == 6.0
        assert InterpConfig(2.0).fallback is Fallback.NEAREST

    @pytest.mark.parametrize("kwargs", [dict(sigma=0), dict(sigma=-1), dict(sigma=1, cutoff_radius=0),
                                        dict(sigma=float("nan"))])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigInvalid):
            InterpConfig(**kwargs)

    def test_fallback_from_string(self):
        assert InterpConfig(1.0, fallback="zero").fallback is Fallback.ZERO

    def test_frame(self):
        assert CoordinateFrame(4, 3).shape == (3, 4)
        with pytest.raises(ConfigInvalid):
            CoordinateFrame(0, 3)

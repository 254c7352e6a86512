import numpy as np
import pytest
from hypothesis import given, strategies as st

from relit.color import (
    ToneMapParams,
    linear_to_srgb,
    srgb_to_linear,
    tonemap_agx,
    _AGX_INSET,
    _AGX_OUTSET,
)

# frozen output of the shipped AgX fit for 18% grey at exposure 0
AGX_MIDGREY_GOLDEN = (0.4966762, 0.49674487, 0.49674913)


def test_srgb_fixed_points():
    assert srgb_to_linear(0.0) == 0.0
    assert srgb_to_linear(1.0) == pytest.approx(1.0, abs=1e-7)


def test_srgb_half():
    # direct IEC 61966-2-1 evaluation: ((0.5 + 0.055) / 1.055) ** 2.4
    expected = ((0.5 + 0.055) / 1.055) ** 2.4
    assert srgb_to_linear(0.5) == pytest.approx(expected, abs=1e-7)
    assert srgb_to_linear(0.5) == pytest.approx(0.21404114, abs=1e-6)


@pytest.mark.parametrize("x", [0.1, 0.5, 0.9])
def test_srgb_round_trip_points(x):
    assert linear_to_srgb(srgb_to_linear(x)) == pytest.approx(x, abs=1e-6)


@given(st.floats(min_value=0.0, max_value=1.0))
def test_srgb_round_trip_property(x):
    assert abs(float(linear_to_srgb(srgb_to_linear(x))) - x) < 1e-6


def test_linear_to_srgb_clamps():
    assert linear_to_srgb(2.0) == 1.0
    assert linear_to_srgb(-0.5) == 0.0


def test_srgb_monotone():
    xs = np.linspace(0.0, 1.0, 512)
    ys = srgb_to_linear(xs)
    assert (np.diff(ys) > 0).all()


def test_agx_matrices_are_inverses():
    assert np.abs(_AGX_INSET @ _AGX_OUTSET - np.eye(3)).max() < 1e-6


def test_agx_black_maps_to_black():
    out = tonemap_agx(np.zeros(3))
    assert np.all(np.abs(out) < 1e-3)


def test_agx_midgrey_golden():
    out = tonemap_agx(np.full(3, 0.18))
    assert out == pytest.approx(AGX_MIDGREY_GOLDEN, abs=1e-5)


def test_agx_monotone_on_greys():
    # strictly increasing below the shoulder's white point, flat above
    greys = np.linspace(0.01, 8.0, 128)
    vals = tonemap_agx(np.stack([greys] * 3, axis=-1))
    assert (np.diff(vals, axis=0) > 0).all()
    wide = np.linspace(0.01, 100.0, 256)
    vals = tonemap_agx(np.stack([wide] * 3, axis=-1))
    assert (np.diff(vals, axis=0) >= 0).all()


@given(
    st.floats(min_value=0.0, max_value=1e6),
    st.floats(min_value=0.0, max_value=1e6),
    st.floats(min_value=0.0, max_value=1e6),
)
def test_agx_output_in_unit_cube(r, g, b):
    out = tonemap_agx(np.array([r, g, b]))
    assert np.all(out >= 0.0) and np.all(out <= 1.0)


def test_exposure_shift_equals_doubling():
    c = np.array([0.3, 0.5, 0.9], dtype=np.float32)
    plus_one = tonemap_agx(c, ToneMapParams(exposure_ev=1.0))
    doubled = tonemap_agx(2.0 * c, ToneMapParams(exposure_ev=0.0))
    assert np.array_equal(plus_one, doubled)


@given(st.floats(min_value=-6.0, max_value=6.0))
def test_exposure_shift_property(ev):
    c = np.array([0.25, 0.5, 1.0], dtype=np.float32)
    a = tonemap_agx(c, ToneMapParams(exposure_ev=ev + 1.0))
    b = tonemap_agx(2.0 * c, ToneMapParams(exposure_ev=ev))
    assert np.allclose(a, b, atol=1e-6)


def test_linear_clamp_mode():
    c = np.array([0.5, 2.0, 0.0])
    out = tonemap_agx(c, ToneMapParams(mode="linear_clamp"))
    assert out[1] == 1.0 and out[2] == 0.0


def test_bad_params_rejected():
    with pytest.raises(ValueError):
        ToneMapParams(exposure_ev=float("nan"))
    with pytest.raises(ValueError):
        ToneMapParams(mode="reinhard")

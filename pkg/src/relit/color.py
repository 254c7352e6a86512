"""Color transfer functions, exposure, and AgX display mapping.

All rendering happens in linear Rec.709/sRGB primaries; these helpers move
pixels between linear radiance and display-encoded values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# AgX fit: inset matrix -> per-channel log2 sigmoid -> outset matrix.
# Constants frozen from the commonly used minimal AgX approximation;
# golden-tested in tests/test_color.py.
_AGX_INSET = np.array(
    [
        [0.842479062253094, 0.0784335999999992, 0.0792237451477643],
        [0.0423282422610123, 0.878468636469772, 0.0791661274605434],
        [0.0423756549057051, 0.0784336, 0.879142973793104],
    ],
    dtype=np.float64,
)
_AGX_OUTSET = np.array(
    [
        [1.19687900512017, -0.0980208811401368, -0.0990297440797205],
        [-0.0528968517574562, 1.15190312990417, -0.0989611768448433],
        [-0.0529716355144438, -0.0980434501171241, 1.15107367264116],
    ],
    dtype=np.float64,
)
_AGX_MIN_EV = -12.47393
_AGX_MAX_EV = 4.026069


@dataclass(frozen=True)
class ToneMapParams:
    """Display-mapping knobs: exposure in stops plus the curve selector."""

    exposure_ev: float = 0.0
    mode: str = "agx"  # "agx" | "linear_clamp"

    def __post_init__(self):
        if not np.isfinite(self.exposure_ev):
            raise ValueError("exposure_ev must be finite")
        if self.mode not in ("agx", "linear_clamp"):
            raise ValueError(f"unknown tonemap mode {self.mode!r}")


def srgb_to_linear(v):
    """IEC 61966-2-1 decode; inputs are clamped to [0, 1]."""
    v = np.clip(np.asarray(v, dtype=np.float32), 0.0, 1.0)
    return np.where(v <= 0.04045, v / 12.92, ((v + 0.055) / 1.055) ** 2.4).astype(
        np.float32
    )


def linear_to_srgb(v):
    """IEC 61966-2-1 encode; clamps negatives to 0 and values above 1 to 1."""
    v = np.clip(np.asarray(v, dtype=np.float64), 0.0, 1.0)
    out = np.where(v <= 0.0031308, v * 12.92, 1.055 * np.power(v, 1.0 / 2.4) - 0.055)
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def _agx_sigmoid(x):
    # 6th-order polynomial fit of the AgX log-encoding sigmoid on [0, 1].
    x2 = x * x
    x4 = x2 * x2
    return (
        15.5 * x4 * x2
        - 40.14 * x4 * x
        + 31.96 * x4
        - 6.868 * x2 * x
        + 0.4298 * x2
        + 0.1191 * x
        - 0.00232
    )


def tonemap_agx(c, params: ToneMapParams = ToneMapParams()) -> np.ndarray:
    """Map linear HDR radiance to display-encoded RGB in [0, 1].

    `c` is an (..., 3) array of non-negative linear values. Exposure is
    applied as ``c * 2**exposure_ev`` before the curve. The "linear_clamp"
    mode is a debugging bypass (exposure + sRGB encode + clamp).
    """
    c = np.asarray(c, dtype=np.float32)
    if c.shape[-1] != 3:
        raise ValueError("tonemap expects (..., 3) input")
    c = np.maximum(c, 0.0) * np.exp2(np.float32(params.exposure_ev))
    if params.mode == "linear_clamp":
        return linear_to_srgb(c)
    v = c.astype(np.float64) @ _AGX_INSET.T
    with np.errstate(divide="ignore"):
        v = np.clip(np.log2(np.maximum(v, 1e-30)), _AGX_MIN_EV, _AGX_MAX_EV)
    v = (v - _AGX_MIN_EV) / (_AGX_MAX_EV - _AGX_MIN_EV)
    v = _agx_sigmoid(v)
    v = v @ _AGX_OUTSET.T
    return np.clip(v, 0.0, 1.0).astype(np.float32)

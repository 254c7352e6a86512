"""Environment map containers, sphere<->texture codecs, and HDR sampling.

Directional conventions (frozen here and in the bundle manifest docs):
  * +Z is the canonical "up"/center axis. The octahedral layout places +Z at
    uv (0.5, 0.5) and folds the -Z hemisphere outward, so all four corners
    decode to (0, 0, -1).
  * The equirectangular layout uses u = azimuth / 2pi (azimuth = atan2(y, x))
    and v = polar / pi with the polar angle measured from +Z, so the v = 0 row
    is the +Z pole.

Bilinear addressing is layout aware: equirect wraps in u and clamps in v,
octahedral texels that step over an edge re-enter through the fold (mirror
the stepped axis, flip the other), which keeps the diagonal seams continuous.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EQUIRECT = "equirect"
OCTAHEDRAL = "octahedral"


def _sign_not_zero(v):
    return np.where(v >= 0.0, 1.0, -1.0)


def dir_to_uv(layout: str, d):
    """Unit directions (..., 3) -> uv in [0, 1]^2 for the given layout."""
    d = np.asarray(d, dtype=np.float64)
    if layout == EQUIRECT:
        u = np.arctan2(d[..., 1], d[..., 0]) / (2.0 * np.pi)
        u = np.mod(u, 1.0)
        v = np.arccos(np.clip(d[..., 2], -1.0, 1.0)) / np.pi
        return np.stack([u, v], axis=-1)
    if layout == OCTAHEDRAL:
        l1 = np.abs(d[..., 0]) + np.abs(d[..., 1]) + np.abs(d[..., 2])
        p = d[..., :2] / np.maximum(l1[..., None], 1e-30)
        fold = np.stack(
            [
                (1.0 - np.abs(p[..., 1])) * _sign_not_zero(p[..., 0]),
                (1.0 - np.abs(p[..., 0])) * _sign_not_zero(p[..., 1]),
            ],
            axis=-1,
        )
        p = np.where((d[..., 2] < 0.0)[..., None], fold, p)
        return p * 0.5 + 0.5
    raise ValueError(f"unknown layout {layout!r}")


def uv_to_dir(layout: str, uv):
    """Inverse of dir_to_uv; returns unit directions (..., 3)."""
    uv = np.asarray(uv, dtype=np.float64)
    if layout == EQUIRECT:
        phi = 2.0 * np.pi * uv[..., 0]
        theta = np.pi * uv[..., 1]
        st = np.sin(theta)
        return np.stack(
            [st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1
        )
    if layout == OCTAHEDRAL:
        f = uv * 2.0 - 1.0
        z = 1.0 - np.abs(f[..., 0]) - np.abs(f[..., 1])
        unfold = np.stack(
            [
                (1.0 - np.abs(f[..., 1])) * _sign_not_zero(f[..., 0]),
                (1.0 - np.abs(f[..., 0])) * _sign_not_zero(f[..., 1]),
            ],
            axis=-1,
        )
        xy = np.where((z < 0.0)[..., None], unfold, f)
        d = np.concatenate([xy, z[..., None]], axis=-1)
        norm = np.linalg.norm(d, axis=-1, keepdims=True)
        return d / np.maximum(norm, 1e-30)
    raise ValueError(f"unknown layout {layout!r}")


def encode_octahedral_quantized(d, bits: int = 8):
    """Quantize directions to a (2^bits)^2 octahedral grid, precise variant.

    The naive rounding of the folded coordinates is refined by checking the
    four surrounding grid points and keeping the one whose decode is closest
    to the input direction; this is what keeps the worst-case error at 256^2
    (8 bits per axis) under half a degree.
    """
    d = np.asarray(d, dtype=np.float64)
    levels = float(2**bits - 1)
    f = dir_to_uv(OCTAHEDRAL, d) * 2.0 - 1.0
    base = np.floor((f + 1.0) / 2.0 * levels)
    best_q = None
    best_dot = np.full(d.shape[:-1], -np.inf)
    # 4x4 window: near the fold seam the best representable point can sit
    # one cell beyond the immediate floor/ceil square
    for dx in (-1.0, 0.0, 1.0, 2.0):
        for dy in (-1.0, 0.0, 1.0, 2.0):
            q = np.clip(base + np.array([dx, dy]), 0.0, levels)
            cand = uv_to_dir(OCTAHEDRAL, q / levels)
            dot = np.sum(cand * d, axis=-1)
            take = dot > best_dot
            best_dot = np.where(take, dot, best_dot)
            best_q = q if best_q is None else np.where(take[..., None], q, best_q)
    return best_q.astype(np.int64)


def decode_octahedral_quantized(q, bits: int = 8):
    levels = float(2**bits - 1)
    return uv_to_dir(OCTAHEDRAL, np.asarray(q, dtype=np.float64) / levels)


def _wrap_equirect(ix, iy, w, h):
    return np.mod(ix, w), np.clip(iy, 0, h - 1)


def _wrap_octahedral(ix, iy, n):
    """Fold out-of-range texel indices back through the octahedral edges.

    Crossing an edge mirrors the crossed axis about the edge and flips the
    other axis. Bilinear taps step at most one texel outside, so one x pass
    followed by one y pass (which sees the already-folded x) covers corners.
    """
    out_x = (ix < 0) | (ix > n - 1)
    if out_x.any():
        ix = np.where(ix < 0, -1 - ix, np.where(ix > n - 1, 2 * n - 1 - ix, ix))
        iy = np.where(out_x, n - 1 - iy, iy)
    out_y = (iy < 0) | (iy > n - 1)
    if out_y.any():
        iy = np.where(iy < 0, -1 - iy, np.where(iy > n - 1, 2 * n - 1 - iy, iy))
        ix = np.where(out_y, n - 1 - ix, ix)
    return ix, iy


@dataclass
class EnvironmentMap:
    """HDR incident-light field on an equirect or octahedral chart."""

    layout: str
    pixels: np.ndarray  # (h, w, 3) float32, linear radiance

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float32)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError("environment pixels must be (h, w, 3)")
        if self.layout == OCTAHEDRAL and self.pixels.shape[0] != self.pixels.shape[1]:
            raise ValueError("octahedral maps must be square")
        if not np.isfinite(self.pixels).all():
            raise ValueError("environment contains non-finite radiance")
        if (self.pixels < 0).any():
            raise ValueError("environment contains negative radiance")
        self._flat_pixels = self.pixels.reshape(-1, 3)
        self._fold_table = None

    def _fold_table_flat(self) -> np.ndarray:
        """Flattened fold table: entry (iy+1)*(n+2) + (ix+1) holds the flat
        pixel index of the octahedral fold of tap (ix, iy), taps in [-1, n]."""
        n = self.pixels.shape[0]
        if self._fold_table is None:
            span = np.arange(-1, n + 1)
            gx, gy = np.meshgrid(span, span)
            fx, fy = _wrap_octahedral(gx, gy, n)
            self._fold_table = np.ascontiguousarray(
                (fy * n + fx).astype(np.int64).reshape(-1)
            )
        return self._fold_table

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def sample_uv(self, uv) -> np.ndarray:
        """Bilinear lookup at uv (..., 2) with layout-aware wrapping.

        Interpolation runs in float32 (the storage precision); uv handling
        stays in float64 so texel addressing is exact.
        """
        uv = np.asarray(uv, dtype=np.float64)
        h, w = self.pixels.shape[:2]
        x = uv[..., 0] * w - 0.5
        y = uv[..., 1] * h - 0.5
        x0 = np.floor(x).astype(np.int64)
        y0 = np.floor(y).astype(np.int64)
        fx = (x - x0)[..., None].astype(np.float32)
        fy = (y - y0)[..., None].astype(np.float32)

        if self.layout == EQUIRECT:
            ix = np.stack([x0, x0 + 1, x0, x0 + 1])
            iy = np.stack([y0, y0, y0 + 1, y0 + 1])
            ix, iy = _wrap_equirect(ix, iy, w, h)
            c = self.pixels[iy, ix]  # (4, ..., 3) float32
        else:
            base = (y0 + 1) * (w + 2) + (x0 + 1)
            taps = base + np.array([0, 1, w + 2, w + 3]).reshape(
                (4,) + (1,) * base.ndim
            )
            c = self._flat_pixels[self._fold_table_flat()[taps]]
        top = c[0] * (1.0 - fx) + c[1] * fx
        bot = c[2] * (1.0 - fx) + c[3] * fx
        return (top * (1.0 - fy) + bot * fy).astype(np.float64)

    def sample(self, d) -> np.ndarray:
        """Bilinear radiance lookup for unit directions (..., 3)."""
        return self.sample_uv(dir_to_uv(self.layout, d))

    def texel_directions(self) -> np.ndarray:
        """Directions at every texel center, shape (h, w, 3)."""
        h, w = self.pixels.shape[:2]
        u = (np.arange(w) + 0.5) / w
        v = (np.arange(h) + 0.5) / h
        uu, vv = np.meshgrid(u, v)
        return uv_to_dir(self.layout, np.stack([uu, vv], axis=-1))

    def mean_radiance(self) -> np.ndarray:
        """Solid-angle-weighted mean radiance over the sphere."""
        if self.layout == OCTAHEDRAL:
            w = texel_solid_angles(self)
        else:
            h = self.pixels.shape[0]
            theta = (np.arange(h) + 0.5) / h * np.pi
            w = np.repeat(np.sin(theta)[:, None], self.pixels.shape[1], axis=1)
        w = w / w.sum()
        return np.einsum("hw,hwc->c", w, self.pixels.astype(np.float64))


def texel_solid_angles(env: EnvironmentMap) -> np.ndarray:
    """Per-texel solid angle (h, w).

    Equirect rows are exact; octahedral texels use the planar-quad area
    approximation (biased ~0.3% low), fine for sampling decisions.
    """
    h, w = env.pixels.shape[:2]
    if env.layout == EQUIRECT:
        theta_edges = np.arange(h + 1) / h * np.pi
        sa = (2.0 * np.pi / w) * (
            np.cos(theta_edges[:-1]) - np.cos(theta_edges[1:])
        )
        return np.repeat(sa[:, None], w, axis=1)
    # Octahedral: estimate by the area of the spherical quad spanned by the
    # texel corners; cheap and accurate enough for filtered importance
    # sampling decisions.
    u = np.arange(w + 1) / w
    v = np.arange(h + 1) / h
    uu, vv = np.meshgrid(u, v)
    corners = uv_to_dir(OCTAHEDRAL, np.stack([uu, vv], axis=-1))
    a = corners[:-1, :-1]
    b = corners[:-1, 1:]
    c = corners[1:, 1:]
    d = corners[1:, :-1]

    def tri_area(p, q, r):
        cross = np.cross(q - p, r - p)
        return 0.5 * np.linalg.norm(cross, axis=-1)

    return tri_area(a, b, c) + tri_area(a, c, d)


def rotate_directions(rotation: np.ndarray, d):
    """Apply a 3x3 rotation to direction arrays (..., 3)."""
    return np.asarray(d) @ np.asarray(rotation, dtype=np.float64).T


@dataclass
class EnvironmentPyramid:
    """Prefiltered specular mip chain plus a diffuse irradiance map.

    specular_levels[l] is filtered for level_roughness[l]; level 0 is the
    unfiltered (mirror) base copy. The diffuse map stores irradiance / pi so
    "albedo * lookup" is the exact Lambert term.
    """

    specular_levels: list[EnvironmentMap]
    diffuse: EnvironmentMap
    level_roughness: np.ndarray
    mode: str = "relight"
    seed: int = 0
    samples_per_level: tuple = field(default_factory=tuple)

    def __post_init__(self):
        self.level_roughness = np.asarray(self.level_roughness, dtype=np.float64)
        if len(self.specular_levels) != len(self.level_roughness):
            raise ValueError("one roughness per specular level required")
        res = [lv.width for lv in self.specular_levels]
        if any(res[i + 1] * 2 != res[i] for i in range(len(res) - 1)):
            raise ValueError("specular level resolutions must halve")
        if not (
            np.all(np.diff(self.level_roughness) > 0)
            and self.level_roughness[0] == 0.0
            and self.level_roughness[-1] == 1.0
        ):
            raise ValueError("level_roughness must increase strictly from 0 to 1")

    @property
    def num_levels(self) -> int:
        return len(self.specular_levels)

    def sample_specular(self, d, roughness) -> np.ndarray:
        """Trilinear lookup: bilinear in the two levels bracketing roughness.

        The chart uv is shared by every level, so the direction projection
        happens once and only the bilinear taps run per touched level.
        """
        d = np.asarray(d, dtype=np.float64)
        r = np.clip(np.asarray(roughness, dtype=np.float64), 0.0, 1.0)
        r = np.broadcast_to(r, d.shape[:-1])
        lv = np.interp(r, self.level_roughness, np.arange(self.num_levels))
        lo = np.clip(np.floor(lv).astype(np.int64), 0, self.num_levels - 1)
        hi = np.clip(lo + 1, 0, self.num_levels - 1)
        t = np.clip(lv - lo, 0.0, 1.0)[..., None]

        uv = dir_to_uv(self.specular_levels[0].layout, d)
        out = np.zeros(d.shape[:-1] + (3,), dtype=np.float64)
        for level in range(self.num_levels):
            sel_lo = lo == level
            sel_hi = hi == level
            if not (sel_lo.any() or sel_hi.any()):
                continue
            sel = sel_lo | sel_hi
            vals = self.specular_levels[level].sample_uv(uv[sel])
            if sel_lo.any():
                mask = sel_lo[sel]
                out[sel_lo] += vals[mask] * (1.0 - t[sel_lo])
            if sel_hi.any():
                mask = sel_hi[sel]
                out[sel_hi] += vals[mask] * t[sel_hi]
        return out

    def sample_diffuse(self, n) -> np.ndarray:
        return self.diffuse.sample(n)


def resample(env: EnvironmentMap, layout: str, resolution: int) -> EnvironmentMap:
    """Re-chart an environment to `layout` at `resolution` (bilinear pull)."""
    if layout == OCTAHEDRAL:
        h = w = resolution
    else:
        w, h = resolution, max(resolution // 2, 1)
    uu, vv = np.meshgrid(
        (np.arange(w) + 0.5) / w, (np.arange(h) + 0.5) / h
    )
    dirs = uv_to_dir(layout, np.stack([uu, vv], axis=-1))
    return EnvironmentMap(layout, env.sample(dirs).astype(np.float32))


def downsample_octahedral(pixels: np.ndarray) -> np.ndarray:
    """2x2 box reduction of a square octahedral chart."""
    h, w = pixels.shape[:2]
    p = pixels.reshape(h // 2, 2, w // 2, 2, -1)
    return p.mean(axis=(1, 3))


def build_mip_chain(env: EnvironmentMap, min_resolution: int = 1) -> list[EnvironmentMap]:
    """Box-filtered mip chain of an octahedral map, mip 0 = full resolution."""
    if env.layout != OCTAHEDRAL:
        raise ValueError("mip chains are built on octahedral charts")
    levels = [env.pixels.astype(np.float64)]
    while levels[-1].shape[0] > max(min_resolution, 1):
        levels.append(downsample_octahedral(levels[-1]))
    return [EnvironmentMap(OCTAHEDRAL, p.astype(np.float32)) for p in levels]

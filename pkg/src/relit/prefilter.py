"""Split-sum precomputation: the BRDF lookup table, the prefiltered specular
pyramid, the diffuse irradiance map, and multiple-scattering compensation.

The specular pyramid uses filtered importance sampling: each GGX sample reads
the source environment at a mip level matched to the sample's solid angle
(1 / (N * pdf)), which keeps low-probability samples from injecting fireflies
at the modest per-level sample counts used here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import envmap as em
from .brdf import geometry_smith_ggx
from .parallel import run_row_blocks
from .sampling import (
    MIN_ROUGHNESS,
    halton2d,
    sample_cosine_hemisphere,
    sample_ggx_half_vector,
    texel_hash,
)

OPTIMIZATION_SCHEDULE = (0, 4, 16, 24, 24)
RELIGHT_SCHEDULE = (0, 32, 64, 128, 256, 256, 256, 256)

DEFAULT_DIFFUSE_RESOLUTION = 32
DIFFUSE_SAMPLES = 16


@dataclass(frozen=True)
class PrefilterConfig:
    """Pyramid build settings; the sample schedule follows the mode."""

    mode: str = "relight"  # "optimization" (5 levels) | "relight" (8 levels)
    base_resolution: int | None = None
    seed: int = 0
    diffuse_resolution: int = DEFAULT_DIFFUSE_RESOLUTION
    threads: int | None = None

    @property
    def samples_per_level(self) -> tuple:
        if self.mode == "optimization":
            return OPTIMIZATION_SCHEDULE
        if self.mode == "relight":
            return RELIGHT_SCHEDULE
        raise ValueError(f"unknown prefilter mode {self.mode!r}")

    @property
    def resolution(self) -> int:
        if self.base_resolution is not None:
            return self.base_resolution
        return 128 if self.mode == "optimization" else 256


@dataclass
class DfgLut:
    """Split-sum BRDF integral table over (n_dot_v, roughness).

    entries[..., 0] scales F0, entries[..., 1] is the F0-independent bias.
    """

    entries: np.ndarray  # (res, res, 2) float32
    sample_count: int

    @property
    def resolution(self) -> int:
        return self.entries.shape[0]

    def lookup(self, n_dot_v, roughness):
        """Bilinear (scale, bias) lookup with clamped edges."""
        res = self.resolution
        x = np.clip(np.asarray(n_dot_v, dtype=np.float64), 0.0, 1.0) * res - 0.5
        y = np.clip(np.asarray(roughness, dtype=np.float64), 0.0, 1.0) * res - 0.5
        x0 = np.clip(np.floor(x).astype(np.int64), 0, res - 1)
        y0 = np.clip(np.floor(y).astype(np.int64), 0, res - 1)
        x1 = np.minimum(x0 + 1, res - 1)
        y1 = np.minimum(y0 + 1, res - 1)
        fx = np.clip(x - x0, 0.0, 1.0)[..., None]
        fy = np.clip(y - y0, 0.0, 1.0)[..., None]
        e = self.entries.astype(np.float64)
        top = e[y0, x0] * (1 - fx) + e[y0, x1] * fx
        bot = e[y1, x0] * (1 - fx) + e[y1, x1] * fx
        return top * (1 - fy) + bot * fy


def _integrate_dfg_cell(n_dot_v, roughness, sample_count: int, offset):
    """Monte Carlo estimate of the (scale, bias) pair for one or more cells.

    n_dot_v / roughness / offset are broadcast-compatible arrays; sampling is
    Halton-driven from `offset` so the build is deterministic.
    """
    nv = np.maximum(np.asarray(n_dot_v, dtype=np.float64), 1e-4)
    r = np.asarray(roughness, dtype=np.float64)
    v = np.stack([np.sqrt(1.0 - nv * nv), np.zeros_like(nv), nv], axis=-1)
    n = np.zeros_like(v)
    n[..., 2] = 1.0

    u = halton2d(offset, sample_count)  # (..., S, 2)
    h, _ = sample_ggx_half_vector(u, r[..., None], n[..., None, :])  # (..., S, 3)
    v_dot_h = np.sum(v[..., None, :] * h, axis=-1)
    l = 2.0 * v_dot_h[..., None] * h - v[..., None, :]
    n_dot_l = l[..., 2]
    n_dot_h = np.clip(h[..., 2], 1e-8, 1.0)
    good = (n_dot_l > 0.0) & (v_dot_h > 0.0)

    g = geometry_smith_ggx(nv[..., None], np.clip(n_dot_l, 1e-8, 1.0), r[..., None])
    g_vis = g * np.clip(v_dot_h, 0.0, 1.0) / (n_dot_h * nv[..., None])
    fc = (1.0 - np.clip(v_dot_h, 0.0, 1.0)) ** 5
    scale = np.where(good, (1.0 - fc) * g_vis, 0.0).mean(axis=-1)
    bias = np.where(good, fc * g_vis, 0.0).mean(axis=-1)
    return scale, bias


def build_dfg_lut(
    resolution: int = 64, sample_count: int = 1024, seed: int = 0
) -> DfgLut:
    """Tabulate the split-sum BRDF integral on an equally spaced grid."""
    if resolution < 16:
        raise ValueError("DFG LUT resolution must be >= 16")
    if sample_count < 64:
        raise ValueError("DFG LUT needs at least 64 samples per cell")
    nv = (np.arange(resolution) + 0.5) / resolution
    r = (np.arange(resolution) + 0.5) / resolution
    nv_grid, r_grid = np.meshgrid(nv, r)  # rows: roughness, cols: n_dot_v
    entries = np.zeros((resolution, resolution, 2), dtype=np.float32)

    def worker(y0, y1):
        xs = np.arange(resolution)[None, :]
        ys = np.arange(y0, y1)[:, None]
        offs = texel_hash(xs, ys, seed)
        scale, bias = _integrate_dfg_cell(
            nv_grid[y0:y1], r_grid[y0:y1], sample_count, offs
        )
        entries[y0:y1, :, 0] = scale
        entries[y0:y1, :, 1] = bias

    run_row_blocks(worker, resolution, threads=1, block=16)
    return DfgLut(entries=entries, sample_count=sample_count)


def _fis_mip_levels(pdf, sample_count: int, base_texels: int, n_mips: int,
                    bias: float = 0.0):
    """Source mip per sample: 0.5 * log2(sample solid angle / texel solid angle).

    A negative `bias` reads finer mips, trading noise for less filter bias;
    the diffuse prefilter uses -1 so wide cosine footprints do not smear
    radiance across the horizon.
    """
    omega_s = 1.0 / np.maximum(sample_count * pdf, 1e-12)
    omega_t = 4.0 * np.pi / base_texels
    mip = 0.5 * np.log2(np.maximum(omega_s / omega_t, 1e-30)) + bias
    return np.clip(mip, 0.0, n_mips - 1.0)


def _sample_mip_chain(chain, dirs, mips):
    """Trilinear read from a mip chain (bilinear in-level, linear across)."""
    lo = np.floor(mips).astype(np.int64)
    hi = np.minimum(lo + 1, len(chain) - 1)
    t = (mips - lo)[..., None]
    out = np.zeros(dirs.shape[:-1] + (3,), dtype=np.float64)
    for level, level_map in enumerate(chain):
        sel_lo = lo == level
        sel_hi = hi == level
        if not (sel_lo.any() or sel_hi.any()):
            continue
        sel = sel_lo | sel_hi
        vals = level_map.sample(dirs[sel])
        if sel_lo.any():
            out[sel_lo] += vals[sel_lo[sel]] * (1.0 - t[sel_lo])
        if sel_hi.any():
            out[sel_hi] += vals[sel_hi[sel]] * t[sel_hi]
    return out


def prefilter_specular(
    env: em.EnvironmentMap, cfg: PrefilterConfig
) -> em.EnvironmentPyramid:
    """Build the prefiltered specular pyramid (and diffuse map) for `env`.

    Level 0 is the unfiltered mirror copy at the base resolution; level l is
    the environment convolved with the GGX lobe for roughness l / (L - 1)
    under the n = v = texel-direction convention.
    """
    if not np.isfinite(env.pixels).all():
        raise ValueError("environment contains non-finite texels")
    base = env
    if env.layout != em.OCTAHEDRAL or env.width != cfg.resolution:
        base = em.resample(env, em.OCTAHEDRAL, cfg.resolution)

    schedule = cfg.samples_per_level
    n_levels = len(schedule)
    level_roughness = np.arange(n_levels) / (n_levels - 1)
    chain = em.build_mip_chain(base)
    base_texels = base.width * base.height

    levels = [em.EnvironmentMap(em.OCTAHEDRAL, base.pixels.copy())]
    for l in range(1, n_levels):
        res = cfg.resolution >> l
        if res < 1:
            raise ValueError("base resolution too small for the level count")
        count = schedule[l]
        rough = max(level_roughness[l], MIN_ROUGHNESS)
        out = np.zeros((res, res, 3), dtype=np.float32)

        def worker(y0, y1, res=res, count=count, rough=rough, out=out, lvl=l):
            uu, vv = np.meshgrid(
                (np.arange(res) + 0.5) / res, (np.arange(y0, y1) + 0.5) / res
            )
            d = em.uv_to_dir(em.OCTAHEDRAL, np.stack([uu, vv], axis=-1))
            offs = texel_hash(
                np.arange(res)[None, :], np.arange(y0, y1)[:, None], cfg.seed + lvl
            )
            u = halton2d(offs, count)  # (rows, res, S, 2)
            h, _ = sample_ggx_half_vector(u, rough, d[..., None, :])
            v = d[..., None, :]
            v_dot_h = np.sum(v * h, axis=-1, keepdims=True)
            w_i = 2.0 * v_dot_h * h - v
            n_dot_l = np.clip(np.sum(d[..., None, :] * w_i, axis=-1), 0.0, 1.0)
            # pdf of w_i under half-vector sampling: D(h)(n.h) / (4 (v.h))
            n_dot_h = np.clip(np.sum(d[..., None, :] * h, axis=-1), 1e-8, 1.0)
            alpha2 = rough**4
            dd = n_dot_h * n_dot_h * (alpha2 - 1.0) + 1.0
            pdf = (alpha2 / (np.pi * dd * dd) * n_dot_h) / np.maximum(
                4.0 * np.clip(v_dot_h[..., 0], 1e-8, None), 1e-8
            )
            mips = _fis_mip_levels(pdf, count, base_texels, len(chain))
            radiance = _sample_mip_chain(chain, w_i, mips)
            wsum = np.maximum(n_dot_l.sum(axis=-1), 1e-12)
            acc = (radiance * n_dot_l[..., None]).sum(axis=-2)
            out[y0:y1] = (acc / wsum[..., None]).astype(np.float32)

        run_row_blocks(worker, res, threads=cfg.threads)
        levels.append(em.EnvironmentMap(em.OCTAHEDRAL, out))

    diffuse = prefilter_diffuse(base, cfg, chain=chain)
    return em.EnvironmentPyramid(
        specular_levels=levels,
        diffuse=diffuse,
        level_roughness=level_roughness,
        mode=cfg.mode,
        seed=cfg.seed,
        samples_per_level=tuple(schedule),
    )


def prefilter_diffuse(
    env: em.EnvironmentMap, cfg: PrefilterConfig, chain=None
) -> em.EnvironmentMap:
    """Cosine-filtered low-res map storing irradiance / pi.

    16 cosine-weighted samples per texel; cosine weights cancel against the
    pdf so the texel is the plain mean of the sampled radiance.
    """
    base = env
    if env.layout != em.OCTAHEDRAL:
        base = em.resample(env, em.OCTAHEDRAL, cfg.resolution)
    if chain is None:
        chain = em.build_mip_chain(base)
    res = cfg.diffuse_resolution
    base_texels = base.width * base.height
    out = np.zeros((res, res, 3), dtype=np.float32)

    def worker(y0, y1):
        uu, vv = np.meshgrid(
            (np.arange(res) + 0.5) / res, (np.arange(y0, y1) + 0.5) / res
        )
        d = em.uv_to_dir(em.OCTAHEDRAL, np.stack([uu, vv], axis=-1))
        offs = texel_hash(
            np.arange(res)[None, :], np.arange(y0, y1)[:, None], cfg.seed + 101
        )
        u = halton2d(offs, DIFFUSE_SAMPLES)
        w_i, pdf = sample_cosine_hemisphere(u, d[..., None, :])
        mips = _fis_mip_levels(pdf, DIFFUSE_SAMPLES, base_texels, len(chain), bias=-1.0)
        radiance = _sample_mip_chain(chain, w_i, mips)
        out[y0:y1] = radiance.mean(axis=-2).astype(np.float32)

    run_row_blocks(worker, res, threads=cfg.threads)
    return em.EnvironmentMap(em.OCTAHEDRAL, out)


def multiscatter_terms(f0, scale, bias):
    """Energy-compensation factors from the LUT entry.

    Returns (fss_ess, ems, fms): the single-scatter term f0*scale + bias, the
    energy deficit 1 - (scale + bias), and the average-Fresnel multiple
    scattering factor. The shader adds fms * ems * irradiance.
    """
    f0 = np.asarray(f0, dtype=np.float64)
    scale = np.asarray(scale, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    fss_ess = f0 * scale + bias
    ess = np.clip(scale + bias, 0.0, 1.0)
    ems = 1.0 - ess
    f_avg = f0 + (1.0 - f0) / 21.0
    fms = fss_ess * f_avg / np.maximum(1.0 - ems * f_avg, 1e-6)
    return fss_ess, ems, fms

"""Brute-force Monte Carlo reference renderer.

Integrates the hemisphere rendering integral directly with the analytic
BRDF: the diffuse term with cosine-weighted samples, the specular term with
GGX half-vector samples, each divided by its own pdf (the two terms add, so
the per-lobe estimators stay individually unbiased and no MIS weighting is
needed). Slow on purpose; this is the ground truth the fast path is tested
against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import envmap as em
from .brdf import f0_from_material, fresnel_schlick, geometry_smith_ggx
from .parallel import run_row_blocks
from .sampling import (
    MIN_ROUGHNESS,
    halton2d,
    sample_cosine_hemisphere,
    sample_ggx_half_vector,
    texel_hash,
)
from .shading import MaterialGBuffer


@dataclass(frozen=True)
class OracleConfig:
    samples_per_pixel: int = 4096
    seed: int = 0
    lobe_split: float = 0.5  # fraction of samples spent on the specular lobe
    threads: int | None = None

    def __post_init__(self):
        if not (0.0 < self.lobe_split < 1.0):
            raise ValueError("lobe_split must lie strictly between 0 and 1")
        if self.samples_per_pixel < 4:
            raise ValueError("samples_per_pixel must be >= 4")


def _specular_estimate(n, v, f0, roughness, env, rot, u):
    """Mean of f_spec * L * cos / pdf over GGX half-vector samples."""
    h, _ = sample_ggx_half_vector(u, roughness[..., None], n[..., None, :])
    v_dot_h = np.sum(v[..., None, :] * h, axis=-1)
    w_i = 2.0 * v_dot_h[..., None] * h - v[..., None, :]
    n_dot_l = np.sum(n[..., None, :] * w_i, axis=-1)
    n_dot_v = np.clip(np.sum(n * v, axis=-1), 1e-6, 1.0)
    n_dot_h = np.clip(np.sum(n[..., None, :] * h, axis=-1), 1e-8, 1.0)
    good = (n_dot_l > 0.0) & (v_dot_h > 1e-8)

    # f * cos / pdf collapses to F * G * (v.h) / ((n.v)(n.h)): D cancels.
    g = geometry_smith_ggx(
        n_dot_v[..., None], np.clip(n_dot_l, 1e-8, 1.0), roughness[..., None]
    )
    weight = g * np.clip(v_dot_h, 0.0, None) / (n_dot_v[..., None] * n_dot_h)
    f = fresnel_schlick(np.clip(v_dot_h, 0.0, 1.0), f0[..., None, :])
    radiance = env.sample(em.rotate_directions(rot, w_i))
    contrib = f * (weight * good)[..., None] * radiance
    return contrib.mean(axis=-2)


def _diffuse_estimate(n, albedo, metallic, env, rot, u):
    """Mean of (albedo/pi)(1-m) * L * cos / pdf over cosine samples."""
    w_i, _ = sample_cosine_hemisphere(u, n[..., None, :])
    radiance = env.sample(em.rotate_directions(rot, w_i))
    factor = albedo * (1.0 - metallic[..., None])
    return factor * radiance.mean(axis=-2)


def shade_pixel_reference(
    n, v, albedo, roughness, metallic, env: em.EnvironmentMap,
    cfg: OracleConfig = OracleConfig(), rot=None, sample_offset=0,
):
    """Reference radiance for a batch of pixels.

    All pixel arrays broadcast over a common (...) shape with vectors in the
    trailing axis. `sample_offset` keys the Halton stream (pixel hash).
    """
    n = np.asarray(n, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    albedo = np.asarray(albedo, dtype=np.float64)
    roughness = np.clip(np.asarray(roughness, dtype=np.float64), MIN_ROUGHNESS, 1.0)
    metallic = np.asarray(metallic, dtype=np.float64)
    rot = np.eye(3) if rot is None else rot
    offs = np.asarray(sample_offset, dtype=np.uint64)

    n_spec = max(int(round(cfg.samples_per_pixel * cfg.lobe_split)), 1)
    n_diff = max(cfg.samples_per_pixel - n_spec, 1)
    f0 = f0_from_material(albedo, metallic)

    # Cranley-Patterson shift per stream: keyed off the offset so distinct
    # pixels/seeds decorrelate beyond their block positions
    shift = np.stack(
        [
            texel_hash(offs, 977, cfg.seed).astype(np.float64) / float(1 << 26),
            texel_hash(offs, 3181, cfg.seed).astype(np.float64) / float(1 << 26),
        ],
        axis=-1,
    )
    u_spec = halton2d(offs, n_spec, rotation=shift)
    spec = _specular_estimate(n, v, f0, roughness, env, rot, u_spec)
    u_diff = halton2d(offs + np.uint64(n_spec), n_diff, rotation=shift)
    diff = _diffuse_estimate(n, albedo, metallic, env, rot, u_diff)
    return spec + diff


def render_reference(
    g: MaterialGBuffer, env: em.EnvironmentMap, cfg: OracleConfig = OracleConfig()
) -> np.ndarray:
    """Per-pixel reference render of a G-buffer; alpha-masked, linear HDR."""
    w, h = g.resolution
    out = np.zeros((h, w, 3), dtype=np.float32)
    normals = g.decoded_normals()
    views = g.camera.view_directions(w, h)
    rot = g.camera.env_rotation
    albedo = g.albedo.astype(np.float64)
    rough = g.roughness.astype(np.float64)
    metal = g.metallic.astype(np.float64)
    alpha = g.alpha.astype(np.float64)

    xs, ys = np.meshgrid(np.arange(w), np.arange(h))
    pixel_offsets = texel_hash(xs, ys, cfg.seed)

    # pixel batch size keeps peak sample arrays around tens of megabytes
    batch = max(1, int(2**21 // max(cfg.samples_per_pixel, 1)))

    def worker(y0, y1):
        covered = alpha[y0:y1] > 0.0
        if not covered.any():
            return
        iy, ix = np.nonzero(covered)
        block = np.zeros((y1 - y0, w, 3), dtype=np.float64)
        for s in range(0, iy.size, batch):
            sel_y = iy[s : s + batch]
            sel_x = ix[s : s + batch]
            block[sel_y, sel_x] = shade_pixel_reference(
                normals[y0:y1][sel_y, sel_x],
                views[y0:y1][sel_y, sel_x],
                albedo[y0:y1][sel_y, sel_x],
                rough[y0:y1][sel_y, sel_x],
                metal[y0:y1][sel_y, sel_x],
                env,
                cfg,
                rot=rot,
                sample_offset=pixel_offsets[y0:y1][sel_y, sel_x],
            )
        out[y0:y1] = (block * alpha[y0:y1][..., None]).astype(np.float32)

    run_row_blocks(worker, h, threads=cfg.threads, block=8)
    return out

"""Cook-Torrance/GGX microfacet BRDF with the Disney basecolor /
roughness / metallic parametrization.

Conventions, shared with the prefilter and reference integrators:
  alpha = roughness^2, roughness floored at MIN_ROUGHNESS,
  Smith G as the product of two Schlick-GGX terms with k = alpha / 2,
  F0 = 0.04 for dielectrics blended to basecolor by metallic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampling import MIN_ROUGHNESS

DIELECTRIC_F0 = 0.04


@dataclass(frozen=True)
class MaterialSample:
    """Per-point material: basecolor in [0,1]^3, roughness and metallic in [0,1]."""

    basecolor: tuple
    roughness: float
    metallic: float


def clamp_roughness(r):
    return np.maximum(r, MIN_ROUGHNESS)


def f0_from_material(basecolor, metallic):
    """glTF convention: F0 = 0.04 (1 - m) + basecolor * m."""
    basecolor = np.asarray(basecolor, dtype=np.float64)
    m = np.asarray(metallic, dtype=np.float64)[..., None]
    return DIELECTRIC_F0 * (1.0 - m) + basecolor * m


def fresnel_schlick(cos_theta, f0):
    """f0 + (1 - f0)(1 - cos_theta)^5.

    A non-scalar f0 is treated as carrying a trailing channel axis, which
    broadcasts against any batch shape of cos_theta.
    """
    c = np.clip(np.asarray(cos_theta, dtype=np.float64), 0.0, 1.0)
    f0 = np.asarray(f0, dtype=np.float64)
    if f0.ndim >= 1:
        c = c[..., None]
    return f0 + (1.0 - f0) * (1.0 - c) ** 5


def ndf_ggx(n_dot_h, roughness):
    """GGX normal distribution, alpha = roughness^2 (floored)."""
    alpha = clamp_roughness(np.asarray(roughness, dtype=np.float64)) ** 2
    a2 = alpha * alpha
    nh = np.clip(np.asarray(n_dot_h, dtype=np.float64), 0.0, 1.0)
    d = nh * nh * (a2 - 1.0) + 1.0
    return a2 / (np.pi * d * d)


def geometry_smith_ggx(n_dot_v, n_dot_l, roughness):
    """Separable Smith masking-shadowing, Schlick-GGX with k = alpha/2."""
    alpha = clamp_roughness(np.asarray(roughness, dtype=np.float64)) ** 2
    k = alpha / 2.0
    nv = np.clip(np.asarray(n_dot_v, dtype=np.float64), 1e-8, 1.0)
    nl = np.clip(np.asarray(n_dot_l, dtype=np.float64), 1e-8, 1.0)
    return (nv / (nv * (1.0 - k) + k)) * (nl / (nl * (1.0 - k) + k))


def eval_brdf(n, w_i, w_o, basecolor, roughness, metallic):
    """Full BRDF value of Eq.-style Cook-Torrance + Lambert diffuse.

    All direction args are unit (..., 3) arrays; material args broadcast.
    Returns (..., 3) reflectance density; zero where either cosine <= 0.
    """
    n = np.asarray(n, dtype=np.float64)
    w_i = np.asarray(w_i, dtype=np.float64)
    w_o = np.asarray(w_o, dtype=np.float64)
    basecolor = np.asarray(basecolor, dtype=np.float64)
    metallic = np.asarray(metallic, dtype=np.float64)

    n_dot_l = np.sum(n * w_i, axis=-1)
    n_dot_v = np.sum(n * w_o, axis=-1)
    valid = (n_dot_l > 0.0) & (n_dot_v > 0.0)

    h = w_i + w_o
    h_norm = np.linalg.norm(h, axis=-1, keepdims=True)
    h = h / np.maximum(h_norm, 1e-12)
    n_dot_h = np.clip(np.sum(n * h, axis=-1), 0.0, 1.0)
    v_dot_h = np.clip(np.sum(w_o * h, axis=-1), 0.0, 1.0)

    d = ndf_ggx(n_dot_h, roughness)
    g = geometry_smith_ggx(n_dot_v, n_dot_l, roughness)
    f0 = f0_from_material(basecolor, metallic)
    f = fresnel_schlick(v_dot_h, f0)

    denom = 4.0 * np.clip(n_dot_v, 1e-8, None) * np.clip(n_dot_l, 1e-8, None)
    spec = f * (d * g / denom)[..., None]
    diff = basecolor / np.pi * (1.0 - metallic)[..., None]
    out = spec + diff
    return np.where(valid[..., None], out, 0.0)

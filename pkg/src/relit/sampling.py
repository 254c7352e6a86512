"""Low-discrepancy sequences and hemisphere importance sampling.

Everything here is a pure function of integer indices, so sample streams
are reproducible and can be partitioned across texels at will. Per-texel
decorrelation works by offsetting the Halton index with an integer hash of
the texel coordinate and the run seed.
"""

from __future__ import annotations

import numpy as np

MIN_ROUGHNESS = 0.02  # NDF singularity guard, shared with relit.brdf


def halton(index, base: int):
    """Radical-inverse value(s) of `index` in `base`, in [0, 1)."""
    if base < 2:
        raise ValueError("halton base must be >= 2")
    if base == 2:
        # bit reversal of the 32-bit index
        v = np.asarray(index, dtype=np.uint64)
        if (v >> np.uint64(32)).max(initial=0) > 0:
            raise ValueError("halton base-2 index must fit in 32 bits")
        v = v.astype(np.uint32)
        v = ((v << np.uint32(16)) | (v >> np.uint32(16))).astype(np.uint32)
        v = (((v & np.uint32(0x00FF00FF)) << np.uint32(8)) | ((v & np.uint32(0xFF00FF00)) >> np.uint32(8))).astype(np.uint32)
        v = (((v & np.uint32(0x0F0F0F0F)) << np.uint32(4)) | ((v & np.uint32(0xF0F0F0F0)) >> np.uint32(4))).astype(np.uint32)
        v = (((v & np.uint32(0x33333333)) << np.uint32(2)) | ((v & np.uint32(0xCCCCCCCC)) >> np.uint32(2))).astype(np.uint32)
        v = (((v & np.uint32(0x55555555)) << np.uint32(1)) | ((v & np.uint32(0xAAAAAAAA)) >> np.uint32(1))).astype(np.uint32)
        return v.astype(np.float64) * 2.3283064365386963e-10  # 2^-32
    idx = np.array(index, dtype=np.uint32, copy=True)
    b = np.uint32(base)
    result = np.zeros(idx.shape, dtype=np.float64)
    frac = 1.0
    while idx.max(initial=0) > 0:
        frac /= base
        result += frac * (idx % b).astype(np.float64)
        idx //= b
    return result


def halton2d(start_index, count: int, rotation=None):
    """`count` consecutive (base-2, base-3) Halton points from `start_index`.

    `start_index` may be an array; output shape is start.shape + (count, 2).
    `rotation` (broadcastable (..., 2)) applies a Cranley-Patterson shift
    mod 1, which decorrelates otherwise structured index blocks without
    losing the low-discrepancy property.
    """
    start = np.asarray(start_index, dtype=np.uint64)
    idx = start[..., None] + np.arange(count, dtype=np.uint64)
    pts = np.stack([halton(idx, 2), halton(idx, 3)], axis=-1)
    if rotation is not None:
        pts = np.mod(pts + np.asarray(rotation, dtype=np.float64)[..., None, :], 1.0)
    return pts


def texel_hash(x, y, seed: int = 0):
    """Deterministic 32-bit scramble of a texel coordinate and seed.

    Used to offset Halton indices so neighbouring texels draw decorrelated
    subsequences. Plain integer mix (Wang-style), not cryptographic.
    """
    h = (
        np.asarray(x, dtype=np.uint64)
        + np.asarray(y, dtype=np.uint64) * np.uint64(9781)
        + np.uint64(seed) * np.uint64(6271)
    ) & np.uint64(0xFFFFFFFF)
    h = (h ^ (h >> np.uint64(16))) * np.uint64(0x45D9F3B) & np.uint64(0xFFFFFFFF)
    h = (h ^ (h >> np.uint64(16))) * np.uint64(0x45D9F3B) & np.uint64(0xFFFFFFFF)
    h = h ^ (h >> np.uint64(16))
    # keep offsets below 2^26 so offset+count stays cheap for radical inversion
    return h & np.uint64(0x3FFFFFF)


def build_onb(n):
    """Orthonormal tangent/bitangent for unit normals `n` (..., 3).

    Branchless frame from Pixar's revised ONB construction; deterministic
    and stable for every unit vector including the poles.
    """
    n = np.asarray(n, dtype=np.float64)
    nx, ny, nz = n[..., 0], n[..., 1], n[..., 2]
    sign = np.where(nz >= 0.0, 1.0, -1.0)
    a = -1.0 / (sign + nz)
    b = nx * ny * a
    t = np.stack([1.0 + sign * nx * nx * a, sign * b, -sign * nx], axis=-1)
    bt = np.stack([b, sign + ny * ny * a, -ny], axis=-1)
    return t, bt


def _to_world(local, n):
    t, b = build_onb(n)
    return (
        local[..., 0:1] * t + local[..., 1:2] * b + local[..., 2:3] * n
    )


def sample_ggx_half_vector(u, roughness, n):
    """GGX-NDF-proportional half vectors about `n`.

    `u` is (..., 2) in [0,1)^2; uses the Disney remap alpha = roughness^2 and
    classic NDF sampling, so the solid-angle pdf of the returned direction is
    D(h) * (n . h). Returns (dir, pdf).
    """
    u = np.asarray(u, dtype=np.float64)
    r = np.maximum(np.asarray(roughness, dtype=np.float64), MIN_ROUGHNESS)
    alpha = r * r
    a2 = alpha * alpha
    cos_t = np.sqrt((1.0 - u[..., 0]) / (1.0 + (a2 - 1.0) * u[..., 0]))
    sin_t = np.sqrt(np.maximum(1.0 - cos_t * cos_t, 0.0))
    phi = 2.0 * np.pi * u[..., 1]
    local = np.stack([np.cos(phi) * sin_t, np.sin(phi) * sin_t, cos_t], axis=-1)
    h = _to_world(local, np.asarray(n, dtype=np.float64))
    denom = cos_t * cos_t * (a2 - 1.0) + 1.0
    pdf = a2 / (np.pi * denom * denom) * cos_t
    return h, pdf


def sample_cosine_hemisphere(u, n):
    """Cosine-weighted directions about `n`; pdf = (n . dir) / pi."""
    u = np.asarray(u, dtype=np.float64)
    cos_t = np.sqrt(np.maximum(1.0 - u[..., 0], 0.0))
    sin_t = np.sqrt(np.maximum(1.0 - cos_t * cos_t, 0.0))
    phi = 2.0 * np.pi * u[..., 1]
    local = np.stack([np.cos(phi) * sin_t, np.sin(phi) * sin_t, cos_t], axis=-1)
    d = _to_world(local, np.asarray(n, dtype=np.float64))
    return d, cos_t / np.pi

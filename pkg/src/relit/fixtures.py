"""Synthetic G-buffer scenes and procedural HDR probes for tests and demos.

Sphere buffers are ray-cast analytically (exact normals, exact coverage), so
they make trustworthy ground truth for shading comparisons. The "studio"
probe is a deterministic stand-in for a captured HDRI: sky gradient, ground
bounce, a sun disk, and two area lights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import envmap as em
from .shading import CameraModel, MaterialGBuffer, orbit_camera_rotation

# the standard acceptance scene: roughness columns x metallic rows
THREE_SPHERES_ROUGHNESS = (0.2, 0.5, 0.9)
THREE_SPHERES_METALLIC = (0.0, 1.0)
THREE_SPHERES_ALBEDO = {
    0.0: ((0.80, 0.33, 0.27), (0.30, 0.62, 0.80), (0.76, 0.70, 0.32)),
    1.0: ((1.00, 0.77, 0.34), (0.95, 0.93, 0.88), (0.95, 0.64, 0.54)),
}


@dataclass(frozen=True)
class SphereSpec:
    center: tuple  # world position
    radius: float
    albedo: tuple
    roughness: float
    metallic: float


def three_spheres_scene() -> list[SphereSpec]:
    spheres = []
    for row, metal in enumerate(THREE_SPHERES_METALLIC):
        for col, rough in enumerate(THREE_SPHERES_ROUGHNESS):
            spheres.append(
                SphereSpec(
                    center=(-0.7 + 0.7 * col, 0.45 - 0.9 * row, 0.0),
                    radius=0.32,
                    albedo=THREE_SPHERES_ALBEDO[metal][col],
                    roughness=rough,
                    metallic=metal,
                )
            )
    return spheres


def _raycast_spheres(
    spheres: list[SphereSpec], res: int, camera: CameraModel, distance: float = 4.0
):
    """Nearest-hit sphere index, world hit points, and world normals."""
    rot = orbit_camera_rotation(camera.elevation_deg, camera.azimuth_deg)
    cam_pos = rot[:, 2] * distance  # camera +Z axis points from origin to camera
    v_cam = camera.view_directions(res, res)
    ray_dir = -(v_cam @ rot.T)  # camera->scene rays in world space

    best_t = np.full((res, res), np.inf)
    best_idx = np.full((res, res), -1, dtype=np.int32)
    for i, s in enumerate(spheres):
        oc = cam_pos - np.asarray(s.center)
        b = 2.0 * np.sum(ray_dir * oc, axis=-1)
        c = float(np.dot(oc, oc) - s.radius**2)
        disc = b * b - 4.0 * c
        hit = disc > 0.0
        t = np.where(hit, (-b - np.sqrt(np.maximum(disc, 0.0))) / 2.0, np.inf)
        closer = (t > 0.0) & (t < best_t)
        best_t = np.where(closer, t, best_t)
        best_idx = np.where(closer, i, best_idx)

    hit_points = cam_pos + ray_dir * np.where(np.isfinite(best_t), best_t, 0.0)[..., None]
    normals_w = np.zeros((res, res, 3))
    for i, s in enumerate(spheres):
        sel = best_idx == i
        normals_w[sel] = (hit_points[sel] - np.asarray(s.center)) / s.radius
    return best_idx, normals_w, rot


def make_sphere_bundle(
    kind: str = "three-spheres",
    res: int = 128,
    frames: int = 1,
    projection: str = "pinhole",
    fov_deg: float = 33.8,
    elevation_deg: float = 15.0,
    material: tuple = (0.5, 0.0),  # (roughness, metallic) for single-sphere kinds
    albedo: tuple = (0.75, 0.75, 0.75),
) -> list[MaterialGBuffer]:
    """Analytic sphere G-buffers on an orbit of `frames` azimuth steps."""
    if res < 16:
        raise ValueError("fixture resolution must be >= 16")
    if kind == "three-spheres":
        spheres = three_spheres_scene()
    elif kind == "sphere":
        spheres = [
            SphereSpec((0.0, 0.0, 0.0), 0.9, albedo, material[0], material[1])
        ]
    else:
        raise ValueError(f"unknown sphere fixture kind {kind!r}")

    buffers = []
    for k in range(frames):
        azimuth = 360.0 * k / frames
        camera = CameraModel(
            projection=projection,
            fov_deg=fov_deg,
            env_rotation=orbit_camera_rotation(elevation_deg, azimuth),
            elevation_deg=elevation_deg,
            azimuth_deg=azimuth,
        )
        idx, normals_w, rot = _raycast_spheres(spheres, res, camera)
        covered = idx >= 0
        normals_c = normals_w @ rot  # world -> camera: R^T n, rows dot columns

        albedo_plane = np.zeros((res, res, 3), dtype=np.float32)
        orm = np.zeros((res, res, 3), dtype=np.float32)
        for i, s in enumerate(spheres):
            sel = idx == i
            albedo_plane[sel] = s.albedo
            orm[sel, 1] = s.roughness
            orm[sel, 2] = s.metallic

        normal_enc = np.zeros((res, res, 3), dtype=np.float32)
        normal_enc[...] = (0.5, 0.5, 1.0)  # background: straight-on normal
        normal_enc[covered] = ((normals_c[covered] + 1.0) / 2.0).astype(np.float32)
        alpha = covered.astype(np.float32)
        rgb = albedo_plane * np.clip(normals_c[..., 2:], 0.0, 1.0).astype(np.float32)
        buffers.append(
            MaterialGBuffer(
                albedo=albedo_plane,
                orm=orm,
                normal=normal_enc,
                alpha=alpha,
                camera=camera,
                rgb=rgb,
            )
        )
    return buffers


def make_plane_bundle(
    res: int = 128,
    roughness: float = 0.5,
    metallic: float = 0.0,
    albedo: tuple = (0.75, 0.75, 0.75),
    checker: int = 0,
) -> list[MaterialGBuffer]:
    """Camera-facing plane with constant normals and optional checker albedo."""
    camera = CameraModel(projection="orthographic")
    albedo_plane = np.tile(np.asarray(albedo, np.float32), (res, res, 1))
    if checker > 0:
        yy, xx = np.meshgrid(np.arange(res), np.arange(res), indexing="ij")
        mask = ((xx // checker + yy // checker) % 2).astype(np.float32)
        albedo_plane *= (0.35 + 0.65 * mask)[..., None]
    orm = np.zeros((res, res, 3), dtype=np.float32)
    orm[..., 1] = roughness
    orm[..., 2] = metallic
    normal_enc = np.zeros((res, res, 3), dtype=np.float32)
    normal_enc[...] = (0.5, 0.5, 1.0)
    alpha = np.ones((res, res), dtype=np.float32)
    return [
        MaterialGBuffer(
            albedo=albedo_plane,
            orm=orm,
            normal=normal_enc,
            alpha=alpha,
            camera=camera,
            rgb=albedo_plane.copy(),
        )
    ]


def make_probe(kind: str, resolution: int = 128, value: float = 1.0) -> em.EnvironmentMap:
    """Deterministic environment probes on the octahedral chart.

    Kinds: "constant" (uniform `value`), "spot" (dim ambient plus one bright
    compact blob), "studio" (procedural HDRI-like sky/sun/panel lighting).
    """
    r = resolution
    if kind == "constant":
        return em.EnvironmentMap(
            em.OCTAHEDRAL, np.full((r, r, 3), value, dtype=np.float32)
        )

    uu, vv = np.meshgrid((np.arange(r) + 0.5) / r, (np.arange(r) + 0.5) / r)
    dirs = em.uv_to_dir(em.OCTAHEDRAL, np.stack([uu, vv], axis=-1))

    if kind == "spot":
        axis = np.array([0.35, 0.25, 0.9])
        axis /= np.linalg.norm(axis)
        cos = np.clip(dirs @ axis, -1.0, 1.0)
        blob = np.exp((cos - 1.0) / (1.0 - math.cos(math.radians(4.0))))
        pix = 0.05 + 24.0 * value * blob[..., None] * np.array([1.0, 0.95, 0.85])
        return em.EnvironmentMap(em.OCTAHEDRAL, pix.astype(np.float32))

    if kind == "studio":
        z = dirs[..., 2]
        sky_t = np.clip(z * 0.5 + 0.5, 0.0, 1.0) ** 1.5
        horizon = np.array([0.55, 0.48, 0.42])
        zenith = np.array([0.25, 0.45, 0.95])
        pix = horizon * (1.0 - sky_t[..., None]) + zenith * sky_t[..., None]
        ground = np.array([0.22, 0.18, 0.15])
        pix = np.where((z < 0.0)[..., None], ground * (0.4 - 0.3 * z[..., None]), pix)

        def add_light(axis, width_deg, color, strength):
            a = np.asarray(axis, dtype=np.float64)
            a /= np.linalg.norm(a)
            cos = np.clip(dirs @ a, -1.0, 1.0)
            falloff = np.exp((cos - 1.0) / (1.0 - math.cos(math.radians(width_deg))))
            return strength * falloff[..., None] * np.asarray(color)

        pix = pix + add_light((0.5, 0.35, 0.79), 10.0, (1.0, 0.97, 0.9), 8.0)
        pix = pix + add_light((-0.6, 0.2, 0.45), 9.0, (0.9, 0.95, 1.0), 6.0)
        pix = pix + add_light((0.15, -0.8, 0.35), 14.0, (1.0, 0.8, 0.6), 2.5)
        return em.EnvironmentMap(em.OCTAHEDRAL, (pix * value).astype(np.float32))

    raise ValueError(f"unknown probe kind {kind!r}")


def textured_test_image(res: int = 128, seed: int = 0) -> np.ndarray:
    """Smooth random texture with broad gradients; good alignment target."""
    rng = np.random.default_rng(seed)
    base = rng.random((res // 8, res // 8))
    img = base
    for _ in range(3):
        h, w = img.shape
        up = np.zeros((h * 2, w * 2))
        up[::2, ::2] = img
        up[1::2, ::2] = img
        up[::2, 1::2] = img
        up[1::2, 1::2] = img
        # separable binomial smoothing pass
        k = np.array([0.25, 0.5, 0.25])
        up = np.apply_along_axis(lambda r_: np.convolve(r_, k, mode="same"), 0, up)
        up = np.apply_along_axis(lambda r_: np.convolve(r_, k, mode="same"), 1, up)
        img = up
    img = img[:res, :res]
    lo, hi = img.min(), img.max()
    return ((img - lo) / (hi - lo)).astype(np.float64)

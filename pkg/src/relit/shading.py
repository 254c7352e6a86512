"""Deferred split-sum relighting of material G-buffers.

Per covered pixel the shader does two texture reads (prefiltered pyramid at
the reflection direction, irradiance map at the normal) and one LUT read,
then composes specular, Lambert diffuse, and the multiple-scattering term.

Camera-space convention: +Z points from the surface toward the viewer, so an
orthographic camera sees view direction (0, 0, 1) everywhere. `env_rotation`
takes camera-space directions into the environment's world frame (world up
is +Z, matching the environment chart orientation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import envmap as em
from .brdf import f0_from_material
from .parallel import run_row_blocks
from .prefilter import DfgLut, multiscatter_terms
from .sampling import MIN_ROUGHNESS

DEFAULT_FOV_DEG = 33.8


@dataclass(frozen=True)
class CameraModel:
    """Projection plus the rotation from camera space into the env frame."""

    projection: str = "pinhole"  # "pinhole" | "orthographic"
    fov_deg: float = DEFAULT_FOV_DEG
    env_rotation: np.ndarray = field(
        default_factory=lambda: np.eye(3, dtype=np.float64)
    )
    elevation_deg: float = 0.0
    azimuth_deg: float = 0.0

    def __post_init__(self):
        if self.projection not in ("pinhole", "orthographic"):
            raise ValueError(f"unknown projection {self.projection!r}")
        if self.projection == "pinhole" and not (1.0 < self.fov_deg < 120.0):
            raise ValueError("pinhole fov must lie in (1, 120) degrees")
        rot = np.asarray(self.env_rotation, dtype=np.float64)
        if rot.shape != (3, 3) or not np.allclose(
            rot @ rot.T, np.eye(3), atol=1e-6
        ):
            raise ValueError("env_rotation must be a 3x3 rotation matrix")
        object.__setattr__(self, "env_rotation", rot)

    def view_directions(self, width: int, height: int) -> np.ndarray:
        """Per-pixel unit view direction (surface -> camera), (h, w, 3)."""
        if self.projection == "orthographic":
            v = np.zeros((height, width, 3))
            v[..., 2] = 1.0
            return v
        tan_half = math.tan(math.radians(self.fov_deg) / 2.0)
        aspect = width / height
        x = (np.arange(width) + 0.5) / width * 2.0 - 1.0
        y = 1.0 - (np.arange(height) + 0.5) / height * 2.0
        xx, yy = np.meshgrid(x * tan_half * aspect, y * tan_half)
        v = np.stack([-xx, -yy, np.ones_like(xx)], axis=-1)
        return v / np.linalg.norm(v, axis=-1, keepdims=True)


def orbit_camera_rotation(elevation_deg: float, azimuth_deg: float) -> np.ndarray:
    """Camera-to-world rotation for an orbit pose (world up = +Z).

    The camera sits on a sphere around the origin at the given elevation and
    azimuth and looks at the origin; camera +Z points back at the viewer.
    """
    e = math.radians(elevation_deg)
    a = math.radians(azimuth_deg)
    z_cam = np.array(
        [math.cos(e) * math.cos(a), math.cos(e) * math.sin(a), math.sin(e)]
    )
    up = np.array([0.0, 0.0, 1.0])
    if abs(np.dot(up, z_cam)) > 0.999:
        up = np.array([1.0, 0.0, 0.0])
    x_cam = np.cross(up, z_cam)
    x_cam /= np.linalg.norm(x_cam)
    y_cam = np.cross(z_cam, x_cam)
    return np.stack([x_cam, y_cam, z_cam], axis=1)


def spin_rotation(degrees: float) -> np.ndarray:
    """Extra user rotation of the environment about world up (+Z)."""
    t = math.radians(degrees)
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass
class MaterialGBuffer:
    """Per-view material planes plus camera; the 11-channel frame.

    orm channel 0 is unused padding, channel 1 roughness, channel 2 metallic.
    `normal` stores camera-space unit normals mapped to [0, 1] via (n + 1)/2.
    """

    albedo: np.ndarray  # (h, w, 3) in [0, 1]
    orm: np.ndarray  # (h, w, 3)
    normal: np.ndarray  # (h, w, 3), encoded
    alpha: np.ndarray  # (h, w)
    camera: CameraModel = field(default_factory=CameraModel)
    rgb: np.ndarray | None = None  # optional radiance reference plane

    def __post_init__(self):
        self.albedo = np.asarray(self.albedo, dtype=np.float32)
        self.orm = np.asarray(self.orm, dtype=np.float32)
        self.normal = np.asarray(self.normal, dtype=np.float32)
        self.alpha = np.asarray(self.alpha, dtype=np.float32)
        shapes = {self.albedo.shape[:2], self.orm.shape[:2], self.normal.shape[:2],
                  self.alpha.shape[:2]}
        if len(shapes) != 1:
            raise ValueError("G-buffer planes disagree on resolution")
        for name in ("albedo", "orm", "normal"):
            plane = getattr(self, name)
            if plane.ndim != 3 or plane.shape[2] != 3:
                raise ValueError(f"{name} plane must be (h, w, 3)")
        if self.alpha.ndim != 2:
            raise ValueError("alpha plane must be (h, w)")

    @property
    def resolution(self) -> tuple[int, int]:
        return self.albedo.shape[1], self.albedo.shape[0]

    @property
    def roughness(self) -> np.ndarray:
        return self.orm[..., 1]

    @property
    def metallic(self) -> np.ndarray:
        return self.orm[..., 2]

    def decoded_normals(self) -> np.ndarray:
        n = self.normal.astype(np.float64) * 2.0 - 1.0
        norm = np.linalg.norm(n, axis=-1, keepdims=True)
        return n / np.maximum(norm, 1e-12)

    def validate(self):
        """Check the value-range invariants on covered pixels."""
        cover = self.alpha > 0.5
        if not np.isfinite(self.albedo).all():
            raise ValueError("albedo contains non-finite values")
        if (self.orm[..., 1:] < -1e-3).any() or (self.orm[..., 1:] > 1 + 1e-3).any():
            raise ValueError("roughness/metallic outside [0, 1]")
        if cover.any():
            n = self.normal.astype(np.float64) * 2.0 - 1.0
            lengths = np.linalg.norm(n[cover], axis=-1)
            if (np.abs(lengths - 1.0) > 0.02 + 1e-6).any():
                raise ValueError("decoded normals deviate from unit length")
        return self


@dataclass(frozen=True)
class RelightConfig:
    """Shading switches; defaults give the full physically based result."""

    specular: bool = True
    diffuse: bool = True
    multiscatter: bool = True
    background: tuple = (0.0, 0.0, 0.0)
    threads: int | None = None


def relight(
    g: MaterialGBuffer,
    pyramid: em.EnvironmentPyramid,
    lut: DfgLut,
    cfg: RelightConfig = RelightConfig(),
) -> np.ndarray:
    """Shade a G-buffer under a prefiltered environment; returns linear HDR."""
    g.validate()
    w, h = g.resolution
    out = np.zeros((h, w, 3), dtype=np.float32)
    normals = g.decoded_normals()
    views = g.camera.view_directions(w, h)
    rot = g.camera.env_rotation
    albedo = g.albedo.astype(np.float64)
    rough = np.clip(g.roughness.astype(np.float64), MIN_ROUGHNESS, 1.0)
    metal = np.clip(g.metallic.astype(np.float64), 0.0, 1.0)
    alpha = np.clip(g.alpha.astype(np.float64), 0.0, 1.0)
    bg = np.asarray(cfg.background, dtype=np.float64)

    def worker(y0, y1):
        n = normals[y0:y1]
        v = views[y0:y1]
        covered = alpha[y0:y1] > 0.0
        n_dot_v = np.clip(np.sum(n * v, axis=-1), 1e-4, 1.0)
        r = rough[y0:y1]
        m = metal[y0:y1]
        f0 = f0_from_material(albedo[y0:y1], m)

        refl = 2.0 * n_dot_v[..., None] * n - v
        refl /= np.linalg.norm(refl, axis=-1, keepdims=True)
        refl_env = em.rotate_directions(rot, refl)
        n_env = em.rotate_directions(rot, n)

        color = np.zeros(n.shape, dtype=np.float64)
        entry = lut.lookup(n_dot_v, r)
        fss_ess, ems, fms = multiscatter_terms(f0, entry[..., 0:1], entry[..., 1:2])
        irradiance = pyramid.sample_diffuse(n_env)
        if cfg.specular:
            prefiltered = pyramid.sample_specular(refl_env, r)
            color += fss_ess * prefiltered
            if cfg.multiscatter:
                color += fms * ems * irradiance
        if cfg.diffuse:
            color += albedo[y0:y1] * (1.0 - m[..., None]) * irradiance

        a = alpha[y0:y1][..., None]
        shaded = np.where(covered[..., None], color, 0.0)
        out[y0:y1] = (shaded * a + bg * (1.0 - a)).astype(np.float32)

    run_row_blocks(worker, h, threads=cfg.threads, block=64)
    return out


def relight_orbit(
    frames: list[MaterialGBuffer],
    pyramid: em.EnvironmentPyramid,
    lut: DfgLut,
    cfg: RelightConfig = RelightConfig(),
) -> list[np.ndarray]:
    """Relight an orbit; the environment stays fixed in the world frame."""
    out = []
    for i, frame in enumerate(frames):
        try:
            out.append(relight(frame, pyramid, lut, cfg))
        except Exception as exc:  # keep the offending frame identifiable
            raise RuntimeError(f"relight failed on frame {i}: {exc}") from exc
    return out


@dataclass(frozen=True)
class MaterialEdit:
    """Optional overrides applied to a G-buffer's covered pixels."""

    roughness_scale: float | None = None
    roughness_set: float | None = None
    metallic_set: float | None = None
    albedo_tint: tuple | None = None

    def __post_init__(self):
        if self.roughness_scale is not None and self.roughness_scale < 0:
            raise ValueError("roughness_scale must be >= 0")
        for name in ("roughness_set", "metallic_set"):
            val = getattr(self, name)
            if val is not None and not (0.0 <= val <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.albedo_tint is not None:
            tint = tuple(float(t) for t in self.albedo_tint)
            if len(tint) != 3 or any(t < 0.0 for t in tint):
                raise ValueError("albedo_tint must be 3 non-negative factors")
            object.__setattr__(self, "albedo_tint", tint)

    def is_identity(self) -> bool:
        return (
            self.roughness_scale is None
            and self.roughness_set is None
            and self.metallic_set is None
            and self.albedo_tint is None
        )


def edit_material(g: MaterialGBuffer, edit: MaterialEdit) -> MaterialGBuffer:
    """Return a new buffer with the edit applied; the input stays untouched.

    Planes an edit never touches are copied bit-identically; edited roughness
    is clamped to the shading floor, edited albedo to [0, 1].
    """
    albedo = g.albedo.copy()
    orm = g.orm.copy()
    if edit.roughness_set is not None or edit.roughness_scale is not None:
        if edit.roughness_set is not None:
            orm[..., 1] = edit.roughness_set
        if edit.roughness_scale is not None:
            orm[..., 1] = orm[..., 1] * edit.roughness_scale
        orm[..., 1] = np.clip(orm[..., 1], MIN_ROUGHNESS, 1.0)
    if edit.metallic_set is not None:
        orm[..., 2] = np.clip(edit.metallic_set, 0.0, 1.0)
    if edit.albedo_tint is not None:
        albedo = np.clip(
            albedo * np.asarray(edit.albedo_tint, dtype=np.float32), 0.0, 1.0
        )
    return MaterialGBuffer(
        albedo=albedo,
        orm=orm,
        normal=g.normal.copy(),
        alpha=g.alpha.copy(),
        camera=g.camera,
        rgb=None if g.rgb is None else g.rgb.copy(),
    )

"""Image file I/O, the G-buffer bundle manifest, and comparison metrics.

PNG (8/16-bit) and Radiance HDR go through OpenCV's codecs; PFM is written
here directly (little-endian scanlines, negative scale header, bottom-up row
order per the de-facto standard). All decode paths reject non-finite pixels
and report where they sit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from .color import linear_to_srgb, srgb_to_linear
from .shading import CameraModel, MaterialGBuffer, orbit_camera_rotation

MANIFEST_VERSION = 1

PLANE_NAMES = ("rgb", "albedo", "orm", "normal", "alpha")
DEFAULT_COLORSPACES = {
    "rgb": "srgb",
    "albedo": "srgb",
    "orm": "linear",
    "normal": "normal",
    "alpha": "linear",
}


class ImageIoError(ValueError):
    """Malformed file, channel mismatch, or non-finite pixel data."""


def _check_finite(img: np.ndarray, path) -> np.ndarray:
    bad = ~np.isfinite(img)
    if bad.any():
        y, x = np.argwhere(bad)[0][:2]
        raise ImageIoError(f"{path}: non-finite pixel at (x={x}, y={y})")
    return img


def _format_for(path: Path) -> str:
    ext = path.suffix.lower()
    if ext == ".png":
        return "png"
    if ext == ".hdr":
        return "radiance_hdr"
    if ext == ".pfm":
        return "pfm"
    raise ImageIoError(f"{path}: unsupported image extension {ext!r}")


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.readline().strip()
        if header not in (b"PF", b"Pf"):
            raise ImageIoError(f"{path}: not a PFM file")
        dims = fh.readline().split()
        if len(dims) != 2:
            raise ImageIoError(f"{path}: malformed PFM dimensions")
        w, h = int(dims[0]), int(dims[1])
        scale = float(fh.readline().strip())
        endian = "<" if scale < 0 else ">"
        count = w * h * (3 if header == b"PF" else 1)
        data = np.frombuffer(fh.read(count * 4), dtype=endian + "f4")
        if data.size != count:
            raise ImageIoError(f"{path}: truncated PFM payload")
    img = data.reshape(h, w, -1)[::-1]  # stored bottom-up
    img = img[..., 0] if header == b"Pf" else img
    return np.ascontiguousarray(img, dtype=np.float32)


def write_pfm(path, img: np.ndarray):
    img = np.asarray(img, dtype=np.float32)
    color = img.ndim == 3
    if color and img.shape[2] != 3:
        raise ImageIoError("PFM color images must have 3 channels")
    with open(path, "wb") as fh:
        fh.write(b"PF\n" if color else b"Pf\n")
        h, w = img.shape[:2]
        fh.write(f"{w} {h}\n".encode())
        fh.write(b"-1.0\n")
        fh.write(np.ascontiguousarray(img[::-1]).astype("<f4").tobytes())


def read_image(path) -> np.ndarray:
    """Decode to float32; PNGs scale to [0, 1], HDR formats stay linear.

    Returns (h, w) for single-channel files and (h, w, 3) otherwise. No
    colorspace transform is applied here; see load_bundle for tag handling.
    """
    path = Path(path)
    fmt = _format_for(path)
    if fmt == "pfm":
        return _check_finite(read_pfm(path), path)
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ImageIoError(f"{path}: cannot decode image")
    if fmt == "radiance_hdr":
        if raw.ndim != 3 or raw.shape[2] != 3:
            raise ImageIoError(f"{path}: HDR must be 3-channel")
        return _check_finite(
            cv2.cvtColor(raw.astype(np.float32), cv2.COLOR_BGR2RGB), path
        )
    if raw.dtype == np.uint8:
        img = raw.astype(np.float32) / 255.0
    elif raw.dtype == np.uint16:
        img = raw.astype(np.float32) / 65535.0
    else:
        raise ImageIoError(f"{path}: unsupported PNG depth {raw.dtype}")
    if img.ndim == 3:
        if img.shape[2] == 4:
            img = img[..., :3]
        if img.shape[2] != 3:
            raise ImageIoError(f"{path}: expected 1, 3, or 4 channels")
        img = np.ascontiguousarray(img[..., ::-1])  # BGR -> RGB
    return img


def encode_png(img: np.ndarray, bitdepth: int = 8) -> bytes:
    """Encode [0, 1] data to PNG bytes (shared by file writes and the service)."""
    img = np.asarray(img)
    if bitdepth == 8:
        quant = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    elif bitdepth == 16:
        quant = np.round(np.clip(img, 0.0, 1.0) * 65535.0).astype(np.uint16)
    else:
        raise ImageIoError("PNG bit depth must be 8 or 16")
    if quant.ndim == 3:
        quant = np.ascontiguousarray(quant[..., ::-1])  # RGB -> BGR
    ok, buf = cv2.imencode(".png", quant)
    if not ok:
        raise ImageIoError("PNG encoding failed")
    return buf.tobytes()


def write_image(path, img: np.ndarray, format: str | None = None):
    """Write `img` in the named or extension-inferred format.

    Formats: png8, png16 (clamped [0, 1] data), radiance_hdr, pfm (linear
    float). Parent directories must exist.
    """
    path = Path(path)
    fmt = format or _format_for(path)
    if fmt == "png":
        fmt = "png8"
    img = np.asarray(img, dtype=np.float32)
    if fmt in ("png8", "png16"):
        path.write_bytes(encode_png(img, 8 if fmt == "png8" else 16))
        return
    if fmt == "radiance_hdr":
        if img.ndim != 3 or img.shape[2] != 3:
            raise ImageIoError("radiance_hdr expects (h, w, 3)")
        _check_finite(img, path)
        bgr = cv2.cvtColor(np.maximum(img, 0.0), cv2.COLOR_RGB2BGR)
        if not cv2.imwrite(str(path), bgr):
            raise ImageIoError(f"{path}: HDR write failed")
        return
    if fmt == "pfm":
        write_pfm(path, img)
        return
    raise ImageIoError(f"unknown image format {format!r}")


@dataclass
class MetricReport:
    psnr: float
    rmse: float
    per_channel_mean_a: tuple
    per_channel_mean_b: tuple

    @property
    def identical(self) -> bool:
        return math.isinf(self.psnr)


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> MetricReport:
    """Standard PSNR/RMSE between same-shape images."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    value = math.inf if mse == 0.0 else 10.0 * math.log10(peak * peak / mse)
    mean_axes = tuple(range(a.ndim - 1)) if a.ndim == 3 else None
    ma = np.mean(a, axis=mean_axes)
    mb = np.mean(b, axis=mean_axes)
    return MetricReport(
        psnr=value,
        rmse=math.sqrt(mse),
        per_channel_mean_a=tuple(np.atleast_1d(ma).tolist()),
        per_channel_mean_b=tuple(np.atleast_1d(mb).tolist()),
    )


@dataclass
class BundleManifest:
    """Schema for a G-buffer bundle directory; serialized as JSON."""

    resolution: tuple  # (w, h)
    frames: list  # per-frame dict: plane paths + camera record
    env: str | None = None
    colorspaces: dict = field(default_factory=lambda: dict(DEFAULT_COLORSPACES))
    version: int = MANIFEST_VERSION

    def validate(self):
        if self.version != MANIFEST_VERSION:
            raise ImageIoError(f"unsupported manifest version {self.version}")
        if len(self.frames) < 1:
            raise ImageIoError("bundle must contain at least one frame")
        for i, frame in enumerate(self.frames):
            for plane in PLANE_NAMES:
                if plane not in frame:
                    raise ImageIoError(f"frame {i}: missing plane {plane!r}")
            cam = frame.get("camera", {})
            proj = cam.get("projection", "pinhole")
            if proj not in ("pinhole", "orthographic"):
                raise ImageIoError(f"frame {i}: unknown projection {proj!r}")
        return self

    def to_json(self) -> str:
        return json.dumps(
            {
                "version": self.version,
                "resolution": list(self.resolution),
                "frame_count": len(self.frames),
                "env": self.env,
                "colorspaces": self.colorspaces,
                "frames": self.frames,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "BundleManifest":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ImageIoError(f"manifest is not valid JSON: {exc}") from exc
        try:
            manifest = cls(
                resolution=tuple(data["resolution"]),
                frames=list(data["frames"]),
                env=data.get("env"),
                colorspaces=dict(data.get("colorspaces", DEFAULT_COLORSPACES)),
                version=int(data.get("version", -1)),
            )
        except (KeyError, TypeError) as exc:
            raise ImageIoError(f"manifest missing required field: {exc}") from exc
        return manifest.validate()


def _decode_plane(img: np.ndarray, colorspace: str, path) -> np.ndarray:
    if colorspace == "srgb":
        return srgb_to_linear(img)
    if colorspace == "linear":
        return img
    if colorspace == "normal":
        n = img.astype(np.float64) * 2.0 - 1.0
        norm = np.linalg.norm(n, axis=-1, keepdims=True)
        # degenerate (typically background) normals decode to straight-on;
        # covered pixels are still unit-checked by MaterialGBuffer.validate
        n = np.where(norm < 0.25, np.array([0.0, 0.0, 1.0]), n / np.maximum(norm, 1e-12))
        return ((n + 1.0) / 2.0).astype(np.float32)
    raise ImageIoError(f"unknown colorspace tag {colorspace!r}")


def load_bundle(manifest_path) -> tuple[BundleManifest, list[MaterialGBuffer]]:
    """Load, decode, and invariant-check all frames of a bundle."""
    manifest_path = Path(manifest_path)
    manifest = BundleManifest.from_json(manifest_path.read_text())
    root = manifest_path.parent
    w, h = manifest.resolution
    buffers = []
    for i, frame in enumerate(manifest.frames):
        planes = {}
        for plane in PLANE_NAMES:
            path = root / frame[plane]
            if not path.exists():
                raise ImageIoError(f"frame {i}: missing file for plane {plane!r}: {path}")
            img = read_image(path)
            expect = (h, w) if plane == "alpha" else (h, w, 3)
            if img.shape != expect:
                raise ImageIoError(
                    f"frame {i} plane {plane!r}: resolution {img.shape} != {expect}"
                )
            if plane == "alpha":
                planes[plane] = img
            else:
                planes[plane] = _decode_plane(
                    img, manifest.colorspaces.get(plane, "linear"), path
                )
        cam = frame.get("camera", {})
        elevation = float(cam.get("elevation_deg", 0.0))
        azimuth = float(cam.get("azimuth_deg", 0.0))
        camera = CameraModel(
            projection=cam.get("projection", "pinhole"),
            fov_deg=float(cam.get("fov_deg", 33.8)),
            env_rotation=orbit_camera_rotation(elevation, azimuth),
            elevation_deg=elevation,
            azimuth_deg=azimuth,
        )
        buffers.append(
            MaterialGBuffer(
                albedo=planes["albedo"],
                orm=planes["orm"],
                normal=planes["normal"],
                alpha=planes["alpha"],
                camera=camera,
                rgb=planes["rgb"],
            ).validate()
        )
    return manifest, buffers


def save_bundle(
    out_dir, frames: list[MaterialGBuffer], env: str | None = None
) -> Path:
    """Write a bundle directory (16-bit PNG planes) and return the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    w, h = frames[0].resolution
    for i, g in enumerate(frames):
        if g.resolution != (w, h):
            raise ImageIoError(f"frame {i}: resolution differs from frame 0")
        names = {
            "rgb": f"frame{i:03d}_rgb.png",
            "albedo": f"frame{i:03d}_albedo.png",
            "orm": f"frame{i:03d}_orm.png",
            "normal": f"frame{i:03d}_normal.png",
            "alpha": f"frame{i:03d}_alpha.png",
        }
        rgb = g.rgb if g.rgb is not None else np.zeros((h, w, 3), np.float32)
        write_image(out_dir / names["rgb"], linear_to_srgb(rgb), "png8")
        write_image(out_dir / names["albedo"], linear_to_srgb(g.albedo), "png16")
        write_image(out_dir / names["orm"], g.orm, "png16")
        write_image(out_dir / names["normal"], g.normal, "png16")
        write_image(out_dir / names["alpha"], g.alpha, "png8")
        records.append(
            {
                **names,
                "camera": {
                    "projection": g.camera.projection,
                    "fov_deg": g.camera.fov_deg,
                    "elevation_deg": g.camera.elevation_deg,
                    "azimuth_deg": g.camera.azimuth_deg,
                },
            }
        )
    manifest = BundleManifest(resolution=(w, h), frames=records, env=env)
    path = out_dir / "bundle.json"
    path.write_text(manifest.to_json())
    return path


def save_pyramid(out_dir, pyramid) -> Path:
    """Serialize an environment pyramid as PFM levels plus a JSON record."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    levels = []
    for i, level in enumerate(pyramid.specular_levels):
        name = f"level{i:02d}.pfm"
        write_pfm(out_dir / name, level.pixels)
        levels.append(name)
    write_pfm(out_dir / "diffuse.pfm", pyramid.diffuse.pixels)
    record = {
        "mode": pyramid.mode,
        "seed": pyramid.seed,
        "levels": levels,
        "diffuse": "diffuse.pfm",
        "level_roughness": [float(r) for r in pyramid.level_roughness],
        "samples_per_level": list(pyramid.samples_per_level),
        "layout": "octahedral",
    }
    path = out_dir / "pyramid.json"
    path.write_text(json.dumps(record, indent=2))
    return path


def load_pyramid(manifest_path):
    from . import envmap as em

    manifest_path = Path(manifest_path)
    record = json.loads(manifest_path.read_text())
    root = manifest_path.parent
    levels = [
        em.EnvironmentMap(em.OCTAHEDRAL, read_pfm(root / name))
        for name in record["levels"]
    ]
    diffuse = em.EnvironmentMap(em.OCTAHEDRAL, read_pfm(root / record["diffuse"]))
    return em.EnvironmentPyramid(
        specular_levels=levels,
        diffuse=diffuse,
        level_roughness=np.asarray(record["level_roughness"], dtype=np.float64),
        mode=record["mode"],
        seed=int(record["seed"]),
        samples_per_level=tuple(record["samples_per_level"]),
    )


def load_environment(path, layout_hint: str | None = None):
    """Read an HDR/PFM probe; equirect vs octahedral inferred from aspect."""
    from . import envmap as em

    img = read_image(path)
    if img.ndim != 3:
        raise ImageIoError(f"{path}: environment must be 3-channel")
    if layout_hint is None:
        layout_hint = em.OCTAHEDRAL if img.shape[0] == img.shape[1] else em.EQUIRECT
    return em.EnvironmentMap(layout_hint, np.maximum(img, 0.0))

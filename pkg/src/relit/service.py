"""Local HTTP service for interactive relighting and material editing.

Sessions hold a loaded bundle plus the prefiltered pyramid in memory; edits
only touch cheap lookup-time state (material overrides, env spin, exposure),
so frames re-render without any prefiltering. Swapping the environment map
rebuilds the pyramid in a background thread and swaps it in atomically.

Routes (JSON bodies unless noted):
  POST /session {bundle_path, env_path, mode}        -> {session_id}
  GET  /session/{id}                                 -> status/revision poll
  GET  /session/{id}/frame?index=&width=             -> PNG (tonemapped relight)
  POST /session/{id}/edit {...}                      -> {revision}; fields patch
  POST /session/{id}/reset                           -> {revision}; clear edits
  POST /session/{id}/env {env_path | rotation_deg}   -> {revision}
  GET  /session/{id}/materials?index=&plane=         -> PNG plane preview
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field, replace

import cv2
import numpy as np
from fastapi import FastAPI, HTTPException, Query, Response
from pydantic import BaseModel

from . import imageio, prefilter, shading
from .color import ToneMapParams, linear_to_srgb, tonemap_agx


class CreateSession(BaseModel):
    bundle_path: str
    env_path: str
    mode: str = "relight"


class EditRequest(BaseModel):
    roughness_set: float | None = None
    roughness_scale: float | None = None
    metallic_set: float | None = None
    albedo_tint: tuple[float, float, float] | None = None
    env_rotation_deg: float | None = None
    exposure_ev: float | None = None


class EnvRequest(BaseModel):
    env_path: str | None = None
    rotation_deg: float | None = None


@dataclass
class EditState:
    material: shading.MaterialEdit = field(default_factory=shading.MaterialEdit)
    env_rotation_deg: float = 0.0
    exposure_ev: float = 0.0


@dataclass
class Session:
    frames: list
    pyramid: object | None
    lut: object
    mode: str
    edit: EditState = field(default_factory=EditState)
    revision: int = 0
    status: str = "building"
    error: str | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)
    rebuilding: bool = False


def _render_frame(session: Session, index: int, width: int | None) -> bytes:
    """Relight one frame at the session's edit state and encode as PNG."""
    with session.lock:
        pyramid = session.pyramid
        edit = replace(session.edit)
        frame = session.frames[index]
    g = shading.edit_material(frame, edit.material)
    spin = shading.spin_rotation(edit.env_rotation_deg)
    camera = shading.CameraModel(
        projection=frame.camera.projection,
        fov_deg=frame.camera.fov_deg,
        env_rotation=spin @ frame.camera.env_rotation,
        elevation_deg=frame.camera.elevation_deg,
        azimuth_deg=frame.camera.azimuth_deg,
    )
    g = shading.MaterialGBuffer(
        albedo=g.albedo, orm=g.orm, normal=g.normal, alpha=g.alpha,
        camera=camera, rgb=g.rgb,
    )
    hdr = shading.relight(g, pyramid, session.lut)
    ldr = tonemap_agx(hdr, ToneMapParams(exposure_ev=edit.exposure_ev))
    if width and width != ldr.shape[1]:
        height = max(1, round(width * ldr.shape[0] / ldr.shape[1]))
        ldr = cv2.resize(ldr, (width, height), interpolation=cv2.INTER_AREA)
    return imageio.encode_png(ldr, 8)


def create_app(frontend_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="relit service")
    sessions: dict[str, Session] = {}
    ids = itertools.count(1)

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    def build_pyramid(session: Session, env_path: str):
        try:
            env = imageio.load_environment(env_path)
            cfg = prefilter.PrefilterConfig(mode=session.mode)
            pyramid = prefilter.prefilter_specular(env, cfg)
            with session.lock:
                session.pyramid = pyramid
                session.status = "ready"
                session.rebuilding = False
                session.revision += 1
        except Exception as exc:
            with session.lock:
                session.status = "error"
                session.error = str(exc)
                session.rebuilding = False

    @app.post("/session")
    def create_session(req: CreateSession):
        try:
            _, frames = imageio.load_bundle(req.bundle_path)
        except (imageio.ImageIoError, FileNotFoundError, OSError) as exc:
            raise HTTPException(status_code=422, detail=f"bundle: {exc}")
        if req.mode not in ("optimization", "relight"):
            raise HTTPException(status_code=422, detail=f"unknown mode {req.mode!r}")
        session = Session(
            frames=frames,
            pyramid=None,
            lut=prefilter.build_dfg_lut(),
            mode=req.mode,
        )
        session.rebuilding = True
        session_id = str(next(ids))
        sessions[session_id] = session
        threading.Thread(
            target=build_pyramid, args=(session, req.env_path), daemon=True
        ).start()
        return {"session_id": session_id}

    @app.get("/session/{session_id}")
    def session_status(session_id: str):
        session = get_session(session_id)
        with session.lock:
            w, h = session.frames[0].resolution
            return {
                "status": session.status,
                "revision": session.revision,
                "frames": len(session.frames),
                "resolution": [w, h],
                "error": session.error,
            }

    @app.get("/session/{session_id}/frame")
    def get_frame(
        session_id: str,
        index: int = Query(0, ge=0),
        width: int | None = Query(None, ge=8, le=4096),
    ):
        session = get_session(session_id)
        with session.lock:
            if session.status == "error":
                raise HTTPException(status_code=500, detail=session.error)
            if session.status != "ready":
                raise HTTPException(status_code=409, detail="pyramid build in progress")
            if not (0 <= index < len(session.frames)):
                raise HTTPException(status_code=422, detail="frame index out of range")
            revision = session.revision
        png = _render_frame(session, index, width)
        return Response(
            content=png,
            media_type="image/png",
            headers={"X-Relit-Revision": str(revision)},
        )

    @app.post("/session/{session_id}/edit")
    def edit_session(session_id: str, req: EditRequest):
        session = get_session(session_id)
        if req.exposure_ev is not None and not (-16.0 <= req.exposure_ev <= 16.0):
            raise HTTPException(status_code=422, detail="exposure_ev outside [-16, 16]")
        with session.lock:
            mat = session.edit.material
            fields = {
                "roughness_scale": mat.roughness_scale,
                "roughness_set": mat.roughness_set,
                "metallic_set": mat.metallic_set,
                "albedo_tint": mat.albedo_tint,
            }
            # present fields patch the edit state; the two roughness modes
            # are mutually exclusive, the newer one wins
            if req.roughness_set is not None:
                fields["roughness_set"] = req.roughness_set
                fields["roughness_scale"] = None
            if req.roughness_scale is not None:
                fields["roughness_scale"] = req.roughness_scale
                fields["roughness_set"] = None
            if req.metallic_set is not None:
                fields["metallic_set"] = req.metallic_set
            if req.albedo_tint is not None:
                fields["albedo_tint"] = req.albedo_tint
            try:
                session.edit.material = shading.MaterialEdit(**fields)
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            if req.env_rotation_deg is not None:
                session.edit.env_rotation_deg = float(req.env_rotation_deg)
            if req.exposure_ev is not None:
                session.edit.exposure_ev = float(req.exposure_ev)
            session.revision += 1
            return {"revision": session.revision}

    @app.post("/session/{session_id}/reset")
    def reset_edits(session_id: str):
        session = get_session(session_id)
        with session.lock:
            session.edit = EditState()
            session.revision += 1
            return {"revision": session.revision}

    @app.post("/session/{session_id}/env")
    def swap_env(session_id: str, req: EnvRequest):
        session = get_session(session_id)
        if req.env_path is None and req.rotation_deg is None:
            raise HTTPException(status_code=422, detail="env_path or rotation_deg required")
        with session.lock:
            if req.rotation_deg is not None and req.env_path is None:
                session.edit.env_rotation_deg = float(req.rotation_deg)
                session.revision += 1
                return {"revision": session.revision, "rebuilding": False}
            if session.rebuilding:
                raise HTTPException(status_code=409, detail="rebuild already in progress")
            session.rebuilding = True
            session.status = "building"
            if req.rotation_deg is not None:
                session.edit.env_rotation_deg = float(req.rotation_deg)
            revision = session.revision
        threading.Thread(
            target=build_pyramid, args=(session, req.env_path), daemon=True
        ).start()
        return {"revision": revision, "rebuilding": True}

    @app.get("/session/{session_id}/materials")
    def get_materials(
        session_id: str,
        index: int = Query(0, ge=0),
        plane: str | None = Query(None),
    ):
        session = get_session(session_id)
        with session.lock:
            if not (0 <= index < len(session.frames)):
                raise HTTPException(status_code=422, detail="frame index out of range")
            frame = session.frames[index]
            edit = replace(session.edit)
        g = shading.edit_material(frame, edit.material)
        planes = {
            "albedo": linear_to_srgb(g.albedo),
            "orm": g.orm,
            "normal": g.normal,
            "rgb": linear_to_srgb(
                g.rgb if g.rgb is not None else np.zeros_like(g.albedo)
            ),
        }
        if plane is not None:
            if plane not in planes:
                raise HTTPException(status_code=422, detail=f"unknown plane {plane!r}")
            img = planes[plane]
        else:
            img = np.concatenate([planes["albedo"], planes["orm"], planes["normal"]], axis=1)
        return Response(content=imageio.encode_png(img, 8), media_type="image/png")

    if frontend_dir is not None:
        from pathlib import Path

        from fastapi.staticfiles import StaticFiles

        root = Path(frontend_dir)
        if (root / "index.html").exists():
            # mounted last so API routes keep precedence; serves the viewer
            # same-origin, which keeps the browser client CORS-free
            app.mount("/", StaticFiles(directory=root, html=True), name="viewer")

    return app

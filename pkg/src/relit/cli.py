"""Command-line entry point: file-in/file-out workflows over the library.

Exit codes: 0 success, 2 usage, 3 bad input data, 4 numeric failure.
Every run logs the resolved configuration to stderr; outputs are
deterministic for a fixed --seed and independent of --threads.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import fixtures, imageio, oracle, prefilter, recon, shading
from .color import ToneMapParams, tonemap_agx
from .parallel import default_threads

log = logging.getLogger("relit")

EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_NUMERIC = 4


class InputError(RuntimeError):
    pass


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0, help="global RNG stream seed")
    p.add_argument("--threads", type=int, default=None,
                   help="data-parallel width (default: RELIT_THREADS or cpu count)")
    p.add_argument("--log-level", default="info",
                   choices=["debug", "info", "warning", "error"])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="relit", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prefilter", help="build an environment pyramid")
    p.add_argument("--env", required=True, help="HDR/PFM probe path")
    p.add_argument("--mode", default="relight", choices=["optimization", "relight"])
    p.add_argument("--base-res", type=int, default=None)
    p.add_argument("--out", required=True, help="output pyramid directory")
    _add_common(p)

    p = sub.add_parser("relight", help="relight a G-buffer bundle")
    p.add_argument("--bundle", required=True, help="bundle manifest path")
    p.add_argument("--env", default=None, help="probe path (default: manifest env)")
    p.add_argument("--pyramid", default=None, help="prebuilt pyramid directory")
    p.add_argument("--mode", default="relight", choices=["optimization", "relight"])
    p.add_argument("--out", required=True)
    p.add_argument("--frame", type=int, default=None, help="single frame index")
    p.add_argument("--exposure", type=float, default=0.0)
    p.add_argument("--no-specular", action="store_true")
    p.add_argument("--no-diffuse", action="store_true")
    p.add_argument("--no-multiscatter", action="store_true")
    _add_common(p)

    p = sub.add_parser("orbit", help="relight all frames and report timing")
    p.add_argument("--bundle", required=True)
    p.add_argument("--env", default=None)
    p.add_argument("--mode", default="relight", choices=["optimization", "relight"])
    p.add_argument("--out", required=True)
    p.add_argument("--exposure", type=float, default=0.0)
    _add_common(p)

    p = sub.add_parser("oracle", help="brute-force reference render")
    p.add_argument("--bundle", required=True)
    p.add_argument("--env", default=None)
    p.add_argument("--spp", type=int, default=4096)
    p.add_argument("--out", required=True)
    p.add_argument("--frame", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("mask", help="view-dependent trust masks")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--smoothstep-lo", type=float, default=0.3)
    p.add_argument("--smoothstep-hi", type=float, default=0.9)
    p.add_argument("--gamma", type=float, default=1.5)
    _add_common(p)

    p = sub.add_parser("homography", help="photometric homography fit")
    p.add_argument("--rendered", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--out", default=None, help="write the fit as JSON")
    _add_common(p)

    p = sub.add_parser("metrics", help="PSNR/RMSE between two images")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--peak", type=float, default=1.0)
    _add_common(p)

    p = sub.add_parser("serve", help="run the interactive viewer service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8710)
    p.add_argument("--frontend", default=None,
                   help="directory with the built viewer (index.html + dist/)")
    _add_common(p)

    p = sub.add_parser("gen-fixture", help="write a synthetic test bundle")
    p.add_argument("kind", choices=["sphere", "plane", "three-spheres", "probe"])
    p.add_argument("--res", type=int, default=128)
    p.add_argument("--frames", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--roughness", type=float, default=0.5)
    p.add_argument("--metallic", type=float, default=0.0)
    p.add_argument("--probe-kind", default="studio",
                   choices=["constant", "spot", "studio"])
    _add_common(p)
    return ap


def _load_env(args, manifest=None):
    path = args.env or (manifest.env if manifest else None)
    if not path:
        raise InputError("no environment given (--env) and none in the manifest")
    path = Path(path)
    if manifest is not None and not path.is_absolute() and not path.exists():
        candidate = Path(args.bundle).parent / path
        if candidate.exists():
            path = candidate
    if not path.exists():
        raise InputError(f"environment not found: {path}")
    return imageio.load_environment(path)


def _build_or_load_pyramid(args, env):
    if getattr(args, "pyramid", None):
        return imageio.load_pyramid(Path(args.pyramid) / "pyramid.json")
    cfg = prefilter.PrefilterConfig(
        mode=args.mode,
        base_resolution=getattr(args, "base_res", None),
        seed=args.seed,
        threads=args.threads,
    )
    return prefilter.prefilter_specular(env, cfg)


def _write_frames(out_dir: Path, images, exposure: float):
    out_dir.mkdir(parents=True, exist_ok=True)
    params = ToneMapParams(exposure_ev=exposure)
    for i, img in enumerate(images):
        imageio.write_image(out_dir / f"frame{i:03d}.hdr", img, "radiance_hdr")
        imageio.write_image(
            out_dir / f"frame{i:03d}.png", tonemap_agx(img, params), "png8"
        )


def cmd_prefilter(args) -> int:
    env = _load_env(args)
    pyramid = _build_or_load_pyramid(args, env)
    path = imageio.save_pyramid(args.out, pyramid)
    log.info("pyramid written to %s (%d levels)", path, pyramid.num_levels)
    return 0


def cmd_relight(args) -> int:
    manifest, frames = imageio.load_bundle(args.bundle)
    env = _load_env(args, manifest)
    pyramid = _build_or_load_pyramid(args, env)
    lut = prefilter.build_dfg_lut(seed=args.seed)
    cfg = shading.RelightConfig(
        specular=not args.no_specular,
        diffuse=not args.no_diffuse,
        multiscatter=not args.no_multiscatter,
        threads=args.threads,
    )
    if args.frame is not None:
        if not (0 <= args.frame < len(frames)):
            raise InputError(f"frame index {args.frame} outside 0..{len(frames) - 1}")
        frames = [frames[args.frame]]
    images = shading.relight_orbit(frames, pyramid, lut, cfg)
    _write_frames(Path(args.out), images, args.exposure)
    log.info("wrote %d relit frame(s) to %s", len(images), args.out)
    return 0


def cmd_orbit(args) -> int:
    manifest, frames = imageio.load_bundle(args.bundle)
    env = _load_env(args, manifest)
    t0 = time.perf_counter()
    pyramid = _build_or_load_pyramid(args, env)
    t_prefilter = time.perf_counter() - t0
    lut = prefilter.build_dfg_lut(seed=args.seed)
    cfg = shading.RelightConfig(threads=args.threads)
    t0 = time.perf_counter()
    images = shading.relight_orbit(frames, pyramid, lut, cfg)
    t_relight = time.perf_counter() - t0
    _write_frames(Path(args.out), images, args.exposure)
    w, h = frames[0].resolution
    log.info(
        "orbit: %d frames at %dx%d, prefilter %.3fs, relight %.3fs",
        len(frames), w, h, t_prefilter, t_relight,
    )
    print(json.dumps({
        "frames": len(frames), "width": w, "height": h,
        "prefilter_seconds": round(t_prefilter, 4),
        "relight_seconds": round(t_relight, 4),
    }))
    return 0


def cmd_oracle(args) -> int:
    manifest, frames = imageio.load_bundle(args.bundle)
    env = _load_env(args, manifest)
    cfg = oracle.OracleConfig(
        samples_per_pixel=args.spp, seed=args.seed, threads=args.threads
    )
    if args.frame is not None:
        if not (0 <= args.frame < len(frames)):
            raise InputError(f"frame index {args.frame} outside 0..{len(frames) - 1}")
        frames = [frames[args.frame]]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, g in enumerate(frames):
        img = oracle.render_reference(g, env, cfg)
        imageio.write_image(out_dir / f"frame{i:03d}.hdr", img, "radiance_hdr")
    log.info("wrote %d reference frame(s) to %s", len(frames), args.out)
    return 0


def cmd_mask(args) -> int:
    _, frames = imageio.load_bundle(args.bundle)
    cfg = recon.ViewMaskConfig(
        smoothstep_lo=args.smoothstep_lo,
        smoothstep_hi=args.smoothstep_hi,
        gamma=args.gamma,
    )
    masks = recon.view_mask(frames, cfg)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, m in enumerate(masks):
        imageio.write_image(out_dir / f"mask{i:03d}.png", m, "png16")
    log.info("wrote %d mask(s) to %s", len(masks), args.out)
    return 0


def cmd_homography(args) -> int:
    rendered = imageio.read_image(args.rendered)
    target = imageio.read_image(args.target)
    result = recon.fit_homography(rendered, target)
    record = {
        "matrix": [[float(v) for v in row] for row in result.homography.matrix],
        "loss": result.loss,
        "diverged": result.diverged,
        "iterations": result.iterations,
    }
    if args.out:
        Path(args.out).write_text(json.dumps(record, indent=2))
    print(json.dumps(record))
    return 0


def cmd_metrics(args) -> int:
    a = imageio.read_image(args.a)
    b = imageio.read_image(args.b)
    report = imageio.psnr(a, b, peak=args.peak)
    print(json.dumps({
        "psnr_db": None if report.identical else round(report.psnr, 4),
        "identical": report.identical,
        "rmse": report.rmse,
    }))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    frontend = args.frontend
    if frontend is None and Path("frontend/index.html").exists():
        frontend = "frontend"
    uvicorn.run(
        create_app(frontend_dir=frontend),
        host=args.host,
        port=args.port,
        log_level="warning",
    )
    return 0


def cmd_gen_fixture(args) -> int:
    out = Path(args.out)
    if args.kind == "probe":
        out.mkdir(parents=True, exist_ok=True)
        env = fixtures.make_probe(args.probe_kind, args.res)
        imageio.write_image(out / f"{args.probe_kind}.hdr", env.pixels, "radiance_hdr")
        log.info("wrote probe to %s", out / f"{args.probe_kind}.hdr")
        return 0
    if args.kind == "plane":
        frames = fixtures.make_plane_bundle(
            res=args.res, roughness=args.roughness, metallic=args.metallic,
            checker=max(args.res // 16, 1),
        )
    else:
        frames = fixtures.make_sphere_bundle(
            args.kind, res=args.res, frames=args.frames,
            material=(args.roughness, args.metallic),
        )
    path = imageio.save_bundle(out, frames)
    log.info("wrote %d-frame %s bundle to %s", len(frames), args.kind, path)
    return 0


COMMANDS = {
    "prefilter": cmd_prefilter,
    "relight": cmd_relight,
    "orbit": cmd_orbit,
    "oracle": cmd_oracle,
    "mask": cmd_mask,
    "homography": cmd_homography,
    "metrics": cmd_metrics,
    "serve": cmd_serve,
    "gen-fixture": cmd_gen_fixture,
}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper()),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    resolved = {k: v for k, v in vars(args).items() if k != "command"}
    resolved["threads"] = args.threads or default_threads()
    log.info("command=%s config=%s", args.command, json.dumps(resolved, default=str))
    try:
        return COMMANDS[args.command](args)
    except (InputError, imageio.ImageIoError, FileNotFoundError, ValueError) as exc:
        print(f"error: input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        print(f"error: numeric: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

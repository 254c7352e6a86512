#!/usr/bin/env python3
"""Performance budget report: prefilter latency, orbit relight throughput,
and warm service frame latency. Budgets come from the interactive-use goals;
they are reported, not enforced (see tests/test_acceptance.py criterion 10).

Run: python3 scripts/benchmark.py [--threads N]
"""

import argparse
import json
import sys
import tempfile
import time
from pathlib import Path

from relit import fixtures, imageio, prefilter, shading
from relit.parallel import default_threads


def time_it(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--orbit-res", type=int, default=576)
    ap.add_argument("--frames", type=int, default=21)
    args = ap.parse_args()
    threads = args.threads or default_threads()
    report = {"threads": threads}

    env = fixtures.make_probe("studio", 256, 1.0)
    cfg_opt = prefilter.PrefilterConfig(mode="optimization", threads=threads)
    report["prefilter_optimization_256_ms"] = round(
        time_it(lambda: prefilter.prefilter_specular(env, cfg_opt)) * 1e3, 1
    )
    report["prefilter_budget_ms"] = 150.0

    lut = prefilter.build_dfg_lut()
    pyramid = prefilter.prefilter_specular(
        env, prefilter.PrefilterConfig(mode="relight", threads=threads)
    )
    frames = fixtures.make_sphere_bundle(
        "three-spheres", res=args.orbit_res, frames=args.frames
    )
    cfg = shading.RelightConfig(threads=threads)
    t0 = time.perf_counter()
    shading.relight_orbit(frames, pyramid, lut, cfg)
    report["orbit_seconds"] = round(time.perf_counter() - t0, 2)
    report["orbit_budget_seconds"] = 2.0
    report["orbit_frames"] = args.frames
    report["orbit_resolution"] = args.orbit_res

    # warm service frame latency at 256^2 through the HTTP stack
    from fastapi.testclient import TestClient

    from relit.service import create_app

    with tempfile.TemporaryDirectory() as tmp:
        bundle = fixtures.make_sphere_bundle("three-spheres", res=256)
        manifest = imageio.save_bundle(Path(tmp) / "bundle", bundle)
        probe = Path(tmp) / "studio.hdr"
        imageio.write_image(probe, env.pixels, "radiance_hdr")
        client = TestClient(create_app())
        sid = client.post(
            "/session",
            json={"bundle_path": str(manifest), "env_path": str(probe),
                  "mode": "relight"},
        ).json()["session_id"]
        while client.get(f"/session/{sid}").json()["status"] != "ready":
            time.sleep(0.05)
        client.get(f"/session/{sid}/frame")  # warm caches
        latency = time_it(lambda: client.get(f"/session/{sid}/frame"), repeats=5)
        report["service_frame_256_ms"] = round(latency * 1e3, 1)
        report["service_frame_budget_ms"] = 100.0

    json.dump(report, sys.stdout, indent=2)
    print()


if __name__ == "__main__":
    main()

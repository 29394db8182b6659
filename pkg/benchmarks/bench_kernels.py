#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Renders the standard throughput scene (1280x960, 200 active droplets,
slip dynamics on) once per available backend and reports per-stage times
and sustained frames/second. Each backend runs in a subprocess because
the backend is chosen at import time.

    python benchmarks/bench_kernels.py [--frames N] [--worker]
"""

import argparse
import json
import os
import subprocess
import sys

WIDTH, HEIGHT = 1280, 960
DROPS = 200


def measure(frames):
    import time

    import numpy as np

    from rainlens import _kernels
    from rainlens.dropfield import DropField, FieldConfig
    from rainlens.protodrop import generate_protodrop
    from rainlens.render import apply_rain, composite

    img = np.random.default_rng(1).random((HEIGHT, WIDTH, 3))
    cfg = FieldConfig(p_r=1.0, max_drops=DROPS, p_d=0.3, seed=4,
                      diameter_range_mm=(4.5, 8.0), spawn_every_frame=True)
    proto = generate_protodrop()
    field = DropField(cfg, (WIDTH, HEIGHT))
    field.spawn()
    comp = composite(field, proto, (WIDTH, HEIGHT))
    apply_rain(img, comp)  # warmup

    t_comp = t_apply = 0.0
    t0 = time.perf_counter()
    for _ in range(frames):
        field.step()
        t = time.perf_counter()
        comp = composite(field, proto, (WIDTH, HEIGHT))
        t_comp += time.perf_counter() - t
        t = time.perf_counter()
        apply_rain(img, comp)
        t_apply += time.perf_counter() - t
    total = time.perf_counter() - t0
    return {
        "backend": _kernels.backend_name(),
        "frames": frames,
        "composite_ms": 1000.0 * t_comp / frames,
        "apply_ms": 1000.0 * t_apply / frames,
        "fps": frames / total,
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", type=int, default=30)
    parser.add_argument("--worker", action="store_true",
                        help="internal: measure the backend chosen by "
                             "RAINLENS_KERNELS and print JSON")
    args = parser.parse_args()

    if args.worker:
        print(json.dumps(measure(args.frames)))
        return 0

    from rainlens._kernels import available_backends
    results = []
    for backend in available_backends():
        env = dict(os.environ, RAINLENS_KERNELS=backend)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--worker",
             "--frames", str(args.frames)],
            env=env, capture_output=True, text=True, check=True)
        results.append(json.loads(proc.stdout.splitlines()[-1]))

    print(f"scene: {WIDTH}x{HEIGHT}, {DROPS} droplets, "
          f"{args.frames} frames per backend")
    print(f"{'backend':<8} {'composite':>12} {'apply_rain':>12} {'fps':>8}")
    for res in results:
        print(f"{res['backend']:<8} {res['composite_ms']:>9.1f} ms "
              f"{res['apply_ms']:>9.1f} ms {res['fps']:>8.1f}")
    if len(results) == 2:
        by = {r["backend"]: r["fps"] for r in results}
        if "native" in by and "numpy" in by:
            print(f"native speedup: {by['native'] / by['numpy']:.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())

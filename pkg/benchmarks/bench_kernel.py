"""Benchmark: compiled extension kernel vs interpreted fallback.

Runs the same workloads through both implementations and prints a
timing table plus a bit-equality check.

    python3 benchmarks/bench_kernel.py [--size 64] [--passes 2]
"""

import argparse
import dataclasses
import time

import numpy as np

from cinevol import kernel, tracer
from cinevol.scene import scene_preset


def time_render_pass(impl, scene, settings, passes):
    ps = tracer.pack_scene(scene, settings)
    h, w = settings.height, settings.width
    accum = np.zeros((h, w, 3))
    depth = np.full((h, w), tracer.BIG)
    normal = np.zeros((h, w, 3))
    diag = np.zeros(h, dtype=np.int64)
    wrk = np.zeros((h, 48))
    ctr = np.zeros((h, 2), dtype=np.int64)
    t0 = time.perf_counter()
    for p in range(passes):
        impl.render_pass(accum, depth, normal, diag, wrk, ctr,
                         ps.vol, ps.cut, ps.lut, ps.clips, ps.lights,
                         ps.cube, ps.cube_pdf, ps.cube_cdf, ps.maj,
                         ps.I, ps.D, p, settings.seed, 1)
    return time.perf_counter() - t0, accum


def time_transmittance(impl, scene, settings, n):
    ps = tracer.pack_scene(scene, settings)
    out = np.zeros(n)
    wrk = np.zeros((1, 48))
    ctr = np.zeros((1, 2), dtype=np.int64)
    t0 = time.perf_counter()
    impl.transmittance_batch(out, *ps.track_args(), 5.0, 31.5, 31.5,
                             58.0, 31.5, 31.5, 0, wrk, ctr)
    return time.perf_counter() - t0, out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=64)
    parser.add_argument("--passes", type=int, default=2)
    parser.add_argument("--transmittance", type=int, default=20_000)
    args = parser.parse_args()

    scene = scene_preset("default")
    settings = dataclasses.replace(scene.settings, width=args.size,
                                   height=args.size, iterations=1)

    impls = [("interpreted", kernel.load_fallback())]
    if kernel.kernel_is_compiled():
        impls.insert(0, ("compiled", kernel.impl))
    else:
        print("note: compiled extension unavailable; timing fallback only")

    print(f"workload: render_pass {args.size}x{args.size} x{args.passes}, "
          f"transmittance x{args.transmittance}")
    results = {}
    for name, impl in impls:
        rt, accum = time_render_pass(impl, scene, settings, args.passes)
        tt, trans = time_transmittance(impl, scene, settings,
                                       args.transmittance)
        results[name] = (rt, tt, accum, trans)
        paths = args.size * args.size * args.passes
        print(f"{name:>12}: render {rt:8.3f}s ({rt / paths * 1e6:7.2f} us/path)"
              f"   transmittance {tt:8.3f}s "
              f"({tt / args.transmittance * 1e9:7.1f} ns/est)")

    if len(results) == 2:
        c, i = results["compiled"], results["interpreted"]
        print(f"{'speedup':>12}: render {i[0] / c[0]:.1f}x   "
              f"transmittance {i[1] / c[1]:.1f}x")
        same = (np.array_equal(c[2], i[2]) and np.array_equal(c[3], i[3]))
        print(f"{'bit-equal':>12}: {same}")
        if not same:
            raise SystemExit("kernel implementations diverged")


if __name__ == "__main__":
    main()

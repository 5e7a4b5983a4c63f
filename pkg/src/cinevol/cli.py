"""Batch command line: render scenes, run sensitivity sweeps, generate
phantoms and transfer-function presets, and launch the render service.

Exit codes: 0 success, 2 usage error, 3 ingest/parse error, 4 render
error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import os
import re
import sys
import time

import numpy as np

from cinevol import classify, postfx, scene as scenemod, tracer, volume
from cinevol.errors import (
    CinevolError, IngestError, InvalidArgument, PresetParseError,
    SceneParseError, UnsupportedFormat,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INGEST = 3
EXIT_RENDER = 4

_LUM = np.array([0.2126, 0.7152, 0.0722])


def _load_scene_arg(value: str) -> scenemod.Scene:
    """A --scene value is a file path or a built-in preset name."""
    if os.path.exists(value):
        return scenemod.load_scene(value)
    if value in scenemod.PRESET_NAMES:
        return scenemod.scene_preset(value)
    raise IngestError(f"scene {value!r}: no such file or preset "
                      f"(presets: {', '.join(scenemod.PRESET_NAMES)})")


def _apply_overrides(settings: tracer.RenderSettings, args):
    changes = {}
    if args.iterations is not None:
        changes["iterations"] = args.iterations
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.size is not None:
        m = re.fullmatch(r"(\d+)x(\d+)", args.size)
        if m is None:
            raise InvalidArgument(f"--size expects WxH, got {args.size!r}")
        changes["width"], changes["height"] = int(m.group(1)), int(m.group(2))
    return dataclasses.replace(settings, **changes) if changes else settings


def _render_scene(scene, settings, threads, log=None):
    fb = tracer.Framebuffer(settings.width, settings.height)
    one = dataclasses.replace(settings, iterations=1)
    total = 0.0
    for _ in range(settings.iterations):
        t0 = time.perf_counter()
        tracer.render(scene, one, fb=fb, threads=threads)
        dt = time.perf_counter() - t0
        total += dt
        if log is not None:
            log.write(f"pass {fb.iteration_count}/{settings.iterations}: "
                      f"{dt:.3f}s\n")
    if log is not None:
        log.write(f"total {total:.3f}s, iterations {fb.iteration_count}\n")
    return fb


def _stats_row(fb) -> tuple[float, float, float, float]:
    lum = fb.mean_radiance() @ _LUM
    # variance is display-referred: it describes contrast in the image a
    # viewer compares, not in the unbounded HDR radiance
    disp = (postfx.tone_map(fb).rgb8 / 255.0) @ _LUM
    return (float(lum.max()), float(lum.mean()), float(disp.var()),
            float((lum >= 0.99).mean()))


def cmd_render(args) -> int:
    scene = _load_scene_arg(args.scene)
    settings = _apply_overrides(scene.settings, args)
    fb = _render_scene(scene, settings, args.threads, log=sys.stdout)
    ssao = None if args.no_ssao else postfx.SsaoParams()
    img = postfx.render_to_ldr(fb, ssao=ssao)
    postfx.save_png(img, args.out)
    if args.hdr:
        from cinevol.pfm import save_pfm

        save_pfm(os.path.splitext(args.out)[0] + ".pfm",
                 fb.mean_radiance().astype(np.float32))
    print(f"wrote {args.out} ({settings.width}x{settings.height}, "
          f"{fb.iteration_count} iterations)")
    return EXIT_OK


SWEEP_AXES = ("roughness", "metallic", "specular", "light_count",
              "light_layout", "background_mode")

_LAYOUTS = {
    "top_right": ((140.0, 140.0, -80.0), (40.0, 0.0, 0.0), (0.0, 0.0, 40.0)),
    "front": ((31.5, 31.5, -160.0), (40.0, 0.0, 0.0), (0.0, 40.0, 0.0)),
    "behind": ((31.5, 31.5, 200.0), (-40.0, 0.0, 0.0), (0.0, 40.0, 0.0)),
}


def _sweep_variant(scene: scenemod.Scene, axis: str, value: str):
    from cinevol.lighting import AreaLight, BackgroundLight

    if axis in ("roughness", "metallic", "specular"):
        mat = dataclasses.replace(scene.material, **{axis: float(value)})
        return scene.with_updates(material=mat)
    if axis == "light_count":
        count = int(value)
        if count < 1 or not scene.area_lights:
            raise InvalidArgument("light_count needs >= 1 and a base light")
        return scene.with_updates(area_lights=(scene.area_lights[0],) * count)
    if axis == "light_layout":
        if value not in _LAYOUTS:
            raise InvalidArgument(
                f"unknown layout {value!r} (have {sorted(_LAYOUTS)})")
        center, eu, ev = _LAYOUTS[value]
        base = scene.area_lights[0] if scene.area_lights else None
        rad = base.radiance if base else (120.0, 120.0, 120.0)
        light = AreaLight(center, eu, ev, rad)
        return scene.with_updates(area_lights=(light,))
    if axis == "background_mode":
        if value == "area_only":
            bg = dataclasses.replace(scene.background, enabled=False)
            return scene.with_updates(background=bg)
        if value == "background_only":
            return scene.with_updates(area_lights=())
        if value == "both":
            return scene
        raise InvalidArgument(
            f"unknown background_mode {value!r} "
            "(area_only, background_only, both)")
    raise InvalidArgument(f"unknown sweep axis {axis!r}")


def cmd_sweep(args) -> int:
    if args.axis not in SWEEP_AXES:
        print(f"error: unknown axis {args.axis!r} (have {SWEEP_AXES})",
              file=sys.stderr)
        return EXIT_USAGE
    scene = _load_scene_arg(args.scene)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        print("error: --values is empty", file=sys.stderr)
        return EXIT_USAGE
    os.makedirs(args.out_dir, exist_ok=True)
    images = []
    rows = []
    for value in values:
        variant = _sweep_variant(scene, args.axis, value)
        settings = _apply_overrides(variant.settings, args)
        fb = _render_scene(variant, settings, args.threads)
        ssao = None if args.no_ssao else postfx.SsaoParams()
        img = postfx.render_to_ldr(fb, ssao=ssao)
        name = f"{args.axis}_{value}.png"
        postfx.save_png(img, os.path.join(args.out_dir, name))
        images.append(img)
        rows.append((value, *_stats_row(fb)))
        print(f"wrote {name}")
    # comparison grid: all variants side by side
    grid = np.concatenate([im.rgb8 for im in images], axis=1)
    postfx.save_png(
        postfx.LdrImage(grid.shape[1], grid.shape[0], grid),
        os.path.join(args.out_dir, "composite.png"),
    )
    csv_path = os.path.join(args.out_dir, "stats.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value", "max_lum", "mean_lum", "var_lum",
                         "overexposed_frac"])
        for row in rows:
            writer.writerow([row[0]] + [repr(x) for x in row[1:]])
    print(f"wrote composite.png and stats.csv to {args.out_dir}")
    return EXIT_OK


def cmd_phantom(args) -> int:
    kind = args.kind
    # accept bare forms like constant0 / noise42
    m = re.fullmatch(r"(constant|noise)(-?\d+(?:\.\d+)?)", kind)
    if m:
        kind = f"{m.group(1)}({m.group(2)})"
    grid = volume.make_phantom(kind, args.dims)
    volume.save_nrrd(grid, args.out)
    print(f"wrote {args.out} ({grid.dims[0]}x{grid.dims[1]}x{grid.dims[2]})")
    return EXIT_OK


def cmd_preset(args) -> int:
    try:
        tf = classify.preset(args.name)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_USAGE
    with open(args.out, "wb") as fh:
        fh.write(classify.save_preset_csv(tf))
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from cinevol.service import create_app

    scene_arg = args.scene or os.environ.get("SCENE") or "default"
    port = args.port or int(os.environ.get("PORT", "8000"))
    threads = args.threads or int(os.environ.get("THREADS", "1"))
    scene = _load_scene_arg(scene_arg)
    app = create_app(scene, threads=threads)
    uvicorn.run(app, host=args.host, port=port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cinevol",
        description="Cinematic Monte Carlo volume renderer for CT data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--iterations", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--size", default=None, metavar="WxH")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--no-ssao", action="store_true")

    p = sub.add_parser("render", help="render a scene to PNG (and PFM)")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--hdr", action="store_true",
                   help="also write an HDR .pfm next to the PNG")
    add_common(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("sweep", help="parameter sensitivity sweep")
    p.add_argument("--scene", required=True)
    p.add_argument("--axis", required=True)
    p.add_argument("--values", required=True,
                   help="comma-separated values for the axis")
    p.add_argument("--out-dir", required=True)
    add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("phantom", help="write a synthetic NRRD volume")
    p.add_argument("kind")
    p.add_argument("dims", type=int)
    p.add_argument("out")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("preset", help="write a built-in .tfcsv preset")
    p.add_argument("name")
    p.add_argument("out")
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("serve", help="run the progressive render service")
    p.add_argument("--scene", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (IngestError, UnsupportedFormat, SceneParseError,
            PresetParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except CinevolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RENDER


if __name__ == "__main__":
    sys.exit(main())

"""Scene description: volume + classification + material + lights +
camera + edits + render settings, serializable as `.scene.json`.

The document schema has top-level keys volume, smoothing,
transfer_function, material, area_lights, background, camera,
clip_planes, cuts, render.  Unknown keys anywhere are rejected with the
offending key path.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from cinevol import classify, edit, lighting, volume
from cinevol.errors import SceneParseError
from cinevol.material import Material


@dataclass(frozen=True)
class Camera:
    position: tuple[float, float, float]
    target: tuple[float, float, float]
    up: tuple[float, float, float] = (0.0, 1.0, 0.0)
    projection: str = "perspective"  # "perspective" | "orthographic"
    vertical_fov: float = 45.0  # degrees, perspective
    half_height: float = 100.0  # mm, orthographic

    def __post_init__(self):
        for name in ("position", "target", "up"):
            object.__setattr__(
                self, name, tuple(float(x) for x in getattr(self, name))
            )
        if self.projection not in ("perspective", "orthographic"):
            raise SceneParseError("camera.projection",
                                  f"unknown projection {self.projection!r}")
        if np.allclose(self.position, self.target):
            raise SceneParseError("camera.position",
                                  "camera position equals target")
        if not (0.0 < self.vertical_fov < 180.0):
            raise SceneParseError(
                "camera.vertical_fov",
                f"fov {self.vertical_fov} outside (0, 180)",
            )
        if self.half_height <= 0:
            raise SceneParseError("camera.half_height", "must be > 0")

    def basis(self, width: int, height: int):
        """(pos, right, up, fwd, tan_x, tan_y) image-plane frame.

        For orthographic projection tan_x/tan_y are the image half
        extents in mm.  A near-degenerate up vector is repaired by
        substituting the world axis least aligned with the view.
        """
        pos = np.asarray(self.position)
        fwd = np.asarray(self.target) - pos
        fwd = fwd / np.linalg.norm(fwd)
        up = np.asarray(self.up, dtype=np.float64)
        if np.linalg.norm(np.cross(fwd, up)) < 1e-6:
            axis = int(np.argmin(np.abs(fwd)))
            up = np.zeros(3)
            up[axis] = 1.0
            warnings.warn("camera up is parallel to view; substituting "
                          f"axis {axis}", stacklevel=2)
        right = np.cross(fwd, up)
        right = right / np.linalg.norm(right)
        up = np.cross(right, fwd)
        aspect = width / height
        if self.projection == "orthographic":
            tan_y = self.half_height
        else:
            tan_y = math.tan(math.radians(self.vertical_fov) * 0.5)
        tan_x = tan_y * aspect
        return pos, right, up, fwd, tan_x, tan_y


def generate_ray(cam: Camera, px: int, py: int, jitter, width: int,
                 height: int):
    """Camera ray through pixel (px, py) with sub-pixel jitter in [0,1)^2.

    Pixel (0, 0) is the top-left corner.  Mirrors the render kernel's
    ray setup exactly.
    """
    from cinevol.tracer import Ray

    pos, right, up, fwd, tan_x, tan_y = cam.basis(width, height)
    ndc_x = ((px + jitter[0]) / width) * 2.0 - 1.0
    ndc_y = 1.0 - ((py + jitter[1]) / height) * 2.0
    sx = ndc_x * tan_x
    sy = ndc_y * tan_y
    if cam.projection == "orthographic":
        return Ray(tuple(pos + sx * right + sy * up), tuple(fwd))
    d = fwd + sx * right + sy * up
    return Ray(tuple(pos), tuple(d / np.linalg.norm(d)))


@dataclass(frozen=True)
class Scene:
    """Validated, immutable scene; `grid` is the loaded (smoothed) volume."""

    volume_spec: dict
    grid: volume.VoxelGrid = field(repr=False)
    smoothing: volume.SmoothingParams
    tf: classify.TransferFunction
    material: Material
    area_lights: tuple
    background: lighting.BackgroundLight
    camera: Camera
    clip_planes: tuple
    cut_ops: tuple
    settings: "RenderSettings"

    def __post_init__(self):
        any_light = any(l.enabled for l in self.area_lights)
        if not any_light and not self.background.enabled:
            warnings.warn("scene has no enabled light source (NoEnergy): "
                          "renders will be black", stacklevel=2)

    def with_updates(self, **kwargs) -> "Scene":
        return replace(self, **kwargs)


# --- document schema ---------------------------------------------------------

_TOP_KEYS = {
    "volume", "smoothing", "transfer_function", "material", "area_lights",
    "background", "camera", "clip_planes", "cuts", "render",
}


def _check_keys(doc: dict, allowed, path: str):
    for key in doc:
        if key not in allowed:
            raise SceneParseError(f"{path}.{key}" if path else key,
                                  f"unknown field {key!r}")


def _triple(doc, key, path, default=None):
    if key not in doc:
        if default is None:
            raise SceneParseError(f"{path}.{key}", "missing required field")
        return default
    v = doc[key]
    if not isinstance(v, (list, tuple)) or len(v) != 3:
        raise SceneParseError(f"{path}.{key}", f"expected 3 numbers, got {v!r}")
    return tuple(float(x) for x in v)


def _load_volume(doc: dict, base_dir: str) -> volume.VoxelGrid:
    _check_keys(doc, {"phantom", "path", "format", "dims", "spacing",
                      "origin", "dtype", "value", "seed"}, "volume")
    if "phantom" in doc:
        dims = doc.get("dims", 64)
        if isinstance(dims, list):
            dims = tuple(int(d) for d in dims)
        return volume.make_phantom(
            doc["phantom"], dims,
            spacing=_triple(doc, "spacing", "volume", (1.0, 1.0, 1.0)),
            value=float(doc.get("value", 0.0)),
            seed=int(doc.get("seed", 0)),
        )
    if "path" not in doc:
        raise SceneParseError("volume.path", "need phantom or path")
    path = os.path.join(base_dir, doc["path"])
    fmt = doc.get("format")
    if fmt is None:
        fmt = "dicom" if os.path.isdir(path) else "nrrd"
    if fmt == "nrrd":
        return volume.load_nrrd(path)
    if fmt == "dicom":
        from cinevol.dicom import load_dicom_series

        return load_dicom_series(path)
    if fmt == "raw":
        return volume.load_raw(
            path, tuple(int(d) for d in doc["dims"]),
            _triple(doc, "spacing", "volume"),
            _triple(doc, "origin", "volume", (0.0, 0.0, 0.0)),
            doc.get("dtype", "float32"),
        )
    raise SceneParseError("volume.format", f"unknown format {fmt!r}")


def _load_tf(doc: dict, base_dir: str) -> classify.TransferFunction:
    _check_keys(doc, {"preset", "path", "points", "window_level",
                      "window_width"}, "transfer_function")
    if "preset" in doc:
        return classify.preset(doc["preset"])
    if "path" in doc:
        with open(os.path.join(base_dir, doc["path"]), "rb") as fh:
            return classify.load_preset_csv(fh.read())
    if "points" not in doc:
        raise SceneParseError("transfer_function.points",
                              "need preset, path, or points")
    return classify.TransferFunction(
        tuple(classify.ControlPoint(*p) for p in doc["points"]),
        doc.get("window_level"), doc.get("window_width"),
    )


def _load_background(doc: dict, base_dir: str) -> lighting.BackgroundLight:
    _check_keys(doc, {"mode", "color", "path", "intensity_scale", "enabled",
                      "procedural"}, "background")
    mode = doc.get("mode", "constant")
    cubemap = None
    if mode == "cubemap":
        if "procedural" in doc:
            cubemap = lighting.make_gradient_sky(int(doc["procedural"]))
        elif "path" in doc:
            cubemap = lighting.load_cubemap(os.path.join(base_dir, doc["path"]))
        else:
            raise SceneParseError("background.path",
                                  "cubemap mode needs path or procedural")
    try:
        return lighting.BackgroundLight(
            mode=mode,
            color=tuple(doc.get("color", (1.0, 1.0, 1.0))),
            cubemap=cubemap,
            intensity_scale=float(doc.get("intensity_scale", 1.0)),
            enabled=bool(doc.get("enabled", True)),
        )
    except Exception as exc:
        raise SceneParseError("background", str(exc)) from None


def parse_scene(doc: dict, base_dir: str = ".") -> Scene:
    """Validate and resolve a scene document into a Scene."""
    from cinevol.tracer import RenderSettings

    if not isinstance(doc, dict):
        raise SceneParseError("", "scene document must be an object")
    _check_keys(doc, _TOP_KEYS, "")
    if "volume" not in doc:
        raise SceneParseError("volume", "missing required section")
    grid = _load_volume(doc["volume"], base_dir)

    smoothing_doc = doc.get("smoothing", {})
    _check_keys(smoothing_doc, {"sigma"}, "smoothing")
    sigma = smoothing_doc.get("sigma", (0.0, 0.0, 0.0))
    if isinstance(sigma, (int, float)):
        sigma = (float(sigma),) * 3
    try:
        smoothing = volume.SmoothingParams(tuple(float(s) for s in sigma))
    except Exception as exc:
        raise SceneParseError("smoothing.sigma", str(exc)) from None
    if any(s > 0 for s in smoothing.sigma):
        grid = volume.gauss_smooth(grid, smoothing)

    try:
        tf = _load_tf(doc.get("transfer_function", {"preset": "gray"}),
                      base_dir)
    except SceneParseError:
        raise
    except Exception as exc:
        raise SceneParseError("transfer_function", str(exc)) from None

    mat_doc = doc.get("material", {})
    _check_keys(mat_doc, {"base_color", "metallic", "roughness", "specular"},
                "material")
    try:
        mat = Material(
            base_color=tuple(mat_doc.get("base_color", (0.8, 0.8, 0.8))),
            metallic=float(mat_doc.get("metallic", 0.0)),
            roughness=float(mat_doc.get("roughness", 0.5)),
            specular=float(mat_doc.get("specular", 0.5)),
        )
    except Exception as exc:
        raise SceneParseError("material", str(exc)) from None

    lights = []
    for i, ldoc in enumerate(doc.get("area_lights", [])):
        _check_keys(ldoc, {"center", "edge_u", "edge_v", "radiance",
                           "enabled"}, f"area_lights[{i}]")
        try:
            lights.append(lighting.AreaLight(
                center=_triple(ldoc, "center", f"area_lights[{i}]"),
                edge_u=_triple(ldoc, "edge_u", f"area_lights[{i}]"),
                edge_v=_triple(ldoc, "edge_v", f"area_lights[{i}]"),
                radiance=_triple(ldoc, "radiance", f"area_lights[{i}]",
                                 (1.0, 1.0, 1.0)),
                enabled=bool(ldoc.get("enabled", True)),
            ))
        except SceneParseError:
            raise
        except Exception as exc:
            raise SceneParseError(f"area_lights[{i}]", str(exc)) from None

    background = _load_background(doc.get("background", {}), base_dir)

    cam_doc = doc.get("camera")
    if cam_doc is None:
        raise SceneParseError("camera", "missing required section")
    _check_keys(cam_doc, {"position", "target", "up", "projection",
                          "vertical_fov", "half_height"}, "camera")
    camera = Camera(
        position=_triple(cam_doc, "position", "camera"),
        target=_triple(cam_doc, "target", "camera"),
        up=_triple(cam_doc, "up", "camera", (0.0, 1.0, 0.0)),
        projection=cam_doc.get("projection", "perspective"),
        vertical_fov=float(cam_doc.get("vertical_fov", 45.0)),
        half_height=float(cam_doc.get("half_height", 100.0)),
    )

    planes = []
    for i, pdoc in enumerate(doc.get("clip_planes", [])):
        _check_keys(pdoc, {"normal", "offset", "enabled"},
                    f"clip_planes[{i}]")
        try:
            planes.append(edit.ClipPlane(
                normal=_triple(pdoc, "normal", f"clip_planes[{i}]"),
                offset=float(pdoc.get("offset", 0.0)),
                enabled=bool(pdoc.get("enabled", True)),
            ))
        except SceneParseError:
            raise
        except Exception as exc:
            raise SceneParseError(f"clip_planes[{i}]", str(exc)) from None

    cut_ops = []
    for i, cdoc in enumerate(doc.get("cuts", [])):
        _check_keys(cdoc, {"op", "center", "radius", "hu_min", "hu_max"},
                    f"cuts[{i}]")
        if cdoc.get("op") not in ("sphere", "threshold"):
            raise SceneParseError(f"cuts[{i}].op",
                                  f"unknown cut op {cdoc.get('op')!r}")
        cut_ops.append(dict(cdoc))

    rdoc = doc.get("render", {})
    _check_keys(rdoc, {"width", "height", "iterations", "max_bounces",
                       "seed", "density_scale", "g_min"}, "render")
    try:
        settings = RenderSettings(
            width=int(rdoc.get("width", 256)),
            height=int(rdoc.get("height", 256)),
            iterations=int(rdoc.get("iterations", 16)),
            max_bounces=int(rdoc.get("max_bounces", 8)),
            seed=int(rdoc.get("seed", 0)),
            density_scale=float(rdoc.get("density_scale", 1.0)),
            g_min=float(rdoc.get("g_min", 10.0)),
        )
    except Exception as exc:
        raise SceneParseError("render", str(exc)) from None

    return Scene(
        volume_spec=dict(doc["volume"]),
        grid=grid,
        smoothing=smoothing,
        tf=tf,
        material=mat,
        area_lights=tuple(lights),
        background=background,
        camera=camera,
        clip_planes=tuple(planes),
        cut_ops=tuple(cut_ops),
        settings=settings,
    )


def to_document(scene: Scene) -> dict:
    """Canonical JSON-ready document for a Scene."""
    doc = {
        "volume": dict(scene.volume_spec),
        "smoothing": {"sigma": list(scene.smoothing.sigma)},
        "transfer_function": {
            "points": [
                [p.value, p.r, p.g, p.b, p.a] for p in scene.tf.points
            ],
            "window_level": scene.tf.window_level,
            "window_width": scene.tf.window_width,
        },
        "material": {
            "base_color": list(scene.material.base_color),
            "metallic": scene.material.metallic,
            "roughness": scene.material.roughness,
            "specular": scene.material.specular,
        },
        "area_lights": [
            {
                "center": list(l.center),
                "edge_u": list(l.edge_u),
                "edge_v": list(l.edge_v),
                "radiance": list(l.radiance),
                "enabled": l.enabled,
            }
            for l in scene.area_lights
        ],
        "background": _background_doc(scene.background),
        "camera": {
            "position": list(scene.camera.position),
            "target": list(scene.camera.target),
            "up": list(scene.camera.up),
            "projection": scene.camera.projection,
            "vertical_fov": scene.camera.vertical_fov,
            "half_height": scene.camera.half_height,
        },
        "clip_planes": [
            {
                "normal": list(p.normal),
                "offset": p.offset,
                "enabled": p.enabled,
            }
            for p in scene.clip_planes
        ],
        "cuts": [dict(op) for op in scene.cut_ops],
        "render": {
            "width": scene.settings.width,
            "height": scene.settings.height,
            "iterations": scene.settings.iterations,
            "max_bounces": scene.settings.max_bounces,
            "seed": scene.settings.seed,
            "density_scale": scene.settings.density_scale,
            "g_min": scene.settings.g_min,
        },
    }
    return doc


def _background_doc(b: lighting.BackgroundLight) -> dict:
    doc = {
        "mode": b.mode,
        "intensity_scale": b.intensity_scale,
        "enabled": b.enabled,
    }
    if b.mode == "constant":
        doc["color"] = list(b.color)
    else:
        doc["procedural"] = b.cubemap.resolution
    return doc


def load_scene(path) -> Scene:
    path = str(path)
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SceneParseError("", f"invalid JSON: {exc}") from None
    return parse_scene(doc, os.path.dirname(os.path.abspath(path)))


def save_scene(scene: Scene, path) -> None:
    with open(str(path), "w", encoding="utf-8") as fh:
        json.dump(to_document(scene), fh, indent=2, sort_keys=True)
        fh.write("\n")


# --- shipped presets ---------------------------------------------------------

PRESET_NAMES = ("default", "roughness_sweep", "light_count",
                "area_vs_background", "ibl_demo")


def preset_document(name: str) -> dict:
    """Built-in scene documents for the phantom demos and sweeps."""
    # sphere_shell 64^3 at 1 mm: centered at (31.5, 31.5, 31.5)
    center = [31.5, 31.5, 31.5]
    cam = {
        "position": [31.5, 31.5, -120.0],
        "target": center,
        "up": [0.0, 1.0, 0.0],
        "projection": "perspective",
        "vertical_fov": 40.0,
    }
    # one area light up and to the right of the camera, facing the volume
    light = {
        "center": [140.0, 140.0, -80.0],
        "edge_u": [40.0, 0.0, 0.0],
        "edge_v": [0.0, 0.0, 40.0],
        "radiance": [120.0, 120.0, 120.0],
    }
    base = {
        "volume": {"phantom": "sphere_shell", "dims": [64, 64, 64],
                   "spacing": [1.0, 1.0, 1.0]},
        "transfer_function": {"preset": "cardiac"},
        "material": {"base_color": [0.8, 0.8, 0.8], "metallic": 0.0,
                     "roughness": 0.6, "specular": 0.5},
        "area_lights": [light],
        "background": {"mode": "constant", "color": [0.35, 0.38, 0.42],
                       "intensity_scale": 1.0},
        "camera": cam,
        "render": {"width": 256, "height": 256, "iterations": 16,
                   "max_bounces": 8, "seed": 0, "density_scale": 1.0,
                   "g_min": 10.0},
    }
    docs = {"default": base}

    rough = json.loads(json.dumps(base))
    rough["material"].update({"metallic": 0.5, "specular": 0.5,
                              "roughness": 0.0})
    docs["roughness_sweep"] = rough

    single = json.loads(json.dumps(base))
    single["background"] = {"mode": "constant", "color": [0.0, 0.0, 0.0],
                            "enabled": False}
    single["render"]["max_bounces"] = 1  # single-scatter comparison scene
    docs["light_count"] = single

    both = json.loads(json.dumps(base))
    docs["area_vs_background"] = both

    ibl = json.loads(json.dumps(base))
    ibl["area_lights"] = []
    ibl["background"] = {"mode": "cubemap", "procedural": 16,
                         "intensity_scale": 1.0}
    docs["ibl_demo"] = ibl

    if name not in docs:
        raise KeyError(f"unknown scene preset {name!r} "
                       f"(have {sorted(docs)})")
    return docs[name]


def scene_preset(name: str) -> Scene:
    return parse_scene(preset_document(name))

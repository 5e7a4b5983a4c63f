"""Area lights, background light, and HDRI cubemap image-based lighting.

Sampling routines delegate to the render kernel so next-event estimation
inside the tracer and this public API share one implementation.

Cubemap conventions
-------------------
Faces are ordered +X, -X, +Y, -Y, +Z, -Z.  A direction maps to the face
of its dominant axis; each face is a square image addressed by (u, v) in
[0, 1].  Importance sampling draws texels proportionally to
luminance x solid angle, then jitters uniformly within the texel; the
reported pdf is the per-texel probability divided by the texel's solid
angle.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from cinevol.errors import IngestError, InvalidArgument, NoEnergy
from cinevol.kernel import impl as _k
from cinevol.pfm import load_pfm

FACE_NAMES = ("posx", "negx", "posy", "negy", "posz", "negz")

# int/double slot indices shared with the kernel's packed-scene layout
_I_BGMODE = 6
_I_CUBERES = 7
_D_BGR = 8

BG_DISABLED = 0
BG_CONSTANT = 1
BG_CUBEMAP = 2


def _scratch():
    return np.zeros((1, 48), dtype=np.float64)


@dataclass(frozen=True)
class AreaLight:
    """One-sided rectangle light (emits from the edge_u x edge_v side)."""

    center: tuple[float, float, float]
    edge_u: tuple[float, float, float]
    edge_v: tuple[float, float, float]
    radiance: tuple[float, float, float] = (1.0, 1.0, 1.0)
    enabled: bool = True

    def __post_init__(self):
        for name in ("center", "edge_u", "edge_v", "radiance"):
            object.__setattr__(
                self, name, tuple(float(x) for x in getattr(self, name))
            )
        if any(c < 0 for c in self.radiance):
            raise InvalidArgument(f"radiance {self.radiance} must be >= 0")
        if self.area() <= 1e-12:
            raise InvalidArgument("degenerate rectangle (edge_u x edge_v ~ 0)")

    def normal(self) -> np.ndarray:
        n = np.cross(self.edge_u, self.edge_v)
        return n / np.linalg.norm(n)

    def area(self) -> float:
        return float(np.linalg.norm(np.cross(self.edge_u, self.edge_v)))


@dataclass(frozen=True)
class Cubemap:
    """Six square HDR faces, shape (6, res, res, 3), non-negative finite."""

    faces: np.ndarray = field(repr=False)

    def __post_init__(self):
        f = np.ascontiguousarray(self.faces, dtype=np.float64)
        if f.ndim != 4 or f.shape[0] != 6 or f.shape[1] != f.shape[2] \
                or f.shape[3] != 3:
            raise IngestError(f"cubemap faces must be (6, n, n, 3), got {f.shape}")
        if not np.isfinite(f).all():
            raise IngestError("cubemap contains NaN/Inf texels")
        if f.min() < 0:
            raise IngestError("cubemap contains negative texels")
        f.flags.writeable = False
        object.__setattr__(self, "faces", f)

    @property
    def resolution(self) -> int:
        return int(self.faces.shape[1])


@dataclass(frozen=True)
class BackgroundLight:
    """Environment light: constant color or cubemap IBL."""

    mode: str = "constant"  # "constant" | "cubemap"
    color: tuple[float, float, float] = (1.0, 1.0, 1.0)
    cubemap: Cubemap | None = None
    intensity_scale: float = 1.0
    enabled: bool = True

    def __post_init__(self):
        if self.mode not in ("constant", "cubemap"):
            raise InvalidArgument(f"background mode {self.mode!r}")
        object.__setattr__(
            self, "color", tuple(float(c) for c in self.color)
        )
        if any(c < 0 for c in self.color):
            raise InvalidArgument(f"background color {self.color} must be >= 0")
        if self.intensity_scale < 0:
            raise InvalidArgument("intensity_scale must be >= 0")
        if self.mode == "cubemap" and self.cubemap is None:
            raise InvalidArgument("cubemap mode requires a cubemap")


@dataclass(frozen=True)
class LightSample:
    wi: np.ndarray = field(repr=False)
    distance: float  # mm; inf for background
    radiance: np.ndarray = field(repr=False)
    pdf: float  # per steradian


# --- cubemap loading ---------------------------------------------------------

def _srgb_to_linear(c: np.ndarray) -> np.ndarray:
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _load_face(path: str) -> np.ndarray:
    if path.lower().endswith(".pfm"):
        return np.asarray(load_pfm(path), dtype=np.float64)
    from PIL import Image

    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    return _srgb_to_linear(arr)


def load_cubemap(paths) -> Cubemap:
    """Load six faces (PFM linear or PNG sRGB-decoded).

    ``paths`` is a mapping with keys posx..negz, a 6-sequence in face
    order, or a directory containing files named by face.
    """
    if isinstance(paths, (str, os.PathLike)):
        directory = str(paths)
        resolved = []
        for name in FACE_NAMES:
            matches = [
                os.path.join(directory, f)
                for f in sorted(os.listdir(directory))
                if f.rsplit(".", 1)[0] == name
            ]
            if not matches:
                raise IngestError(f"{directory}: missing cubemap face {name!r}")
            resolved.append(matches[0])
    elif isinstance(paths, dict):
        missing = [n for n in FACE_NAMES if n not in paths]
        if missing:
            raise IngestError(f"missing cubemap faces {missing}")
        resolved = [str(paths[n]) for n in FACE_NAMES]
    else:
        resolved = [str(p) for p in paths]
        if len(resolved) != 6:
            raise IngestError(f"need 6 cubemap faces, got {len(resolved)}")
    faces = [_load_face(p) for p in resolved]
    sizes = {f.shape for f in faces}
    if len(sizes) != 1:
        raise IngestError(f"cubemap faces have mismatched sizes: {sorted(sizes)}")
    return Cubemap(np.stack(faces))


# --- texel geometry and sampling distribution --------------------------------

def _area_elem(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # solid angle of the face region [-1,x] x [-1,y] via the corner formula
    return np.arctan2(x * y, np.sqrt(x * x + y * y + 1.0))


def texel_solid_angles(res: int) -> np.ndarray:
    """Solid angle of each texel on one face, shape (res, res); sums to
    4*pi/6 per face."""
    edges = 2.0 * np.arange(res + 1) / res - 1.0
    gx, gy = np.meshgrid(edges, edges, indexing="xy")
    a = _area_elem(gx, gy)
    return a[1:, 1:] - a[:-1, 1:] - a[1:, :-1] + a[:-1, :-1]


def build_distribution(cube: Cubemap, intensity_scale: float = 1.0):
    """Packed arrays for kernel sampling: (texels, pdf, cdf).

    texels: (6*res*res, 3) scaled radiance, row-major per face (v-major).
    pdf: per-texel solid-angle pdf of the luminance-weighted draw.
    cdf: cumulative (unnormalized) texel weights for inversion.
    """
    res = cube.resolution
    texels = (cube.faces * intensity_scale).reshape(6 * res * res, 3)
    texels = np.ascontiguousarray(texels)
    sa = np.tile(texel_solid_angles(res).reshape(-1), 6)
    lum = texels @ np.array([0.2126, 0.7152, 0.0722])
    weights = lum * sa
    total = weights.sum()
    pdf = np.zeros_like(weights)
    if total > 0:
        pdf = (weights / total) / sa
    cdf = np.cumsum(weights)
    return texels, np.ascontiguousarray(pdf), np.ascontiguousarray(cdf)


def pack_background(b: BackgroundLight):
    """Kernel-layout arrays (I, D, texels, pdf, cdf) for the background."""
    I = np.zeros(32, dtype=np.int64)
    D = np.zeros(64, dtype=np.float64)
    if not b.enabled:
        texels = np.zeros((1, 3))
        return I, D, texels, np.zeros(1), np.zeros(1)
    if b.mode == "constant":
        I[_I_BGMODE] = BG_CONSTANT
        D[_D_BGR:_D_BGR + 3] = np.asarray(b.color) * b.intensity_scale
        texels = np.zeros((1, 3))
        return I, D, texels, np.zeros(1), np.zeros(1)
    I[_I_BGMODE] = BG_CUBEMAP
    I[_I_CUBERES] = b.cubemap.resolution
    texels, pdf, cdf = build_distribution(b.cubemap, b.intensity_scale)
    return I, D, texels, pdf, cdf


def pack_area_lights(lights) -> np.ndarray:
    """(n, 12) rows: center, edge_u, edge_v, radiance; disabled skipped."""
    rows = [
        np.concatenate([l.center, l.edge_u, l.edge_v, l.radiance])
        for l in lights
        if l.enabled
    ]
    if not rows:
        return np.zeros((0, 12), dtype=np.float64)
    return np.ascontiguousarray(np.stack(rows), dtype=np.float64)


# --- sampling / evaluation ---------------------------------------------------

def sample_area_light(l: AreaLight, x, u) -> LightSample | None:
    """Uniform rectangle sample toward ``x``; None when behind/degenerate."""
    if not l.enabled:
        return None
    rows = pack_area_lights([l])
    wrk = _scratch()
    out = _k.area_light_sample_one(
        rows, 0, np.asarray(x, dtype=np.float64), float(u[0]), float(u[1]),
        wrk,
    )
    if out is None:
        return None
    wi, rad, dist, pdf = out
    return LightSample(
        np.asarray(wi), float(dist), np.asarray(rad, dtype=np.float64),
        float(pdf),
    )


def eval_background(b: BackgroundLight, direction) -> np.ndarray:
    """Environment radiance along a direction (zero when disabled)."""
    I, D, texels, pdf, cdf = pack_background(b)
    wrk = _scratch()
    d = np.asarray(direction, dtype=np.float64)
    d = d / np.linalg.norm(d)
    out = _k.bg_eval_one(texels, I, D, d, wrk)
    return np.asarray(out, dtype=np.float64)


def sample_background(b: BackgroundLight, u) -> LightSample:
    """Sample an environment direction for next-event estimation.

    ``u`` supplies 2 uniforms (constant mode) or 3 (cubemap mode: texel
    selection plus in-texel jitter; a 2-vector uses a centered jitter).
    """
    if not b.enabled:
        raise NoEnergy("background light is disabled")
    I, D, texels, pdf, cdf = pack_background(b)
    u3 = float(u[2]) if len(u) > 2 else 0.5
    wrk = _scratch()
    out = _k.bg_sample_one(
        texels, pdf, cdf, I, D, float(u[0]), float(u[1]), u3, wrk
    )
    if out is None:
        raise NoEnergy("environment has no energy (all-black cubemap)")
    wi, rad, p = out
    return LightSample(
        np.asarray(wi), math.inf, np.asarray(rad, dtype=np.float64), float(p)
    )


def pdf_background(b: BackgroundLight, direction) -> float:
    """Solid-angle pdf of sample_background for a direction."""
    if not b.enabled:
        return 0.0
    I, D, texels, pdf, cdf = pack_background(b)
    wrk = _scratch()
    d = np.asarray(direction, dtype=np.float64)
    d = d / np.linalg.norm(d)
    return float(_k.bg_pdf_one(pdf, I, d, wrk))


def environment_power(b: BackgroundLight) -> np.ndarray:
    """Integral of environment radiance over the sphere (per channel)."""
    if not b.enabled:
        return np.zeros(3)
    if b.mode == "constant":
        return 4.0 * math.pi * np.asarray(b.color) * b.intensity_scale
    texels, _, _ = build_distribution(b.cubemap, b.intensity_scale)
    res = b.cubemap.resolution
    sa = np.tile(texel_solid_angles(res).reshape(-1), 6)
    return texels.T @ sa


def make_gradient_sky(res: int = 16, horizon=(0.8, 0.7, 0.6),
                      zenith=(0.3, 0.5, 0.9), sun_dir=(0.4, 0.8, 0.3),
                      sun_intensity: float = 20.0,
                      sun_sharpness: float = 80.0) -> Cubemap:
    """Procedural sky cubemap (HDRI stand-in): vertical gradient plus a
    bright sun lobe, smooth across face seams."""
    sun = np.asarray(sun_dir, dtype=np.float64)
    sun = sun / np.linalg.norm(sun)
    wrk = _scratch()
    faces = np.empty((6, res, res, 3), dtype=np.float64)
    horizon = np.asarray(horizon, dtype=np.float64)
    zenith = np.asarray(zenith, dtype=np.float64)
    for face in range(6):
        for tj in range(res):
            for ti in range(res):
                d = np.asarray(_k.cube_face_uv_to_dir(
                    face, (ti + 0.5) / res, (tj + 0.5) / res, wrk
                ))
                t = 0.5 * (d[1] + 1.0)
                col = (1 - t) * horizon + t * zenith
                col = col + sun_intensity * np.exp(
                    sun_sharpness * (float(d @ sun) - 1.0)
                )
                faces[face, tj, ti] = col
    return Cubemap(faces)

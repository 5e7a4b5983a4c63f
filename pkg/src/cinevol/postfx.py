"""Post effects: tone mapping to display bytes and screen-space ambient
occlusion from the tracer's first-hit depth/normal buffers.

Pipeline: mean radiance -> (optional) SSAO multiply -> exposure ->
Reinhard x/(1+x) -> sRGB encode -> 8-bit PNG.  Everything here is
deterministic (fixed sample patterns).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from cinevol.errors import InvalidArgument
from cinevol.tracer import BIG, Framebuffer


@dataclass(frozen=True)
class LdrImage:
    width: int
    height: int
    rgb8: np.ndarray = field(repr=False)  # (h, w, 3) uint8

    def __post_init__(self):
        a = np.ascontiguousarray(self.rgb8, dtype=np.uint8)
        if a.shape != (self.height, self.width, 3):
            raise InvalidArgument(
                f"rgb8 shape {a.shape} != ({self.height}, {self.width}, 3)"
            )
        object.__setattr__(self, "rgb8", a)


@dataclass(frozen=True)
class SsaoParams:
    radius: float = 8.0  # mm
    sample_count: int = 16
    strength: float = 0.7

    def __post_init__(self):
        if self.radius <= 0:
            raise InvalidArgument("ssao radius must be > 0")
        if self.sample_count < 4:
            raise InvalidArgument("ssao sample_count must be >= 4")
        if not (0.0 <= self.strength <= 1.0):
            raise InvalidArgument("ssao strength must be in [0, 1]")


def srgb_encode(linear: np.ndarray) -> np.ndarray:
    """Linear [0, 1] -> sRGB [0, 1]."""
    linear = np.clip(linear, 0.0, 1.0)
    return np.where(
        linear <= 0.0031308,
        12.92 * linear,
        1.055 * np.power(linear, 1.0 / 2.4) - 0.055,
    )


def tone_map_array(hdr: np.ndarray, exposure: float = 1.0) -> LdrImage:
    """Reinhard + sRGB encode an (h, w, 3) radiance array."""
    hdr = np.asarray(hdr, dtype=np.float64)
    x = np.clip(hdr, 0.0, None) * exposure
    mapped = x / (1.0 + x)
    bytes8 = np.round(srgb_encode(mapped) * 255.0).astype(np.uint8)
    return LdrImage(hdr.shape[1], hdr.shape[0], bytes8)


def tone_map(fb: Framebuffer, exposure: float = 1.0) -> LdrImage:
    """Tone-map a framebuffer's mean radiance (requires >= 1 pass)."""
    if fb.iteration_count == 0:
        raise InvalidArgument("tone_map requires at least one completed pass")
    return tone_map_array(fb.mean_radiance(), exposure)


# --- SSAO --------------------------------------------------------------------

def _hammersley(n: int) -> np.ndarray:
    """First n points of the (k/n, radical-inverse-2) sequence."""
    pts = np.empty((n, 2))
    for k in range(n):
        x, f, i = 0.0, 0.5, k
        while i > 0:
            if i & 1:
                x += f
            f *= 0.5
            i >>= 1
        pts[k] = ((k + 0.5) / n, x)
    return pts


def _view_rays(width, height, tan_x, tan_y, ortho):
    px = (np.arange(width) + 0.5) / width * 2.0 - 1.0
    py = 1.0 - (np.arange(height) + 0.5) / height * 2.0
    sx, sy = np.meshgrid(px * tan_x, py * tan_y)
    if ortho:
        d = np.stack([np.zeros_like(sx), np.zeros_like(sx),
                      -np.ones_like(sx)], axis=-1)
        o = np.stack([sx, sy, np.zeros_like(sx)], axis=-1)
    else:
        d = np.stack([sx, sy, -np.ones_like(sx)], axis=-1)
        d = d / np.linalg.norm(d, axis=-1, keepdims=True)
        o = np.zeros_like(d)
    return o, d


def compute_ssao(fb: Framebuffer, params: SsaoParams) -> np.ndarray:
    """Per-pixel ambient visibility in [0, 1] (1 = unoccluded).

    View-space positions are reconstructed from the first-hit depth
    buffer; a fixed low-discrepancy set of hemisphere offsets around the
    first-hit normal is depth-tested against the buffer.
    """
    if fb.aux_depth is None or fb.aux_normal is None:
        raise InvalidArgument("SSAO requires aux depth/normal buffers")
    h, w = fb.height, fb.width
    tan_x, tan_y, ortho = fb.proj
    depth = fb.aux_depth
    normal = getattr(fb, "aux_normal_view", fb.aux_normal)
    hit = depth < BIG

    origin, vdir = _view_rays(w, h, tan_x, tan_y, ortho)
    pos = origin + depth[..., None] * vdir  # view-space first hits
    surf_z = pos[..., 2]

    # hemisphere offsets (cosine-ish) in the normal's local frame
    uv = _hammersley(params.sample_count)
    occluded = np.zeros((h, w))
    n = normal / np.maximum(np.linalg.norm(normal, axis=-1, keepdims=True),
                            1e-9)
    # per-pixel tangent frame
    helper = np.where(np.abs(n[..., 2:3]) < 0.9,
                      np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]))
    t = np.cross(helper, n)
    t = t / np.maximum(np.linalg.norm(t, axis=-1, keepdims=True), 1e-9)
    b = np.cross(n, t)
    bias = 0.02 * params.radius
    for k in range(params.sample_count):
        u1, u2 = uv[k]
        r = math.sqrt(u1)
        phi = 2.0 * math.pi * u2
        local = np.array([r * math.cos(phi), r * math.sin(phi),
                          math.sqrt(max(0.0, 1.0 - u1))])
        scale = params.radius * (0.25 + 0.75 * (k + 0.5)
                                 / params.sample_count)
        off = (local[0] * t + local[1] * b + local[2] * n) * scale
        q = pos + off
        qz = q[..., 2]
        if ortho:
            qx, qy = q[..., 0], q[..., 1]
        else:
            denom = np.maximum(-qz, 1e-9)
            qx = q[..., 0] / denom * 1.0
            qy = q[..., 1] / denom * 1.0
        ui = np.clip(((qx / tan_x + 1.0) * 0.5 * w).astype(np.int64),
                     0, w - 1)
        vi = np.clip(((1.0 - (qy / tan_y + 1.0) * 0.5) * h).astype(np.int64),
                     0, h - 1)
        sd = depth[vi, ui]
        svz = (origin[vi, ui] + sd[..., None] * vdir[vi, ui])[..., 2]
        valid = sd < BIG
        # surface in front of the sample point, within range
        occ = valid & (svz >= qz + bias) \
            & (np.abs(svz - surf_z) < 2.0 * params.radius)
        occluded += occ.astype(np.float64)
    occluded /= params.sample_count
    out = 1.0 - params.strength * occluded
    out[~hit] = 1.0
    return out


def apply_ssao(hdr: np.ndarray, occlusion: np.ndarray) -> np.ndarray:
    """Multiply pre-tonemap radiance by the occlusion map."""
    hdr = np.asarray(hdr, dtype=np.float64)
    occlusion = np.asarray(occlusion, dtype=np.float64)
    if hdr.shape[:2] != occlusion.shape:
        raise InvalidArgument(
            f"occlusion {occlusion.shape} does not match image {hdr.shape[:2]}"
        )
    return hdr * occlusion[..., None]


def render_to_ldr(fb: Framebuffer, exposure: float = 1.0,
                  ssao: SsaoParams | None = None) -> LdrImage:
    """The standard display pipeline shared by the CLI and the service."""
    hdr = fb.mean_radiance()
    if ssao is not None:
        hdr = apply_ssao(hdr, compute_ssao(fb, ssao))
    return tone_map_array(hdr, exposure)


# --- encoding ----------------------------------------------------------------

def png_bytes(img: LdrImage) -> bytes:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(img.rgb8, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def save_png(img: LdrImage, path) -> None:
    with open(str(path), "wb") as fh:
        fh.write(png_bytes(img))

"""Progressive Monte Carlo volumetric path tracer.

This module packs a Scene into the flat arrays the render kernel
consumes, owns the Framebuffer accumulation contract, and exposes the
single-ray estimators (transmittance, free flight, path trace) used by
the test suites.

Determinism: every random decision comes from a counter-based stream
keyed by (seed, pixel index, pass index), so render output is a pure
function of (scene, settings) regardless of thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from cinevol import classify, edit, lighting
from cinevol.errors import InvalidArgument
from cinevol.kernel import impl as _k
from cinevol.scene import Scene

CELL = 8  # majorant macro-cell size in voxels
BIG = 1e30

# packed-array slot indices (kernel layout)
_I_NX, _I_NY, _I_NZ, _I_LUTN = 0, 1, 2, 3
_I_NCLIP, _I_NLIGHT, _I_BGMODE, _I_CUBERES = 4, 5, 6, 7
_I_MAXB, _I_W, _I_H, _I_ORTHO = 8, 9, 10, 11
_I_HASCUT, _I_CX, _I_CY, _I_CZ, _I_WRITEAUX = 12, 13, 14, 15, 16
_D_SPACING, _D_ORIGIN, _D_LUTLO, _D_LUTHI, _D_BGR = 0, 3, 6, 7, 8
_D_GMIN, _D_CPOS, _D_CRIGHT, _D_CUP, _D_CFWD = 12, 13, 16, 19, 22
_D_TANX, _D_TANY, _D_MET, _D_ROUGH, _D_SPEC = 25, 26, 27, 28, 29
_D_ALO, _D_AHI, _D_CELLSZ = 30, 33, 36


@dataclass(frozen=True)
class Ray:
    origin: tuple[float, float, float]
    dir: tuple[float, float, float]
    t_min: float = 0.0
    t_max: float = math.inf

    def __post_init__(self):
        d = np.asarray(self.dir, dtype=np.float64)
        n = np.linalg.norm(d)
        if abs(n - 1.0) > 1e-6:
            raise InvalidArgument(f"ray direction norm {n} != 1")
        if self.t_min > self.t_max:
            raise InvalidArgument("t_min > t_max")
        object.__setattr__(self, "origin",
                           tuple(float(x) for x in self.origin))
        object.__setattr__(self, "dir", tuple(float(x) for x in d))


@dataclass(frozen=True)
class RenderSettings:
    width: int = 256
    height: int = 256
    iterations: int = 16
    max_bounces: int = 8
    seed: int = 0
    density_scale: float = 1.0
    g_min: float = 10.0  # HU/mm surface-shading gradient threshold

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InvalidArgument("width and height must be >= 1")
        if self.iterations < 1:
            raise InvalidArgument("iterations must be >= 1")
        if self.max_bounces < 1:
            raise InvalidArgument("max_bounces must be >= 1")
        if self.density_scale <= 0:
            raise InvalidArgument("density_scale must be > 0")


class Framebuffer:
    """HDR accumulation plus first-hit depth/normal aux buffers."""

    def __init__(self, width: int, height: int):
        self.width = int(width)
        self.height = int(height)
        self.accum = np.zeros((height, width, 3), dtype=np.float64)
        self.aux_depth = np.full((height, width), BIG, dtype=np.float64)
        self.aux_normal = np.zeros((height, width, 3), dtype=np.float64)
        self.iteration_count = 0
        self.nan_count = 0
        # (tan_x, tan_y, ortho) of the producing camera, for SSAO
        self.proj = (1.0, 1.0, False)

    def mean_radiance(self) -> np.ndarray:
        if self.iteration_count == 0:
            raise InvalidArgument("no completed passes")
        return self.accum / self.iteration_count

    def hit_mask(self) -> np.ndarray:
        """Pixels whose camera ray had a real first interaction."""
        return self.aux_depth < BIG


@dataclass
class PackedScene:
    """Scene flattened into the kernel's array layout."""

    I: np.ndarray
    D: np.ndarray
    vol: np.ndarray
    cut: np.ndarray
    lut: np.ndarray
    clips: np.ndarray
    lights: np.ndarray
    cube: np.ndarray
    cube_pdf: np.ndarray
    cube_cdf: np.ndarray
    maj: np.ndarray  # internal tracking majorant, flattened cell grid
    lut_obj: classify.Lut = field(repr=False)
    cut_mask: np.ndarray = field(repr=False)

    def track_args(self):
        return (self.vol, self.cut, self.lut, self.clips, self.maj,
                self.I, self.D)

    def path_args(self):
        return (self.vol, self.cut, self.lut, self.clips, self.lights,
                self.cube, self.cube_pdf, self.cube_cdf, self.maj,
                self.I, self.D)


def _lut_index(values: np.ndarray, domain, n: int) -> np.ndarray:
    lo, hi = domain
    t = (np.asarray(values, dtype=np.float64) - lo) / (hi - lo)
    return np.clip(np.floor(t * (n - 1) + 0.5), 0, n - 1).astype(np.int64)


def _tracking_majorant(grid_values: np.ndarray, cut_mask: np.ndarray,
                       sigma_lut: np.ndarray, domain) -> tuple[np.ndarray, tuple]:
    """Conservative per-cell majorant for delta/ratio tracking.

    Each cell takes the HU min/max over its voxels plus a 1-voxel halo
    (covering trilinear support and nearest-voxel cut lookups), then the
    maximum LUT extinction over that HU index range.  Cells whose halo
    is entirely cut are zero.
    """
    nz, ny, nx = grid_values.shape
    n = sigma_lut.shape[0]
    ncx = max(1, math.ceil(max(nx - 1, 1) / CELL))
    ncy = max(1, math.ceil(max(ny - 1, 1) / CELL))
    ncz = max(1, math.ceil(max(nz - 1, 1) / CELL))
    maj = np.zeros((ncz, ncy, ncx), dtype=np.float64)
    for kz in range(ncz):
        z0, z1 = max(0, kz * CELL - 1), min(nz, (kz + 1) * CELL + 2)
        for ky in range(ncy):
            y0, y1 = max(0, ky * CELL - 1), min(ny, (ky + 1) * CELL + 2)
            for kx in range(ncx):
                x0, x1 = max(0, kx * CELL - 1), min(nx, (kx + 1) * CELL + 2)
                block = grid_values[z0:z1, y0:y1, x0:x1]
                if cut_mask is not None \
                        and cut_mask[z0:z1, y0:y1, x0:x1].all():
                    continue
                ilo = int(_lut_index(block.min(), domain, n))
                ihi = int(_lut_index(block.max(), domain, n))
                maj[kz, ky, kx] = sigma_lut[ilo:ihi + 1].max()
    return np.ascontiguousarray(maj.reshape(-1)), (ncx, ncy, ncz)


def precompute_majorant(scene: Scene,
                        settings: RenderSettings | None = None) -> np.ndarray:
    """Per-macro-cell (8^3 voxels) maxima of the classified per-voxel
    extinction, with cut voxels at zero.  Shape (ncz, ncy, ncx)."""
    settings = settings or scene.settings
    lut = classify.build_lut(scene.tf)
    sigma_lut = -np.log(1.0 - np.minimum(lut.entries[:, 3],
                                         classify.ALPHA_CAP))
    sigma_lut = sigma_lut * settings.density_scale
    idx = _lut_index(scene.grid.values, lut.domain, lut.entries.shape[0])
    sigma_vox = sigma_lut[idx]
    if scene.cut_ops:
        sigma_vox = np.where(edit.apply_cut_ops(scene.grid, scene.cut_ops),
                             0.0, sigma_vox)
    nz, ny, nx = sigma_vox.shape
    ncx, ncy, ncz = (math.ceil(nx / CELL), math.ceil(ny / CELL),
                     math.ceil(nz / CELL))
    out = np.zeros((ncz, ncy, ncx), dtype=np.float64)
    for kz in range(ncz):
        for ky in range(ncy):
            for kx in range(ncx):
                out[kz, ky, kx] = sigma_vox[
                    kz * CELL:(kz + 1) * CELL,
                    ky * CELL:(ky + 1) * CELL,
                    kx * CELL:(kx + 1) * CELL,
                ].max()
    return out


def pack_scene(scene: Scene, settings: RenderSettings | None = None,
               write_aux: bool = False) -> PackedScene:
    settings = settings or scene.settings
    grid = scene.grid
    nx, ny, nz = grid.dims

    lut_obj = classify.build_lut(scene.tf)
    n_lut = lut_obj.entries.shape[0]
    sigma_lut = -np.log(1.0 - np.minimum(lut_obj.entries[:, 3],
                                         classify.ALPHA_CAP))
    sigma_lut = sigma_lut * settings.density_scale
    lut = np.empty((n_lut, 4), dtype=np.float64)
    lut[:, :3] = lut_obj.entries[:, :3]
    lut[:, 3] = sigma_lut
    lut = np.ascontiguousarray(lut)

    if scene.cut_ops:
        cut_mask = edit.apply_cut_ops(grid, scene.cut_ops)
        cut = np.ascontiguousarray(cut_mask.reshape(-1).astype(np.uint8))
        has_cut = 1
    else:
        cut_mask = None
        cut = np.zeros(1, dtype=np.uint8)
        has_cut = 0

    maj, (ncx, ncy, ncz) = _tracking_majorant(
        grid.values, cut_mask, sigma_lut, lut_obj.domain
    )

    clips = edit.pack_clip_planes(scene.clip_planes)
    lights = lighting.pack_area_lights(scene.area_lights)
    bg_i, bg_d, cube, cube_pdf, cube_cdf = lighting.pack_background(
        scene.background
    )

    I = np.zeros(32, dtype=np.int64)
    D = np.zeros(64, dtype=np.float64)
    I[_I_NX], I[_I_NY], I[_I_NZ] = nx, ny, nz
    I[_I_LUTN] = n_lut
    I[_I_NCLIP] = clips.shape[0]
    I[_I_NLIGHT] = lights.shape[0]
    I[_I_BGMODE] = bg_i[_I_BGMODE]
    I[_I_CUBERES] = bg_i[_I_CUBERES]
    I[_I_MAXB] = settings.max_bounces
    I[_I_W], I[_I_H] = settings.width, settings.height
    I[_I_HASCUT] = has_cut
    I[_I_CX], I[_I_CY], I[_I_CZ] = ncx, ncy, ncz
    I[_I_WRITEAUX] = 1 if write_aux else 0

    D[_D_SPACING:_D_SPACING + 3] = grid.spacing
    D[_D_ORIGIN:_D_ORIGIN + 3] = grid.origin
    D[_D_LUTLO], D[_D_LUTHI] = lut_obj.domain
    D[_D_BGR:_D_BGR + 3] = bg_d[_D_BGR:_D_BGR + 3]
    D[_D_GMIN] = settings.g_min
    D[_D_MET] = scene.material.metallic
    D[_D_ROUGH] = scene.material.roughness
    D[_D_SPEC] = scene.material.specular
    # the medium occupies the voxel-center bounding box
    D[_D_ALO:_D_ALO + 3] = grid.origin
    D[_D_AHI:_D_AHI + 3] = (np.asarray(grid.origin)
                            + (np.asarray(grid.dims) - 1)
                            * np.asarray(grid.spacing))
    D[_D_CELLSZ:_D_CELLSZ + 3] = CELL * np.asarray(grid.spacing)

    pos, right, up, fwd, tan_x, tan_y = scene.camera.basis(
        settings.width, settings.height
    )
    D[_D_CPOS:_D_CPOS + 3] = pos
    D[_D_CRIGHT:_D_CRIGHT + 3] = right
    D[_D_CUP:_D_CUP + 3] = up
    D[_D_CFWD:_D_CFWD + 3] = fwd
    D[_D_TANX], D[_D_TANY] = tan_x, tan_y
    I[_I_ORTHO] = 1 if scene.camera.projection == "orthographic" else 0

    return PackedScene(
        I=I, D=D,
        vol=grid.flat.astype(np.float32),  # writable copy for the kernel
        cut=cut, lut=lut, clips=clips, lights=lights,
        cube=cube, cube_pdf=cube_pdf, cube_cdf=cube_cdf, maj=maj,
        lut_obj=lut_obj, cut_mask=cut_mask,
    )


# --- single-ray estimators ---------------------------------------------------

@dataclass(frozen=True)
class Interaction:
    position: np.ndarray = field(repr=False)
    t: float
    color: tuple[float, float, float]
    gradient: np.ndarray = field(repr=False)
    gradient_magnitude: float


def _scratch(rows: int = 1):
    return (np.zeros((rows, 48), dtype=np.float64),
            np.zeros((rows, 2), dtype=np.int64))


def estimate_transmittance(x, y, scene_or_packed, n: int = 1,
                           seed: int = 0) -> np.ndarray:
    """``n`` independent ratio-tracking transmittance estimates x -> y."""
    ps = _as_packed(scene_or_packed)
    out = np.zeros(n, dtype=np.float64)
    wrk, ctr = _scratch()
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _k.transmittance_batch(out, *ps.track_args(), x[0], x[1], x[2],
                           y[0], y[1], y[2], int(seed), wrk, ctr)
    return out


def transmittance(x, y, scene_or_packed, seed: int = 0) -> float:
    """One unbiased transmittance estimate along the segment x -> y."""
    return float(estimate_transmittance(x, y, scene_or_packed, 1, seed)[0])


def free_flight_distances(ray: Ray, scene_or_packed, n: int = 1,
                          seed: int = 0) -> np.ndarray:
    """``n`` delta-tracking collision distances; -1 where the ray escapes."""
    ps = _as_packed(scene_or_packed)
    out = np.zeros(n, dtype=np.float64)
    wrk, ctr = _scratch()
    _k.free_flight_batch(out, *ps.track_args(), *ray.origin, *ray.dir,
                         int(seed), wrk, ctr)
    return out


def sample_free_flight(ray: Ray, scene_or_packed, seed: int = 0,
                       sample_index: int = 0) -> Interaction | None:
    """Sample one real collision along the ray; None when it escapes."""
    ps = _as_packed(scene_or_packed)
    out = np.zeros(sample_index + 1, dtype=np.float64)
    wrk, ctr = _scratch()
    _k.free_flight_batch(out, *ps.track_args(), *ray.origin, *ray.dir,
                         int(seed), wrk, ctr)
    t = float(out[sample_index])
    if t < 0:
        return None
    p = np.asarray(ray.origin) + t * np.asarray(ray.dir)
    hu = _k.sample_hu_one(ps.vol, ps.I, ps.D, p[0], p[1], p[2])
    idx = int(_lut_index(hu, ps.lut_obj.domain, ps.lut.shape[0]))
    gx, gy, gz, gmag = _k.gradient_one(ps.vol, ps.I, ps.D,
                                       p[0], p[1], p[2], wrk)
    return Interaction(
        position=p, t=t, color=tuple(ps.lut[idx, :3]),
        gradient=np.array([gx, gy, gz]), gradient_magnitude=float(gmag),
    )


def trace_path(ray: Ray, scene_or_packed, seed: int = 0,
               sample_index: int = 0) -> np.ndarray:
    """One path-traced radiance estimate for the given camera ray."""
    ps = _as_packed(scene_or_packed)
    wrk, ctr = _scratch()
    r, g, b, _t = _k.trace_path_one(*ps.path_args(), *ray.origin, *ray.dir,
                                    int(seed), int(sample_index), wrk, ctr)
    return np.array([r, g, b])


def _as_packed(scene_or_packed) -> PackedScene:
    if isinstance(scene_or_packed, PackedScene):
        return scene_or_packed
    return pack_scene(scene_or_packed)


# --- progressive rendering ---------------------------------------------------

def render(scene: Scene, settings: RenderSettings | None = None,
           fb: Framebuffer | None = None, threads: int = 1) -> Framebuffer:
    """Run ``settings.iterations`` full-frame passes, accumulating into
    ``fb`` (created fresh when None).  Output is identical for any
    ``threads`` value."""
    settings = settings or scene.settings
    if threads < 1:
        raise InvalidArgument("threads must be >= 1")
    if fb is None:
        fb = Framebuffer(settings.width, settings.height)
    elif (fb.width, fb.height) != (settings.width, settings.height):
        raise InvalidArgument(
            f"framebuffer {fb.width}x{fb.height} does not match settings "
            f"{settings.width}x{settings.height}"
        )
    ps = pack_scene(scene, settings)
    fb.proj = (float(ps.D[_D_TANX]), float(ps.D[_D_TANY]),
               bool(ps.I[_I_ORTHO]))
    h = settings.height
    wrk, ctr = _scratch(h)
    diag = np.zeros(h, dtype=np.int64)
    for _ in range(settings.iterations):
        ps.I[_I_WRITEAUX] = 1 if fb.iteration_count == 0 else 0
        _k.render_pass(
            fb.accum, fb.aux_depth, fb.aux_normal, diag, wrk, ctr,
            ps.vol, ps.cut, ps.lut, ps.clips, ps.lights, ps.cube,
            ps.cube_pdf, ps.cube_cdf, ps.maj, ps.I, ps.D,
            fb.iteration_count, settings.seed, int(threads),
        )
        fb.iteration_count += 1
    fb.nan_count += int(diag.sum())
    # world-space aux normals -> view space for screen-space effects
    if fb.iteration_count > 0 and settings.iterations > 0:
        pos, right, up, fwd, _tx, _ty = scene.camera.basis(
            settings.width, settings.height
        )
        view = np.stack([right, up, -fwd])
        fb.aux_normal_view = fb.aux_normal @ view.T
    return fb

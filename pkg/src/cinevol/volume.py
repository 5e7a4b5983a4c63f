"""CT volumes: loading, synthesis, smoothing, and interpolated sampling.

Conventions
-----------
* ``VoxelGrid.values`` is a float32 array of shape ``(nz, ny, nx)``;
  the flat C-order layout is x-fastest.
* Voxel ``(i, j, k)`` is centered at ``origin + (i*sx, j*sy, k*sz)`` mm.
* Values are Hounsfield units clamped to ``[-1024, 4095]``.
* Sampling outside the voxel-center bounding box returns air (-1024 HU).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from cinevol.errors import IngestError, InvalidArgument, UnsupportedFormat

HU_MIN = -1024.0
HU_MAX = 4095.0
HU_AIR = -1024.0


@dataclass(frozen=True)
class VoxelGrid:
    """A 3D scalar CT field with anisotropic physical spacing."""

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    origin: tuple[float, float, float]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        nx, ny, nz = self.dims
        if nx < 1 or ny < 1 or nz < 1:
            raise InvalidArgument(f"dims must be >= 1, got {self.dims}")
        if any(s <= 0 for s in self.spacing):
            raise InvalidArgument(f"spacing must be > 0, got {self.spacing}")
        vals = np.asarray(self.values, dtype=np.float32)
        if vals.size != nx * ny * nz:
            raise InvalidArgument(
                f"values size {vals.size} != nx*ny*nz = {nx * ny * nz}"
            )
        vals = np.clip(vals.reshape(nz, ny, nx), HU_MIN, HU_MAX)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "dims", (int(nx), int(ny), int(nz)))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))

    @property
    def flat(self) -> np.ndarray:
        """x-fastest flat view of the values."""
        return self.values.reshape(-1)

    def world_center(self) -> np.ndarray:
        """Centroid of the voxel-center bounding box, in mm."""
        lo = np.asarray(self.origin)
        hi = lo + (np.asarray(self.dims) - 1) * np.asarray(self.spacing)
        return 0.5 * (lo + hi)

    def extent_mm(self) -> np.ndarray:
        """Size of the voxel-center bounding box per axis, in mm."""
        return (np.asarray(self.dims) - 1) * np.asarray(self.spacing)


@dataclass(frozen=True)
class SmoothingParams:
    """Gaussian denoising parameters; sigma is in millimeters per axis."""

    sigma: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if isinstance(self.sigma, (int, float)):
            object.__setattr__(self, "sigma", (float(self.sigma),) * 3)
        if any(s < 0 for s in self.sigma):
            raise InvalidArgument(f"sigma must be >= 0, got {self.sigma}")

    def kernel_radius(self, spacing: tuple[float, float, float]) -> tuple[int, int, int]:
        """Per-axis kernel radius in voxels: ceil(3*sigma/spacing)."""
        return tuple(
            int(math.ceil(3.0 * s / sp)) if s > 0 else 0
            for s, sp in zip(self.sigma, spacing)
        )


def gauss_smooth(grid: VoxelGrid, params: SmoothingParams) -> VoxelGrid:
    """Separable Gaussian convolution with clamp-to-edge borders.

    The discretized kernel is renormalized to sum exactly 1, so constant
    regions and the volume mean are preserved.  sigma = 0 is the identity.
    """
    if all(s == 0 for s in params.sigma):
        return grid
    out = grid.values.astype(np.float64)
    radii = params.kernel_radius(grid.spacing)
    # values axes are (z, y, x); params.sigma is (x, y, z)
    for axis_xyz in range(3):
        sigma_mm = params.sigma[axis_xyz]
        radius = radii[axis_xyz]
        if sigma_mm == 0 or radius == 0:
            continue
        sigma_vox = sigma_mm / grid.spacing[axis_xyz]
        x = np.arange(-radius, radius + 1, dtype=np.float64)
        kern = np.exp(-0.5 * (x / sigma_vox) ** 2)
        kern /= kern.sum()
        out = ndimage.correlate1d(out, kern, axis=2 - axis_xyz, mode="nearest")
    return VoxelGrid(grid.dims, grid.spacing, grid.origin, out.astype(np.float32))


def sample_trilinear(grid: VoxelGrid, p) -> float | np.ndarray:
    """Trilinear interpolation at world-space point(s) ``p`` (mm).

    Points outside the voxel-center bounding box return air (-1024).
    Accepts a single (3,) point or an (N, 3) array.
    """
    pts = np.atleast_2d(np.asarray(p, dtype=np.float64))
    nx, ny, nz = grid.dims
    v = (pts - np.asarray(grid.origin)) / np.asarray(grid.spacing)
    inside = np.all((v >= 0.0) & (v <= np.asarray(grid.dims) - 1), axis=1)
    v = np.clip(v, 0.0, np.asarray(grid.dims) - 1.0)
    i0 = np.minimum(v.astype(np.int64), np.asarray(grid.dims) - 2)
    i0 = np.maximum(i0, 0)
    f = v - i0
    x0, y0, z0 = i0[:, 0], i0[:, 1], i0[:, 2]
    fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]
    if nx == 1:
        x0, fx = np.zeros_like(x0), np.zeros_like(fx)
    if ny == 1:
        y0, fy = np.zeros_like(y0), np.zeros_like(fy)
    if nz == 1:
        z0, fz = np.zeros_like(z0), np.zeros_like(fz)
    x1 = np.minimum(x0 + 1, nx - 1)
    y1 = np.minimum(y0 + 1, ny - 1)
    z1 = np.minimum(z0 + 1, nz - 1)
    vals = grid.values.astype(np.float64)
    c000 = vals[z0, y0, x0]
    c100 = vals[z0, y0, x1]
    c010 = vals[z0, y1, x0]
    c110 = vals[z0, y1, x1]
    c001 = vals[z1, y0, x0]
    c101 = vals[z1, y0, x1]
    c011 = vals[z1, y1, x0]
    c111 = vals[z1, y1, x1]
    c00 = c000 * (1 - fx) + c100 * fx
    c10 = c010 * (1 - fx) + c110 * fx
    c01 = c001 * (1 - fx) + c101 * fx
    c11 = c011 * (1 - fx) + c111 * fx
    c0 = c00 * (1 - fy) + c10 * fy
    c1 = c01 * (1 - fy) + c11 * fy
    out = np.where(inside, c0 * (1 - fz) + c1 * fz, HU_AIR)
    if np.asarray(p).ndim == 1:
        return float(out[0])
    return out


def gradient(grid: VoxelGrid, p) -> np.ndarray:
    """Central-difference gradient of the trilinear field, in HU/mm.

    Per-axis step equals the voxel spacing.  Constant regions return the
    zero vector.
    """
    pts = np.atleast_2d(np.asarray(p, dtype=np.float64))
    sp = np.asarray(grid.spacing)
    grads = np.empty_like(pts)
    for axis in range(3):
        step = np.zeros(3)
        step[axis] = sp[axis]
        fp = sample_trilinear(grid, pts + step)
        fm = sample_trilinear(grid, pts - step)
        grads[:, axis] = (np.atleast_1d(fp) - np.atleast_1d(fm)) / (2.0 * sp[axis])
    if np.asarray(p).ndim == 1:
        return grads[0]
    return grads


# --- synthetic phantoms ------------------------------------------------------

PHANTOM_KINDS = ("sphere_shell", "two_chamber", "ramp", "constant", "noise")

_SHELL_HU_INNER = 300.0  # contrast-blood analog
_SHELL_HU_SHELL = 50.0  # myocardium analog
_SHELL_HU_OUTSIDE = -1000.0  # air


def sphere_shell_radii(dims, spacing=(1.0, 1.0, 1.0)) -> tuple[float, float]:
    """(inner, outer) mm radii of the sphere_shell phantom's shell."""
    half = 0.5 * min((n - 1) * s for n, s in zip(dims, spacing))
    return 0.6 * half, 0.8 * half


def make_phantom(kind: str, dims, spacing=(1.0, 1.0, 1.0), *,
                 value: float = 0.0, seed: int = 0) -> VoxelGrid:
    """Deterministic synthetic test volume.

    ``kind`` is one of sphere_shell, two_chamber, ramp, constant, noise;
    the forms ``constant(c)`` and ``noise(seed)`` embed the parameter.
    ``dims`` may be a single int (cubic) or an (nx, ny, nz) triple.
    """
    m = re.fullmatch(r"(\w+)\(([-\d.]+)\)", kind.strip())
    if m:
        kind = m.group(1)
        if kind == "constant":
            value = float(m.group(2))
        elif kind == "noise":
            seed = int(m.group(2))
    if kind not in PHANTOM_KINDS:
        raise InvalidArgument(f"unknown phantom kind {kind!r}")
    if isinstance(dims, int):
        dims = (dims, dims, dims)
    dims = tuple(int(d) for d in dims)
    if kind in ("sphere_shell", "two_chamber", "ramp") and min(dims) < 8:
        raise InvalidArgument(f"{kind} phantom needs dims >= 8, got {dims}")
    nx, ny, nz = dims
    spacing = tuple(float(s) for s in spacing)

    if kind == "constant":
        vals = np.full((nz, ny, nx), value, dtype=np.float32)
    elif kind == "noise":
        rng = np.random.default_rng(seed)
        vals = rng.uniform(-100.0, 100.0, size=(nz, ny, nx)).astype(np.float32)
    elif kind == "ramp":
        vals = np.broadcast_to(
            np.arange(nx, dtype=np.float32), (nz, ny, nx)
        ).copy()
    else:
        i = np.arange(nx)[None, None, :] * spacing[0]
        j = np.arange(ny)[None, :, None] * spacing[1]
        k = np.arange(nz)[:, None, None] * spacing[2]
        cx, cy, cz = [(n - 1) * s * 0.5 for n, s in zip(dims, spacing)]
        r = np.sqrt((i - cx) ** 2 + (j - cy) ** 2 + (k - cz) ** 2)
        r_in, r_out = sphere_shell_radii(dims, spacing)
        if kind == "sphere_shell":
            vals = np.full((nz, ny, nx), _SHELL_HU_OUTSIDE, dtype=np.float32)
            vals[r < r_out] = _SHELL_HU_SHELL
            vals[r < r_in] = _SHELL_HU_INNER
        else:  # two_chamber: shell with two blood-pool cavities
            vals = np.full((nz, ny, nx), _SHELL_HU_OUTSIDE, dtype=np.float32)
            vals[r < r_out] = _SHELL_HU_SHELL
            off = 0.45 * r_in
            for s_ in (-1.0, 1.0):
                rc = np.sqrt(
                    (i - cx - s_ * off) ** 2 + (j - cy) ** 2 + (k - cz) ** 2
                )
                vals[rc < 0.55 * r_in] = _SHELL_HU_INNER
    return VoxelGrid(dims, spacing, (0.0, 0.0, 0.0), vals)


# --- NRRD --------------------------------------------------------------------

_NRRD_TYPES = {
    "float": np.float32,
    "double": np.float64,
    "short": np.int16,
    "signed short": np.int16,
    "unsigned short": np.uint16,
}


def _parse_vector(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.strip().lstrip("(").rstrip(")").split(","))


def load_nrrd(path) -> VoxelGrid:
    """Load a 3D raw-encoded NRRD volume (attached or detached data)."""
    path = str(path)
    with open(path, "rb") as fh:
        blob = fh.read()
    eol = blob.find(b"\n")
    if eol < 0 or not blob[:eol].strip().startswith(b"NRRD"):
        raise IngestError(f"{path}: not a NRRD file")
    fields: dict[str, str] = {}
    pos = eol + 1
    while True:
        eol = blob.find(b"\n", pos)
        if eol < 0:
            raise IngestError(f"{path}: missing header terminator")
        line = blob[pos:eol].decode("ascii", "replace").rstrip("\r")
        pos = eol + 1
        if line == "":
            break
        if line.startswith("#"):
            continue
        if ":" not in line:
            raise IngestError(f"{path}: malformed header line {line!r}")
        key, _, val = line.partition(":")
        fields[key.strip().lower()] = val.strip()

    if fields.get("encoding", "raw") != "raw":
        raise UnsupportedFormat(f"{path}: encoding {fields.get('encoding')!r}")
    if int(fields.get("dimension", "0")) != 3:
        raise IngestError(f"{path}: dimension must be 3")
    type_name = fields.get("type", "")
    if type_name not in _NRRD_TYPES:
        raise UnsupportedFormat(f"{path}: type {type_name!r}")
    dtype = np.dtype(_NRRD_TYPES[type_name])
    sizes = tuple(int(x) for x in fields["sizes"].split())

    spacing = (1.0, 1.0, 1.0)
    if "space directions" in fields:
        dirs = [
            _parse_vector(v)
            for v in re.findall(r"\(([^)]*)\)", fields["space directions"])
        ]
        if len(dirs) != 3:
            raise IngestError(f"{path}: need 3 space directions")
        for axis, d in enumerate(dirs):
            for other in range(3):
                if other != axis and abs(d[other]) > 1e-12:
                    raise IngestError(f"{path}: space directions must be diagonal")
        spacing = tuple(d[axis] for axis, d in enumerate(dirs))
    elif "spacings" in fields:
        spacing = tuple(float(x) for x in fields["spacings"].split())

    origin = (0.0, 0.0, 0.0)
    if "space origin" in fields:
        origin = _parse_vector(fields["space origin"].strip("()"))

    if fields.get("endian", "little") == "big":
        dtype = dtype.newbyteorder(">")

    if "data file" in fields:
        import os

        data_path = os.path.join(os.path.dirname(path), fields["data file"])
        with open(data_path, "rb") as fh:
            raw = fh.read()
    else:
        raw = blob[pos:]

    count = sizes[0] * sizes[1] * sizes[2]
    vals = np.frombuffer(raw, dtype=dtype, count=count)
    if vals.size != count:
        raise IngestError(f"{path}: truncated data ({vals.size} of {count})")
    return VoxelGrid(sizes, spacing, origin, vals.astype(np.float32))


def save_nrrd(grid: VoxelGrid, path) -> None:
    """Write a float32 raw NRRD with attached data (little-endian)."""
    nx, ny, nz = grid.dims
    sx, sy, sz = grid.spacing
    header = (
        "NRRD0004\n"
        "type: float\n"
        "dimension: 3\n"
        f"sizes: {nx} {ny} {nz}\n"
        "encoding: raw\n"
        "endian: little\n"
        f"space directions: ({sx},0,0) (0,{sy},0) (0,0,{sz})\n"
        f"space origin: ({grid.origin[0]},{grid.origin[1]},{grid.origin[2]})\n"
        "\n"
    )
    with open(str(path), "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(grid.values, dtype="<f4").tobytes())


def load_raw(path, dims, spacing, origin=(0.0, 0.0, 0.0),
             dtype="float32") -> VoxelGrid:
    """Load a bare raw file; dims/spacing come from the scene file."""
    vals = np.fromfile(str(path), dtype=np.dtype(dtype))
    return VoxelGrid(tuple(dims), tuple(spacing), tuple(origin), vals)

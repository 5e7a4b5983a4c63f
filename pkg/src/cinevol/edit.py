"""Clip planes and voxel cut regions.

Clipping keeps the half-space {p : p . normal <= offset}; clipped space
is treated as vacuum by the tracer.  Cutting marks voxels as removed via
a boolean mask; regions compose by union and are replayable from an
operation log, so edits stay reversible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cinevol.errors import InvalidArgument
from cinevol.volume import VoxelGrid


@dataclass(frozen=True)
class ClipPlane:
    normal: tuple[float, float, float]
    offset: float
    enabled: bool = True

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64)
        length = np.linalg.norm(n)
        if length < 1e-12:
            raise InvalidArgument("clip plane normal must be nonzero")
        if abs(length - 1.0) > 1e-6:
            n = n / length
        object.__setattr__(self, "normal", tuple(float(x) for x in n))
        object.__setattr__(self, "offset", float(self.offset))


@dataclass(frozen=True)
class CutRegion:
    """Boolean voxel mask, True = removed; shaped like grid.values."""

    mask: np.ndarray = field(repr=False)
    provenance: str = ""

    def __post_init__(self):
        m = np.ascontiguousarray(self.mask, dtype=bool)
        m.flags.writeable = False
        object.__setattr__(self, "mask", m)

    def union(self, other: "CutRegion") -> "CutRegion":
        if self.mask.shape != other.mask.shape:
            raise InvalidArgument("cut regions have mismatched shapes")
        return CutRegion(
            self.mask | other.mask,
            f"{self.provenance} | {other.provenance}".strip(" |"),
        )


def is_clipped(point, clip_planes) -> bool:
    """True iff any enabled plane excludes the point."""
    p = np.asarray(point, dtype=np.float64)
    for plane in clip_planes:
        if plane.enabled and float(p @ np.asarray(plane.normal)) > plane.offset:
            return True
    return False


def pack_clip_planes(clip_planes) -> np.ndarray:
    """(n, 4) rows [nx, ny, nz, offset] for enabled planes."""
    rows = [
        (*plane.normal, plane.offset)
        for plane in clip_planes
        if plane.enabled
    ]
    if not rows:
        return np.zeros((0, 4), dtype=np.float64)
    return np.ascontiguousarray(rows, dtype=np.float64)


def _voxel_centers(grid: VoxelGrid):
    nx, ny, nz = grid.dims
    sx, sy, sz = grid.spacing
    ox, oy, oz = grid.origin
    x = ox + np.arange(nx) * sx
    y = oy + np.arange(ny) * sy
    z = oz + np.arange(nz) * sz
    return x[None, None, :], y[None, :, None], z[:, None, None]


def cut_sphere(grid: VoxelGrid, center, radius: float) -> CutRegion:
    """Remove voxels whose centers lie inside the sphere."""
    if radius <= 0:
        raise InvalidArgument(f"radius must be > 0, got {radius}")
    cx, cy, cz = (float(c) for c in center)
    x, y, z = _voxel_centers(grid)
    mask = (x - cx) ** 2 + (y - cy) ** 2 + (z - cz) ** 2 < radius ** 2
    return CutRegion(mask, f"sphere(({cx},{cy},{cz}), r={radius})")


def cut_threshold(grid: VoxelGrid, hu_min: float, hu_max: float) -> CutRegion:
    """Remove voxels whose HU value lies in [hu_min, hu_max]."""
    if hu_min > hu_max:
        raise InvalidArgument(f"hu_min {hu_min} > hu_max {hu_max}")
    mask = (grid.values >= hu_min) & (grid.values <= hu_max)
    return CutRegion(mask, f"threshold[{hu_min}, {hu_max}]")


def apply_cut_ops(grid: VoxelGrid, ops) -> np.ndarray:
    """Replay an ordered list of cut-op documents into one boolean mask.

    Each op is {"op": "sphere", "center", "radius"} or
    {"op": "threshold", "hu_min", "hu_max"}.
    """
    nz, ny, nx = grid.values.shape
    mask = np.zeros((nz, ny, nx), dtype=bool)
    for op in ops:
        kind = op.get("op")
        if kind == "sphere":
            region = cut_sphere(grid, op["center"], op["radius"])
        elif kind == "threshold":
            region = cut_threshold(grid, op["hu_min"], op["hu_max"])
        else:
            raise InvalidArgument(f"unknown cut op {kind!r}")
        mask |= region.mask
    return mask

"""Minimal DICOM series reader.

Supports single-frame CT slices in Explicit VR Little Endian, uncompressed,
16-bit pixels.  Anything else raises UnsupportedFormat.  This is not a
general DICOM implementation; it reads exactly the tags the renderer needs.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from cinevol.errors import IngestError, UnsupportedFormat
from cinevol.volume import VoxelGrid

EXPLICIT_VR_LE = "1.2.840.10008.1.2.1"

TAG_TRANSFER_SYNTAX = (0x0002, 0x0010)
TAG_ROWS = (0x0028, 0x0010)
TAG_COLUMNS = (0x0028, 0x0011)
TAG_PIXEL_SPACING = (0x0028, 0x0030)
TAG_IMAGE_POSITION = (0x0020, 0x0032)
TAG_BITS_ALLOCATED = (0x0028, 0x0100)
TAG_PIXEL_REPRESENTATION = (0x0028, 0x0103)
TAG_RESCALE_INTERCEPT = (0x0028, 0x1052)
TAG_RESCALE_SLOPE = (0x0028, 0x1053)
TAG_PIXEL_DATA = (0x7FE0, 0x0010)

_LONG_LENGTH_VRS = {b"OB", b"OW", b"OF", b"SQ", b"UT", b"UN"}


def _tag_str(tag: tuple[int, int]) -> str:
    return f"({tag[0]:04X},{tag[1]:04X})"


@dataclass
class _Slice:
    rows: int
    cols: int
    pixel_spacing: tuple[float, float]  # (row, column) mm
    position: tuple[float, float, float]
    slope: float
    intercept: float
    pixels: np.ndarray  # (rows, cols) float64, already rescaled


def _parse_elements(buf: bytes, offset: int, stop_group: int | None = None):
    """Yield (tag, vr, value_bytes) for explicit VR little endian elements."""
    n = len(buf)
    while offset + 8 <= n:
        group, elem = struct.unpack_from("<HH", buf, offset)
        if stop_group is not None and group > stop_group:
            return
        vr = buf[offset + 4:offset + 6]
        if not (vr.isalpha() and vr.isupper()):
            raise UnsupportedFormat(
                f"element {_tag_str((group, elem))} lacks an explicit VR "
                "(implicit VR streams are unsupported)"
            )
        if vr in _LONG_LENGTH_VRS:
            (length,) = struct.unpack_from("<I", buf, offset + 8)
            value_off = offset + 12
        else:
            (length,) = struct.unpack_from("<H", buf, offset + 6)
            value_off = offset + 8
        if length == 0xFFFFFFFF:
            raise UnsupportedFormat(
                f"element {_tag_str((group, elem))} has undefined length "
                "(encapsulated/compressed data is unsupported)"
            )
        if value_off + length > n:
            raise IngestError(
                f"element {_tag_str((group, elem))} overruns the file"
            )
        yield (group, elem), vr, buf[value_off:value_off + length]
        offset = value_off + length


def _read_file(path: str) -> _Slice:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) > 132 and blob[128:132] == b"DICM":
        offset = 132
    elif blob[:4] == b"DICM":
        offset = 4
    else:
        raise IngestError(f"{path}: missing DICM marker")

    elements: dict[tuple[int, int], tuple[bytes, bytes]] = {}
    syntax = None
    for tag, vr, value in _parse_elements(blob, offset):
        if tag == TAG_TRANSFER_SYNTAX:
            syntax = value.decode("ascii").rstrip("\x00 ")
        if tag[0] != 0x0002:
            elements[tag] = (vr, value)
    if syntax is not None and syntax != EXPLICIT_VR_LE:
        raise UnsupportedFormat(
            f"{path}: transfer syntax {syntax} (only Explicit VR Little "
            "Endian uncompressed is supported)"
        )

    def require(tag):
        if tag not in elements:
            raise IngestError(f"{path}: missing required tag {_tag_str(tag)}")
        return elements[tag][1]

    def decimal_list(tag):
        raw = require(tag).decode("ascii").strip("\x00 ")
        return [float(x) for x in raw.split("\\")]

    rows = struct.unpack("<H", require(TAG_ROWS))[0]
    cols = struct.unpack("<H", require(TAG_COLUMNS))[0]
    ps = decimal_list(TAG_PIXEL_SPACING)
    pos = decimal_list(TAG_IMAGE_POSITION)
    slope = decimal_list(TAG_RESCALE_SLOPE)[0]
    intercept = decimal_list(TAG_RESCALE_INTERCEPT)[0]
    if len(ps) != 2 or len(pos) != 3:
        raise IngestError(f"{path}: malformed spacing/position values")

    bits = 16
    if TAG_BITS_ALLOCATED in elements:
        bits = struct.unpack("<H", elements[TAG_BITS_ALLOCATED][1])[0]
    if bits != 16:
        raise UnsupportedFormat(f"{path}: {bits}-bit pixels (need 16)")
    signed = False
    if TAG_PIXEL_REPRESENTATION in elements:
        signed = struct.unpack("<H", elements[TAG_PIXEL_REPRESENTATION][1])[0] == 1

    pixel_bytes = require(TAG_PIXEL_DATA)
    expected = rows * cols * 2
    if len(pixel_bytes) < expected:
        raise IngestError(
            f"{path}: pixel data has {len(pixel_bytes)} bytes, need {expected}"
        )
    dtype = "<i2" if signed else "<u2"
    raw = np.frombuffer(pixel_bytes, dtype=dtype, count=rows * cols)
    pixels = raw.astype(np.float64).reshape(rows, cols) * slope + intercept
    return _Slice(rows, cols, (ps[0], ps[1]), tuple(pos), slope, intercept, pixels)


def load_dicom_series(directory) -> VoxelGrid:
    """Load every DICOM file in ``directory`` as one sorted CT volume.

    Slices are ordered by the z component of Image Position (Patient);
    the result is independent of file naming and listing order.
    """
    directory = str(directory)
    paths = sorted(
        os.path.join(directory, name)
        for name in os.listdir(directory)
        if not name.startswith(".")
    )
    slices = []
    for path in paths:
        if os.path.isfile(path):
            slices.append(_read_file(path))
    if not slices:
        raise IngestError(f"{directory}: no DICOM files found")

    first = slices[0]
    for s in slices[1:]:
        if (s.rows, s.cols) != (first.rows, first.cols):
            raise IngestError(
                f"{directory}: mixed slice dimensions "
                f"{(s.rows, s.cols)} vs {(first.rows, first.cols)}"
            )
        if s.pixel_spacing != first.pixel_spacing:
            raise IngestError(f"{directory}: mixed PixelSpacing across slices")

    slices.sort(key=lambda s: s.position[2])
    zs = [s.position[2] for s in slices]
    if len(slices) > 1:
        gaps = np.diff(zs)
        z_spacing = float(np.median(gaps))
        if z_spacing <= 0:
            raise IngestError(f"{directory}: non-increasing slice positions")
    else:
        z_spacing = 1.0

    # DICOM PixelSpacing is (between-rows, between-columns) = (y, x)
    spacing = (first.pixel_spacing[1], first.pixel_spacing[0], z_spacing)
    vol = np.stack([s.pixels for s in slices], axis=0)  # (nz, rows, cols)
    origin = (first.position[0], first.position[1], zs[0])
    return VoxelGrid(
        (first.cols, first.rows, len(slices)), spacing, origin, vol
    )

"""PFM (portable float map) HDR image IO.

Color images only (`PF` magic).  Scale is written as -1.0 (little
endian).  Arrays are (height, width, 3) float32, row 0 at the top;
the on-disk format stores rows bottom-up per the PFM convention.
"""

from __future__ import annotations

import numpy as np

from cinevol.errors import IngestError


def pfm_bytes(image: np.ndarray) -> bytes:
    img = np.asarray(image, dtype=np.float32)
    if img.ndim != 3 or img.shape[2] != 3:
        raise IngestError(f"PFM expects (h, w, 3), got {img.shape}")
    h, w = img.shape[:2]
    header = b"PF\n" + f"{w} {h}\n".encode("ascii") + b"-1.0\n"
    return header + np.ascontiguousarray(img[::-1], dtype="<f4").tobytes()


def save_pfm(path, image: np.ndarray) -> None:
    with open(str(path), "wb") as fh:
        fh.write(pfm_bytes(image))


def load_pfm(path) -> np.ndarray:
    with open(str(path), "rb") as fh:
        blob = fh.read()
    try:
        magic, rest = blob.split(b"\n", 1)
        dims, rest = rest.split(b"\n", 1)
        scale, data = rest.split(b"\n", 1)
        w, h = (int(x) for x in dims.split())
        scale = float(scale)
    except ValueError:
        raise IngestError(f"{path}: malformed PFM header") from None
    if magic.strip() != b"PF":
        raise IngestError(f"{path}: not a color PFM file")
    dtype = "<f4" if scale < 0 else ">f4"
    if len(data) < w * h * 3 * 4:
        raise IngestError(f"{path}: truncated PFM data")
    img = np.frombuffer(data, dtype=dtype, count=w * h * 3)
    img = img.reshape(h, w, 3)[::-1].astype(np.float32)
    if abs(scale) != 1.0:
        img = img * np.float32(abs(scale))
    return img

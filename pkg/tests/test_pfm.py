import numpy as np
import pytest

from cinevol.errors import IngestError
from cinevol.pfm import load_pfm, pfm_bytes, save_pfm


def test_round_trip(tmp_path, rng):
    img = rng.uniform(0, 100, size=(12, 7, 3)).astype(np.float32)
    path = tmp_path / "img.pfm"
    save_pfm(path, img)
    assert np.array_equal(load_pfm(path), img)


def test_header_layout():
    blob = pfm_bytes(np.zeros((2, 3, 3), np.float32))
    assert blob.startswith(b"PF\n3 2\n-1.0\n")
    assert len(blob) == len(b"PF\n3 2\n-1.0\n") + 2 * 3 * 3 * 4


def test_rows_are_stored_bottom_up():
    img = np.zeros((2, 1, 3), np.float32)
    img[0] = 5.0  # top row
    blob = pfm_bytes(img)
    data = np.frombuffer(blob.split(b"\n", 3)[3], dtype="<f4")
    assert np.array_equal(data, [0, 0, 0, 5, 5, 5])


def test_big_endian_scale(tmp_path):
    img = np.arange(6, dtype=np.float32).reshape(1, 2, 3)
    blob = b"PF\n2 1\n1.0\n" + img[::-1].astype(">f4").tobytes()
    path = tmp_path / "be.pfm"
    path.write_bytes(blob)
    assert np.array_equal(load_pfm(path), img)


def test_truncated_data_rejected(tmp_path):
    path = tmp_path / "trunc.pfm"
    path.write_bytes(b"PF\n4 4\n-1.0\n" + b"\x00" * 10)
    with pytest.raises(IngestError):
        load_pfm(path)


def test_grayscale_rejected(tmp_path):
    path = tmp_path / "gray.pfm"
    path.write_bytes(b"Pf\n2 2\n-1.0\n" + b"\x00" * 16)
    with pytest.raises(IngestError):
        load_pfm(path)


def test_bad_shape_rejected():
    with pytest.raises(IngestError):
        pfm_bytes(np.zeros((4, 4), np.float32))

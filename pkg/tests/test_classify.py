import numpy as np
import pytest

from cinevol.classify import (
    ControlPoint, TransferFunction, apply_window, build_lut, classify,
    load_preset_csv, opacity_to_sigma, preset, save_preset_csv,
)
from cinevol.errors import InvalidTransferFunction, PresetParseError


def _tf(points, level=None, width=None):
    return TransferFunction(tuple(ControlPoint(*p) for p in points),
                            level, width)


# --- LUT baking --------------------------------------------------------------

def test_lut_two_points_three_entries():
    lut = build_lut(_tf([(0, 0, 0, 0, 0), (100, 1, 1, 1, 1)]), n=3)
    assert np.allclose(lut.entries, [[0, 0, 0, 0],
                                     [0.5, 0.5, 0.5, 0.5],
                                     [1, 1, 1, 1]])


def test_lut_single_color():
    lut = build_lut(_tf([(0, 0.3, 0.4, 0.5, 0.6), (50, 0.3, 0.4, 0.5, 0.6)]),
                    n=64)
    assert np.allclose(lut.entries, [0.3, 0.4, 0.5, 0.6])


def test_lut_matches_piecewise_linear_oracle(rng):
    values = np.sort(rng.uniform(-1000, 2000, size=5))
    values += np.arange(5)  # guarantee strictly ascending
    rgba = rng.uniform(0, 1, size=(5, 4))
    points = [(v, *c) for v, c in zip(values, rgba)]
    tf = _tf(points)
    n = 4096
    lut = build_lut(tf, n=n)
    first, last = values[0], values[-1]
    for i in range(n):
        v = first + (i / (n - 1)) * (last - first)
        expected = np.interp(v, values, rgba[:, 0]), \
            np.interp(v, values, rgba[:, 1]), \
            np.interp(v, values, rgba[:, 2]), \
            np.interp(v, values, rgba[:, 3])
        assert np.max(np.abs(lut.entries[i] - np.array(expected))) < 1e-6


def test_unsorted_points_rejected():
    with pytest.raises(InvalidTransferFunction):
        _tf([(100, 0, 0, 0, 0), (0, 1, 1, 1, 1)])
    with pytest.raises(InvalidTransferFunction):
        _tf([(0, 0, 0, 0, 0), (0, 1, 1, 1, 1)])


# --- windowing ---------------------------------------------------------------

def test_window_center_maps_to_half():
    tf = _tf([(-1000, 0, 0, 0, 0), (1000, 1, 1, 1, 1)], level=0, width=400)
    assert apply_window(tf, 0.0) == 0.5


def test_window_clamps_below():
    tf = _tf([(-1000, 0, 0, 0, 0), (1000, 1, 1, 1, 1)], level=0, width=400)
    assert apply_window(tf, -200.0) == 0.0
    assert apply_window(tf, -5000.0) == 0.0


def test_window_level_300_width_600():
    tf = _tf([(-1000, 0, 0, 0, 0), (1000, 1, 1, 1, 1)], level=300, width=600)
    assert apply_window(tf, 450.0) == pytest.approx(0.75)


def test_window_width_must_be_positive():
    with pytest.raises(InvalidTransferFunction):
        _tf([(0, 0, 0, 0, 0), (100, 1, 1, 1, 1)], level=0, width=0)


# --- opacity -> extinction ---------------------------------------------------

def test_sigma_zero_opacity():
    assert opacity_to_sigma(0.0, 1.0) == 0.0


def test_sigma_inverse_exponential():
    a = 1.0 - 1.0 / np.e
    assert opacity_to_sigma(a, 1.0) == pytest.approx(1.0, abs=1e-6)


def test_sigma_monotone():
    sigmas = [opacity_to_sigma(a, 1.0) for a in np.arange(0.1, 0.95, 0.1)]
    assert all(b > a for a, b in zip(sigmas, sigmas[1:]))


def test_classify_uses_lut_entry():
    lut = build_lut(_tf([(0, 1, 0, 0, 0.5), (100, 1, 0, 0, 0.5)]), n=8)
    s = classify(lut, 50.0, 2.0)
    assert s.color == (1.0, 0.0, 0.0)
    assert s.sigma_t == pytest.approx(-2.0 * np.log(0.5))


# --- CSV presets -------------------------------------------------------------

def test_csv_round_trip_two_points():
    tf = _tf([(-1000, 0, 0, 0, 0), (400, 1, 0.8, 0.7, 0.9)])
    blob = save_preset_csv(tf)
    rows = [l for l in blob.decode().splitlines()
            if l and not l.startswith("#")]
    assert len(rows) == 3  # header + 2 data rows
    assert load_preset_csv(blob) == tf


def test_csv_malformed_row_reports_line():
    blob = b"value,r,g,b,a\nabc,1,0,0,1\n"
    with pytest.raises(PresetParseError) as exc:
        load_preset_csv(blob)
    assert exc.value.line == 2


def test_csv_random_presets_double_round_trip(rng):
    for _ in range(10):
        k = int(rng.integers(2, 8))
        values = np.sort(rng.uniform(-1024, 3000, size=k)) + np.arange(k)
        rgba = rng.uniform(0, 1, size=(k, 4))
        tf = _tf([(v, *c) for v, c in zip(values, rgba)],
                 level=float(rng.uniform(-100, 500)),
                 width=float(rng.uniform(10, 2000)))
        once = save_preset_csv(tf)
        twice = save_preset_csv(load_preset_csv(once))
        assert once == twice
        assert load_preset_csv(twice) == tf


def test_builtin_presets_are_valid():
    for name in ("cardiac", "bone", "gray"):
        tf = preset(name)
        build_lut(tf, n=64)
    with pytest.raises(KeyError):
        preset("nope")

import numpy as np
import pytest

from cinevol import postfx
from cinevol.errors import InvalidArgument
from cinevol.postfx import (
    SsaoParams, apply_ssao, compute_ssao, render_to_ldr, tone_map,
    tone_map_array,
)
from cinevol.tracer import BIG, Framebuffer


def _fb_from_radiance(hdr):
    h, w = hdr.shape[:2]
    fb = Framebuffer(w, h)
    fb.accum[:] = hdr
    fb.iteration_count = 1
    return fb


# --- tone mapping ------------------------------------------------------------

def test_zero_accum_is_black():
    fb = _fb_from_radiance(np.zeros((8, 8, 3)))
    assert np.all(tone_map(fb).rgb8 == 0)


def test_unit_radiance_maps_to_byte_188():
    # 1.0 -> Reinhard 0.5 -> sRGB encode -> round(0.7354 * 255) = 188
    fb = _fb_from_radiance(np.ones((4, 4, 3)))
    assert np.all(tone_map(fb).rgb8 == 188)


def test_exposure_monotonicity(rng):
    hdr = rng.uniform(0, 20, size=(100, 100, 3))
    lo = tone_map_array(hdr, exposure=1.0).rgb8
    hi = tone_map_array(hdr, exposure=2.0).rgb8
    assert np.all(hi.astype(int) >= lo.astype(int))


def test_tone_map_requires_a_pass():
    fb = Framebuffer(4, 4)
    with pytest.raises(InvalidArgument):
        tone_map(fb)


# --- SSAO --------------------------------------------------------------------

def _flat_fb(w=64, h=64, depth=50.0):
    fb = Framebuffer(w, h)
    fb.iteration_count = 1
    fb.accum[:] = 1.0
    fb.proj = (32.0, 32.0, True)  # orthographic, +-32 mm extent
    fb.aux_depth[:] = depth
    fb.aux_normal[:] = (0.0, 0.0, 1.0)
    fb.aux_normal_view = fb.aux_normal
    return fb


def _corner_fb(w=64, h=64):
    """Flat plane on the left, a 45-degree wall rising on the right."""
    fb = _flat_fb(w, h)
    xs = (np.arange(w) + 0.5) / w * 64.0 - 32.0  # view-space x per column
    wall = xs > 0
    fb.aux_depth[:, wall] = 50.0 - xs[wall]
    n_wall = np.array([-1.0, 0.0, 1.0]) / np.sqrt(2.0)
    fb.aux_normal[:, wall] = n_wall
    fb.aux_normal_view = fb.aux_normal
    return fb, xs


def test_flat_plane_is_unoccluded():
    occ = compute_ssao(_flat_fb(), SsaoParams())
    assert occ.min() > 0.95


def test_concave_corner_is_darker_than_flat():
    fb, xs = _corner_fb()
    occ = compute_ssao(fb, SsaoParams(radius=8.0))
    crease = occ[:, np.abs(xs) < 3.0].mean()
    flat = occ[:, xs < -16.0].mean()
    assert crease < flat


def test_strength_zero_is_identity():
    fb, _ = _corner_fb()
    occ = compute_ssao(fb, SsaoParams(strength=0.0))
    assert np.all(occ == 1.0)


def test_background_pixels_unoccluded():
    fb, xs = _corner_fb()
    fb.aux_depth[:, :4] = BIG  # no hit in the leftmost columns
    occ = compute_ssao(fb, SsaoParams())
    assert np.all(occ[:, :4] == 1.0)


def test_ssao_requires_aux_buffers():
    fb = _flat_fb()
    fb.aux_depth = None
    with pytest.raises(InvalidArgument):
        compute_ssao(fb, SsaoParams())


# --- applying the map --------------------------------------------------------

def test_apply_identity_map(rng):
    hdr = rng.uniform(0, 5, size=(8, 8, 3))
    assert np.array_equal(apply_ssao(hdr, np.ones((8, 8))), hdr)


def test_apply_half_map(rng):
    hdr = rng.uniform(0, 5, size=(8, 8, 3))
    assert np.allclose(apply_ssao(hdr, np.full((8, 8), 0.5)), 0.5 * hdr)


def test_apply_rejects_mismatched_shapes():
    with pytest.raises(InvalidArgument):
        apply_ssao(np.zeros((8, 8, 3)), np.zeros((4, 4)))


def test_render_to_ldr_darkens_crease_only():
    fb, xs = _corner_fb()
    with_ssao = render_to_ldr(fb, ssao=SsaoParams()).rgb8.astype(int)
    without = render_to_ldr(fb).rgb8.astype(int)
    crease = np.abs(xs) < 3.0
    flat = xs < -16.0
    assert with_ssao[:, crease].mean() < without[:, crease].mean()
    assert np.abs(with_ssao[:, flat].mean() - without[:, flat].mean()) \
        <= 0.02 * without[:, flat].mean()


def test_png_round_trip(tmp_path, rng):
    from PIL import Image

    img = tone_map_array(rng.uniform(0, 4, size=(16, 16, 3)))
    path = tmp_path / "img.png"
    postfx.save_png(img, path)
    with Image.open(path) as im:
        assert np.array_equal(np.asarray(im), img.rgb8)

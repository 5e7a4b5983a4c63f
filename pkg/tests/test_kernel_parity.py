"""Bit-equality between the compiled extension kernel and the
interpreted fallback.  The extension is built with FP contraction off,
so both must produce identical doubles on every code path."""

import dataclasses

import numpy as np
import pytest

from cinevol import kernel, tracer
from cinevol.scene import scene_preset

pytestmark = pytest.mark.skipif(
    not kernel.kernel_is_compiled(),
    reason="compiled kernel not available; nothing to compare",
)

compiled = kernel.impl
interpreted = kernel.load_fallback()


def _packed():
    scene = scene_preset("default")
    settings = dataclasses.replace(scene.settings, width=24, height=24,
                                   iterations=1)
    return scene, settings, tracer.pack_scene(scene, settings)


def test_transmittance_batch_parity():
    _, _, ps = _packed()
    outs = []
    for impl in (compiled, interpreted):
        out = np.zeros(2000)
        wrk = np.zeros((1, 48))
        ctr = np.zeros((1, 2), dtype=np.int64)
        impl.transmittance_batch(out, *ps.track_args(), 10.0, 30.0, 20.0,
                                 50.0, 33.0, 40.0, 7, wrk, ctr)
        outs.append(out)
    assert np.array_equal(outs[0], outs[1])


def test_free_flight_batch_parity():
    _, _, ps = _packed()
    outs = []
    for impl in (compiled, interpreted):
        out = np.zeros(2000)
        wrk = np.zeros((1, 48))
        ctr = np.zeros((1, 2), dtype=np.int64)
        impl.free_flight_batch(out, *ps.track_args(), 0.0, 31.5, 31.5,
                               1.0, 0.0, 0.0, 3, wrk, ctr)
        outs.append(out)
    assert np.array_equal(outs[0], outs[1])


def test_trace_path_parity():
    _, _, ps = _packed()
    for seed in range(5):
        results = []
        for impl in (compiled, interpreted):
            wrk = np.zeros((1, 48))
            ctr = np.zeros((1, 2), dtype=np.int64)
            results.append(impl.trace_path_one(
                *ps.path_args(), 31.5, 31.5, -120.0, 0.0, 0.0, 1.0,
                seed, 0, wrk, ctr))
        assert results[0] == results[1]


def test_brdf_sample_parity(rng):
    u = rng.uniform(size=(200, 3))
    for impl_pair in [(compiled, interpreted)]:
        a_impl, b_impl = impl_pair
        for k in range(200):
            out = []
            for impl in (a_impl, b_impl):
                wrk = np.zeros((1, 48))
                out.append(impl.brdf_sample_one(
                    (0.8, 0.6, 0.5), 0.4, 0.35, 0.5,
                    np.array([0.3, 0.1, 0.0 + np.sqrt(1 - 0.1)]),
                    np.array([0.0, 0.0, 1.0]),
                    u[k, 0], u[k, 1], u[k, 2], wrk))
            assert out[0] == out[1]


def test_render_pass_parity():
    scene, settings, _ = _packed()
    accums = []
    for impl in (compiled, interpreted):
        ps = tracer.pack_scene(scene, settings)
        h, w = settings.height, settings.width
        accum = np.zeros((h, w, 3))
        depth = np.full((h, w), tracer.BIG)
        normal = np.zeros((h, w, 3))
        diag = np.zeros(h, dtype=np.int64)
        wrk = np.zeros((h, 48))
        ctr = np.zeros((h, 2), dtype=np.int64)
        ps.I[16] = 1  # write aux buffers
        impl.render_pass(accum, depth, normal, diag, wrk, ctr,
                         ps.vol, ps.cut, ps.lut, ps.clips, ps.lights,
                         ps.cube, ps.cube_pdf, ps.cube_cdf, ps.maj,
                         ps.I, ps.D, 0, settings.seed, 1)
        accums.append((accum, depth, normal))
    assert np.array_equal(accums[0][0], accums[1][0])
    assert np.array_equal(accums[0][1], accums[1][1])
    assert np.array_equal(accums[0][2], accums[1][2])

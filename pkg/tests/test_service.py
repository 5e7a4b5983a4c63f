import dataclasses
import struct
import threading
import time

import numpy as np
import pytest
from starlette.testclient import TestClient

from cinevol import postfx, scene as scenemod, tracer
from cinevol.pfm import load_pfm
from cinevol.service import FRAME_HEADER, RenderSession, create_app, deep_merge


def small_scene(iterations=3, size=32):
    scene = scenemod.scene_preset("default")
    return scene.with_updates(settings=tracer.RenderSettings(
        width=size, height=size, iterations=iterations))


@pytest.fixture
def client():
    with TestClient(create_app(small_scene())) as c:
        yield c


def wait_idle(client, iterations, timeout=60.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        h = client.get("/api/health").json()
        if h["iteration"] >= iterations and h["state"] == "Idle":
            return h
        time.sleep(0.05)
    raise AssertionError(f"render did not settle: {h}")


def batch_render(scene, iterations):
    fb = tracer.Framebuffer(scene.settings.width, scene.settings.height)
    one = dataclasses.replace(scene.settings, iterations=1)
    for _ in range(iterations):
        tracer.render(scene, one, fb=fb)
    return fb


# --- deep merge --------------------------------------------------------------

def test_deep_merge_semantics():
    base = {"a": {"x": 1, "y": 2}, "lights": [1, 2], "k": 5}
    patch = {"a": {"y": 9}, "lights": [3]}
    merged = deep_merge(base, patch)
    assert merged == {"a": {"x": 1, "y": 9}, "lights": [3], "k": 5}
    assert base["a"]["y"] == 2  # input untouched


# --- scene document protocol -------------------------------------------------

def test_fresh_session_document_matches_preset(client):
    body = client.get("/api/scene").json()
    assert body["revision"] == 1
    expected = scenemod.to_document(small_scene())
    assert body["scene"] == expected


def test_accepted_edit_bumps_revision_by_one(client):
    rev = client.get("/api/scene").json()["revision"]
    r = client.patch("/api/scene", json={"material": {"roughness": 0.25}},
                     headers={"If-Match": str(rev)})
    assert r.status_code == 200
    assert r.json()["revision"] == rev + 1


def test_noop_patch_keeps_revision(client):
    body = client.get("/api/scene").json()
    rev = body["revision"]
    r = client.patch("/api/scene",
                     json={"material": body["scene"]["material"]},
                     headers={"If-Match": str(rev)})
    assert r.status_code == 200
    assert r.json()["revision"] == rev
    after = client.get("/api/scene").json()
    assert after == body


def test_missing_if_match_is_precondition_required(client):
    r = client.patch("/api/scene", json={"material": {"roughness": 0.1}})
    assert r.status_code == 428


def test_stale_revision_conflicts(client):
    r = client.patch("/api/scene", json={"material": {"roughness": 0.1}},
                     headers={"If-Match": "41"})
    assert r.status_code == 409
    assert r.json()["revision"] == 1


def test_invalid_value_rejected_with_key_path(client):
    r = client.patch("/api/scene",
                     json={"camera": {"vertical_fov": 200}},
                     headers={"If-Match": "1"})
    assert r.status_code == 422
    assert "vertical_fov" in r.json()["key_path"]
    assert client.get("/api/scene").json()["revision"] == 1


def test_concurrent_patches_one_wins():
    session = RenderSession(small_scene())
    for trial in range(20):
        rev = session.revision
        barrier = threading.Barrier(2)
        results = []

        def attempt(value):
            barrier.wait()
            status, payload = session.patch_scene(
                {"material": {"roughness": value}}, rev)
            results.append(status)

        threads = [threading.Thread(target=attempt, args=(v,))
                   for v in (0.31 + trial / 100, 0.62 + trial / 100)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert sorted(results) == ["conflict", "ok"], results
        assert session.revision == rev + 1


# --- streaming ---------------------------------------------------------------

def test_stream_iterations_strictly_increase():
    # passes on this scene outlast the 0.1 s poll, so no frame is dropped
    scene = small_scene(iterations=5, size=192)
    with TestClient(create_app(scene)) as client:
        with client.websocket_connect("/api/stream") as ws:
            seen = []
            while not seen or seen[-1] != (1, 5):
                frame = ws.receive_bytes()
                rev, it, w, h = FRAME_HEADER.unpack(frame[:16])
                assert (w, h) == (192, 192)
                assert frame[16:20] == b"\x89PNG"
                seen.append((rev, it))
            assert all(b > a for a, b in zip(seen, seen[1:]))
            assert [it for _, it in seen] == list(range(1, 6))


def test_edit_mid_stream_resets_iteration():
    scene = small_scene(iterations=5, size=192)
    with TestClient(create_app(scene)) as client:
        with client.websocket_connect("/api/stream") as ws:
            ws.receive_bytes()
            r = client.patch("/api/scene",
                             json={"material": {"roughness": 0.2}},
                             headers={"If-Match": "1"})
            assert r.status_code == 200
            while True:
                rev, it, _, _ = FRAME_HEADER.unpack(ws.receive_bytes()[:16])
                if rev == 2:
                    assert it == 1  # first frame of the new revision
                    break


def test_stream_matches_batch_render_bytes(client):
    scene = small_scene()
    k = scene.settings.iterations
    with client.websocket_connect("/api/stream") as ws:
        while True:
            frame = ws.receive_bytes()
            rev, it, _, _ = FRAME_HEADER.unpack(frame[:16])
            if it == k:
                break
    fb = batch_render(scene, k)
    expected = postfx.png_bytes(
        postfx.render_to_ldr(fb, ssao=postfx.SsaoParams()))
    assert frame[16:] == expected


# --- snapshots ---------------------------------------------------------------

def test_snapshot_before_first_pass_is_409():
    slow = small_scene(iterations=64, size=96)
    with TestClient(create_app(slow)) as c:
        r = c.post("/api/snapshot")
        if r.status_code != 409:  # a fast first pass may have landed
            assert r.status_code == 200
        else:
            assert "pass" in r.json()["error"]


def test_snapshot_png_and_pfm_consistent(client, tmp_path):
    wait_idle(client, 3)
    png = client.post("/api/snapshot?format=png")
    pfm = client.post("/api/snapshot?format=pfm")
    assert png.status_code == pfm.status_code == 200
    assert png.content[:4] == b"\x89PNG"
    (tmp_path / "snap.pfm").write_bytes(pfm.content)
    hdr = load_pfm(tmp_path / "snap.pfm")
    assert hdr.shape == (32, 32, 3)
    # the HDR snapshot tone-maps to the PNG minus its screen-space AO pass
    fb = batch_render(small_scene(), 3)
    assert np.allclose(hdr, fb.mean_radiance(), atol=1e-6)
    ldr = postfx.tone_map_array(hdr.astype(np.float64))
    assert np.array_equal(ldr.rgb8, postfx.render_to_ldr(fb).rgb8)


def test_snapshot_idempotent_between_passes(client):
    wait_idle(client, 3)  # worker idle: no pass can land in between
    a = client.post("/api/snapshot").content
    b = client.post("/api/snapshot").content
    assert a == b


def test_snapshot_unknown_format(client):
    assert client.post("/api/snapshot?format=bmp").status_code == 400

"""Progressive render service.

One session owns a scene and a render worker thread.  Edits are accepted
over HTTP with optimistic revision checks and applied at pass
boundaries; any accepted visual change resets accumulation.  Frames are
streamed over a WebSocket as 16-byte headers {revision, iteration,
width, height; u32 little-endian} followed by a PNG; the display
pipeline is identical to the CLI's, so a streamed frame at iteration k
is byte-equal to a batch render with iterations=k.
"""

from __future__ import annotations

import asyncio
import contextlib
import copy
import os
import struct
import threading

from fastapi import FastAPI, Request, Response, WebSocket
from fastapi.responses import JSONResponse
from starlette.websockets import WebSocketDisconnect

from cinevol import postfx, scene as scenemod, tracer
from cinevol.errors import SceneParseError
from cinevol.pfm import pfm_bytes

FRAME_HEADER = struct.Struct("<IIII")  # revision, iteration, width, height


def deep_merge(base: dict, patch: dict) -> dict:
    """Recursive dict merge; non-dict values (including lists) replace."""
    out = copy.deepcopy(base)
    for key, value in patch.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


class RenderSession:
    """Scene + framebuffer + worker thread with pass-boundary edits."""

    def __init__(self, scene: scenemod.Scene, threads: int = 1,
                 base_dir: str = "."):
        self.lock = threading.Lock()
        self.scene = scene
        self.doc = scenemod.to_document(scene)
        self.revision = 1
        self.threads = threads
        self.base_dir = base_dir
        self.fb: tracer.Framebuffer | None = None
        self.latest: tuple[int, int, int, int, bytes] | None = None
        self.status = "Idle"
        self._stop = threading.Event()
        self._wake = threading.Event()
        self._thread: threading.Thread | None = None

    # --- worker ---------------------------------------------------------

    def start(self):
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def stop(self):
        self._stop.set()
        self._wake.set()
        if self._thread is not None:
            self._thread.join(timeout=30)

    def _run(self):
        import dataclasses

        fb = None
        last_rev = -1
        while not self._stop.is_set():
            with self.lock:
                scene, revision = self.scene, self.revision
            if revision != last_rev:
                fb = tracer.Framebuffer(scene.settings.width,
                                        scene.settings.height)
                last_rev = revision
                with self.lock:
                    self.fb = None
                    self.latest = None
            if fb.iteration_count >= scene.settings.iterations:
                with self.lock:
                    self.status = "Idle"
                self._wake.wait(timeout=0.2)
                self._wake.clear()
                continue
            with self.lock:
                self.status = "Rendering"
            one = dataclasses.replace(scene.settings, iterations=1)
            tracer.render(scene, one, fb=fb, threads=self.threads)
            frame = self._encode(fb, revision)
            with self.lock:
                if self.revision == revision:
                    self.fb = fb
                    self.latest = frame
                # else: the scene changed mid-pass; drop the stale frame

    def _encode(self, fb, revision):
        img = postfx.render_to_ldr(fb, ssao=postfx.SsaoParams())
        png = postfx.png_bytes(img)
        return (revision, fb.iteration_count, fb.width, fb.height, png)

    # --- control plane --------------------------------------------------

    def get_scene(self):
        with self.lock:
            return copy.deepcopy(self.doc), self.revision

    def patch_scene(self, patch: dict, expected_revision: int):
        """Returns (status, payload): 'ok' | 'conflict' | 'invalid'."""
        with self.lock:
            if expected_revision != self.revision:
                return "conflict", {"revision": self.revision}
            merged = deep_merge(self.doc, patch)
            if merged == self.doc:
                return "ok", {"revision": self.revision, "noop": True}
            current_rev = self.revision
        try:
            new_scene = scenemod.parse_scene(merged, self.base_dir)
        except SceneParseError as exc:
            return "invalid", {"error": str(exc),
                               "key_path": exc.key_path}
        with self.lock:
            if self.revision != current_rev:
                return "conflict", {"revision": self.revision}
            self.scene = new_scene
            self.doc = merged
            self.revision += 1
            revision = self.revision
        self._wake.set()
        return "ok", {"revision": revision}

    def snapshot(self, fmt: str):
        with self.lock:
            fb = self.fb
        if fb is None or fb.iteration_count == 0:
            return None
        if fmt == "pfm":
            import numpy as np

            return pfm_bytes(fb.mean_radiance().astype(np.float32))
        img = postfx.render_to_ldr(fb, ssao=postfx.SsaoParams())
        return postfx.png_bytes(img)

    def health(self):
        with self.lock:
            iteration = self.fb.iteration_count if self.fb else 0
            return {"status": "ok", "state": self.status,
                    "revision": self.revision, "iteration": iteration}


def create_app(scene: scenemod.Scene, threads: int = 1,
               base_dir: str = ".", static_dir: str | None = None) -> FastAPI:
    session = RenderSession(scene, threads=threads, base_dir=base_dir)

    @contextlib.asynccontextmanager
    async def lifespan(app):
        session.start()
        yield
        session.stop()

    app = FastAPI(lifespan=lifespan)
    app.state.session = session

    @app.get("/api/scene")
    def get_scene():
        doc, revision = session.get_scene()
        return JSONResponse({"scene": doc, "revision": revision},
                            headers={"ETag": str(revision)})

    @app.patch("/api/scene")
    async def patch_scene(request: Request):
        if_match = request.headers.get("if-match")
        if if_match is None:
            return JSONResponse({"error": "If-Match header required"},
                                status_code=428)
        try:
            expected = int(if_match.strip('"'))
        except ValueError:
            return JSONResponse({"error": "If-Match must be a revision"},
                                status_code=400)
        try:
            patch = await request.json()
        except Exception:
            return JSONResponse({"error": "body must be JSON"},
                                status_code=400)
        if not isinstance(patch, dict):
            return JSONResponse({"error": "body must be an object"},
                                status_code=400)
        status, payload = session.patch_scene(patch, expected)
        if status == "conflict":
            return JSONResponse(payload, status_code=409)
        if status == "invalid":
            return JSONResponse(payload, status_code=422)
        return JSONResponse(payload)

    @app.post("/api/snapshot")
    def snapshot(format: str = "png"):
        if format not in ("png", "pfm"):
            return JSONResponse({"error": f"unknown format {format!r}"},
                                status_code=400)
        data = session.snapshot(format)
        if data is None:
            return JSONResponse({"error": "no completed pass yet"},
                                status_code=409)
        media = "image/png" if format == "png" else "application/octet-stream"
        return Response(content=data, media_type=media)

    @app.get("/api/health")
    def health():
        return session.health()

    @app.websocket("/api/stream")
    async def stream(ws: WebSocket):
        await ws.accept()
        sent: tuple[int, int] | None = None
        try:
            while True:
                # <= 10 frames/s, latest-wins
                await asyncio.sleep(0.1)
                with session.lock:
                    latest = session.latest
                if latest is None:
                    continue
                revision, iteration, w, h, png = latest
                key = (revision, iteration)
                if sent is not None and key <= sent:
                    continue
                await ws.send_bytes(
                    FRAME_HEADER.pack(revision, iteration, w, h) + png
                )
                sent = key
        except WebSocketDisconnect:
            pass

    if static_dir is None:
        candidate = os.path.join(os.getcwd(), "frontend", "dist")
        if os.path.isdir(candidate):
            static_dir = candidate
    if static_dir and os.path.isdir(static_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="viewer")

    return app

/**
 * Application bootstrap: wire the service client, the scene mirror, the
 * frame stream, and the DOM together.
 */

import { ServiceClient } from "./client";
import { ViewerModel } from "./model";
import { FrameStream } from "./stream";
import { rateLimited } from "./rate_limit";
import type { ScenePatch } from "./protocol";
import { ViewerUi } from "./ui";

function wsUrl(path: string): string {
  const proto = location.protocol === "https:" ? "wss:" : "ws:";
  return `${proto}//${location.host}${path}`;
}

function boot(): void {
  const root = document.getElementById("app");
  if (root === null) throw new Error("missing #app element");

  const client = new ServiceClient("");
  let ui: ViewerUi | null = null;

  const model = new ViewerModel(client, {
    onFrame: (frame) => ui?.showFrame(frame),
    onScene: (scene, revision) => ui?.showScene(scene, revision),
    onError: (message) => ui?.showError(message),
    onStatus: (status) => ui?.showStatus(status),
  });

  // drag gestures are throttled so the service is never asked to restart
  // accumulation more than 5 times a second
  const limiter = rateLimited<ScenePatch>(
    (patch) => void model.sendPatch(patch),
    5,
  );

  ui = new ViewerUi(root, { model, client, limiter });

  const stream = new FrameStream({
    url: wsUrl("/api/stream"),
    onFrame: (frame) => model.receiveFrame(frame),
    onStatus: (status) => model.setStatus(status),
  });

  void model.load().then(() => stream.connect());
}

boot();

/**
 * In-memory stand-in for the render service, implementing the same wire
 * behavior the client depends on: revision-checked patches over a
 * fetch-shaped interface and binary frames over a WebSocket-shaped one.
 */

import type { FetchLike } from "../src/client";
import type { SceneDocument } from "../src/protocol";
import { FRAME_HEADER_BYTES } from "../src/protocol";
import type { StreamSocket } from "../src/stream";

export const PNG_STUB = new Uint8Array([
  0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00,
]);

export function makeScene(): SceneDocument {
  return {
    volume: { kind: "phantom", name: "sphere_shell" },
    smoothing: { sigma: [1.0, 1.0, 1.0] },
    transfer_function: {
      points: [
        [-1000, 0, 0, 0, 0],
        [200, 0.9, 0.7, 0.6, 0.4],
        [1000, 1, 1, 1, 0.95],
      ],
      window_level: null,
      window_width: null,
    },
    material: {
      base_color: [0.8, 0.7, 0.65],
      metallic: 0.0,
      roughness: 0.5,
      specular: 0.5,
    },
    area_lights: [
      {
        center: [140, 140, -80],
        edge_u: [40, 0, 0],
        edge_v: [0, 40, 0],
        radiance: [120, 120, 120],
        enabled: true,
      },
    ],
    background: {
      mode: "constant",
      enabled: true,
      intensity_scale: 1.0,
      color: [0.35, 0.38, 0.42],
    },
    camera: {
      position: [31.5, 31.5, -120],
      target: [31.5, 31.5, 31.5],
      up: [0, 1, 0],
      projection: "perspective",
      vertical_fov: 40,
      half_height: 40,
    },
    clip_planes: [],
    cuts: [],
    render: {
      width: 512,
      height: 512,
      iterations: 64,
      max_bounces: 8,
      seed: 0,
      density_scale: 1.0,
      g_min: 0.05,
    },
  };
}

/** Encode a stream frame: '<IIII' header + PNG payload. */
export function encodeFrame(
  revision: number,
  iteration: number,
  width: number,
  height: number,
  png: Uint8Array = PNG_STUB,
): ArrayBuffer {
  const buf = new ArrayBuffer(FRAME_HEADER_BYTES + png.length);
  const view = new DataView(buf);
  view.setUint32(0, revision, true);
  view.setUint32(4, iteration, true);
  view.setUint32(8, width, true);
  view.setUint32(12, height, true);
  new Uint8Array(buf, FRAME_HEADER_BYTES).set(png);
  return buf;
}

interface Validator {
  (patch: Record<string, unknown>): { keyPath: string; error: string } | null;
}

export class MockService {
  scene = makeScene();
  revision = 1;
  patches: Record<string, unknown>[] = [];
  /** Extra latency hook: resolves responses through this queue. */
  delayResponse: (() => Promise<void>) | null = null;
  validator: Validator = () => null;

  readonly fetch: FetchLike = async (url, init) => {
    if (this.delayResponse !== null) await this.delayResponse();
    const path = url.replace(/^https?:\/\/[^/]+/, "").split("?")[0];
    const method = init?.method ?? "GET";
    if (path === "/api/scene" && method === "GET") {
      return jsonResponse(200, { scene: this.scene, revision: this.revision });
    }
    if (path === "/api/scene" && method === "PATCH") {
      const header = init?.headers?.["If-Match"];
      if (header === undefined) {
        return jsonResponse(428, { error: "If-Match header required" });
      }
      if (Number(header) !== this.revision) {
        return jsonResponse(409, { revision: this.revision });
      }
      const patch = JSON.parse(init?.body ?? "{}") as Record<string, unknown>;
      const invalid = this.validator(patch);
      if (invalid !== null) {
        return jsonResponse(422, {
          key_path: invalid.keyPath,
          error: invalid.error,
        });
      }
      this.patches.push(patch);
      this.scene = deepMerge(
        this.scene as unknown as Record<string, unknown>,
        patch,
      ) as unknown as SceneDocument;
      this.revision += 1;
      return jsonResponse(200, { revision: this.revision });
    }
    if (path === "/api/health" && method === "GET") {
      return jsonResponse(200, {
        status: "ok",
        state: "Rendering",
        revision: this.revision,
        iteration: 7,
      });
    }
    return jsonResponse(404, { error: `no route ${method} ${path}` });
  };
}

function jsonResponse(status: number, body: unknown) {
  return { status, json: async () => body };
}

function deepMerge(
  base: Record<string, unknown>,
  patch: Record<string, unknown>,
): Record<string, unknown> {
  const out = { ...base };
  for (const [key, value] of Object.entries(patch)) {
    const prev = out[key];
    if (
      isPlainObject(value) &&
      isPlainObject(prev)
    ) {
      out[key] = deepMerge(prev, value);
    } else {
      out[key] = value;
    }
  }
  return out;
}

function isPlainObject(x: unknown): x is Record<string, unknown> {
  return typeof x === "object" && x !== null && !Array.isArray(x);
}

/** A scriptable WebSocket double for FrameStream tests. */
export class MockSocket implements StreamSocket {
  binaryType = "blob";
  onopen: (() => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;
  onmessage: ((event: { data: ArrayBuffer }) => void) | null = null;
  closedByClient = false;

  open(): void {
    this.onopen?.();
  }

  deliver(data: ArrayBuffer): void {
    this.onmessage?.({ data });
  }

  drop(): void {
    this.onclose?.();
  }

  close(): void {
    this.closedByClient = true;
  }
}

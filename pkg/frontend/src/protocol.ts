/**
 * Wire protocol shared with the render service.
 *
 * Stream frames are binary WebSocket messages: a 16-byte little-endian
 * header (revision u32, iteration u32, width u32, height u32) followed
 * by a PNG payload.
 */

export const FRAME_HEADER_BYTES = 16;
const PNG_MAGIC = [0x89, 0x50, 0x4e, 0x47];

export interface Frame {
  revision: number;
  iteration: number;
  width: number;
  height: number;
  png: Uint8Array;
}

export interface SceneDocument {
  volume: Record<string, unknown>;
  smoothing: { sigma: number[] };
  transfer_function: {
    points: number[][];
    window_level: number | null;
    window_width: number | null;
  };
  material: {
    base_color: number[];
    metallic: number;
    roughness: number;
    specular: number;
  };
  area_lights: AreaLight[];
  background: {
    mode: string;
    enabled: boolean;
    intensity_scale: number;
    color?: number[];
    procedural?: number;
  };
  camera: {
    position: number[];
    target: number[];
    up: number[];
    projection: string;
    vertical_fov: number;
    half_height: number;
  };
  clip_planes: ClipPlane[];
  cuts: Record<string, unknown>[];
  render: {
    width: number;
    height: number;
    iterations: number;
    max_bounces: number;
    seed: number;
    density_scale: number;
    g_min: number;
  };
}

export interface AreaLight {
  center: number[];
  edge_u: number[];
  edge_v: number[];
  radiance: number[];
  enabled: boolean;
}

export interface ClipPlane {
  normal: number[];
  offset: number;
  enabled: boolean;
}

export interface Health {
  status: string;
  state: "Idle" | "Rendering";
  revision: number;
  iteration: number;
}

/** A deep-merge patch: dicts merge recursively, lists/scalars replace. */
export type ScenePatch = Record<string, unknown>;

export function decodeFrame(data: ArrayBuffer): Frame {
  if (data.byteLength < FRAME_HEADER_BYTES) {
    throw new Error(`frame too short: ${data.byteLength} bytes`);
  }
  const view = new DataView(data);
  const png = new Uint8Array(data, FRAME_HEADER_BYTES);
  for (let i = 0; i < PNG_MAGIC.length; i++) {
    if (png[i] !== PNG_MAGIC[i]) {
      throw new Error("frame payload is not a PNG");
    }
  }
  return {
    revision: view.getUint32(0, true),
    iteration: view.getUint32(4, true),
    width: view.getUint32(8, true),
    height: view.getUint32(12, true),
    png,
  };
}

/**
 * Transfer-function editor model: draggable RGBA control points over a
 * histogram backdrop, emitting `transfer_function` scene patches, plus
 * `.tfcsv` import/export compatible with the service presets.
 */

import type { ScenePatch } from "./protocol";

export interface ControlPoint {
  value: number; // HU
  r: number;
  g: number;
  b: number;
  a: number;
}

export interface TransferFunction {
  points: ControlPoint[];
  windowLevel: number | null;
  windowWidth: number | null;
}

const CSV_HEADER = "value,r,g,b,a";

export function fromDocument(doc: {
  points: number[][];
  window_level: number | null;
  window_width: number | null;
}): TransferFunction {
  return {
    points: doc.points.map(([value, r, g, b, a]) => ({ value, r, g, b, a })),
    windowLevel: doc.window_level,
    windowWidth: doc.window_width,
  };
}

export function toPatch(tf: TransferFunction): ScenePatch {
  return {
    transfer_function: {
      points: tf.points.map((p) => [p.value, p.r, p.g, p.b, p.a]),
      window_level: tf.windowLevel,
      window_width: tf.windowWidth,
    },
  };
}

/**
 * Move one control point.  HU values stay strictly increasing (clamped
 * between the neighbors) and alpha stays in [0, 1].
 */
export function movePoint(
  tf: TransferFunction,
  index: number,
  value: number,
  alpha: number,
): TransferFunction {
  const points = tf.points.map((p) => ({ ...p }));
  const p = points[index];
  if (p === undefined) {
    throw new Error(`no control point ${index}`);
  }
  const eps = 1e-6;
  const lo = index > 0 ? points[index - 1].value + eps : -Infinity;
  const hi =
    index < points.length - 1 ? points[index + 1].value - eps : Infinity;
  p.value = Math.min(Math.max(value, lo), hi);
  p.a = Math.min(Math.max(alpha, 0), 1);
  return { ...tf, points };
}

export function exportCsv(tf: TransferFunction): string {
  const lines = [CSV_HEADER];
  for (const p of tf.points) {
    lines.push([p.value, p.r, p.g, p.b, p.a].map(fmt).join(","));
  }
  if (tf.windowLevel !== null) lines.push(`#level,${fmt(tf.windowLevel)}`);
  if (tf.windowWidth !== null) lines.push(`#width,${fmt(tf.windowWidth)}`);
  return lines.join("\n") + "\n";
}

export function importCsv(text: string): TransferFunction {
  const points: ControlPoint[] = [];
  let windowLevel: number | null = null;
  let windowWidth: number | null = null;
  const lines = text.split("\n");
  lines.forEach((raw, i) => {
    const line = raw.trim();
    if (line === "") return;
    if (i === 0) {
      if (line !== CSV_HEADER) {
        throw new Error(`line 1: expected header ${CSV_HEADER}`);
      }
      return;
    }
    if (line.startsWith("#")) {
      const [key, val] = line.slice(1).split(",", 2);
      const num = Number(val);
      if (!Number.isFinite(num)) {
        throw new Error(`line ${i + 1}: bad metadata value ${val}`);
      }
      if (key === "level") windowLevel = num;
      else if (key === "width") windowWidth = num;
      else throw new Error(`line ${i + 1}: unknown metadata row ${key}`);
      return;
    }
    const parts = line.split(",").map(Number);
    if (parts.length !== 5 || parts.some((x) => !Number.isFinite(x))) {
      throw new Error(`line ${i + 1}: expected 5 numbers`);
    }
    const [value, r, g, b, a] = parts;
    points.push({ value, r, g, b, a });
  });
  if (points.length < 2) {
    throw new Error("transfer function needs at least 2 control points");
  }
  return { points, windowLevel, windowWidth };
}

function fmt(x: number): string {
  // match the service's float formatting closely enough to round-trip
  return Number.isInteger(x) ? `${x}.0` : String(x);
}

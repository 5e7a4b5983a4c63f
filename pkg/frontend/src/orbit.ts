/**
 * Orbit/zoom/pan camera math.  Gestures produce `camera` scene patches;
 * the distance to the target is preserved by orbits and scaled by zoom.
 */

import type { ScenePatch } from "./protocol";

export interface CameraState {
  position: number[];
  target: number[];
  up: number[];
}

type Vec3 = [number, number, number];

const sub = (a: number[], b: number[]): Vec3 => [
  a[0] - b[0],
  a[1] - b[1],
  a[2] - b[2],
];
const add = (a: number[], b: number[]): Vec3 => [
  a[0] + b[0],
  a[1] + b[1],
  a[2] + b[2],
];
const scale = (a: number[], s: number): Vec3 => [a[0] * s, a[1] * s, a[2] * s];
const dot = (a: number[], b: number[]): number =>
  a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
const cross = (a: number[], b: number[]): Vec3 => [
  a[1] * b[2] - a[2] * b[1],
  a[2] * b[0] - a[0] * b[2],
  a[0] * b[1] - a[1] * b[0],
];
const norm = (a: number[]): number => Math.sqrt(dot(a, a));
const normalize = (a: number[]): Vec3 => scale(a, 1 / norm(a));

/**
 * Rotate the camera around the target: yaw about the up axis, pitch
 * about the view-right axis.  Pitch is clamped so the view direction
 * never becomes parallel to up.
 */
export function orbit(
  cam: CameraState,
  yawRadians: number,
  pitchRadians: number,
): CameraState {
  const offset = sub(cam.position, cam.target);
  const radius = norm(offset);
  const upDir = normalize(cam.up);

  let yawed = rotateAbout(offset, upDir, yawRadians);

  const fwd = normalize(scale(yawed, -1));
  const right = normalize(cross(fwd, upDir));
  // clamp pitch: keep at least ~3 degrees away from the poles
  const elevation = Math.asin(
    Math.max(-1, Math.min(1, dot(normalize(yawed), upDir))),
  );
  const maxPitch = Math.PI / 2 - 0.05;
  const clamped =
    Math.max(-maxPitch, Math.min(maxPitch, elevation + pitchRadians)) -
    elevation;
  yawed = rotateAbout(yawed, right, clamped);

  const position = add(cam.target, scale(normalize(yawed), radius));
  return { ...cam, position };
}

/** Scale the distance to the target; factor > 1 zooms out. */
export function zoom(cam: CameraState, factor: number): CameraState {
  const offset = sub(cam.position, cam.target);
  const f = Math.max(0.05, factor);
  return { ...cam, position: add(cam.target, scale(offset, f)) };
}

/** Translate position and target together in the view plane. */
export function pan(cam: CameraState, dx: number, dy: number): CameraState {
  const fwd = normalize(sub(cam.target, cam.position));
  const right = normalize(cross(fwd, normalize(cam.up)));
  const upView = cross(right, fwd);
  const delta = add(scale(right, dx), scale(upView, dy));
  return {
    ...cam,
    position: add(cam.position, delta),
    target: add(cam.target, delta),
  };
}

export function cameraPatch(cam: CameraState): ScenePatch {
  return {
    camera: {
      position: cam.position,
      target: cam.target,
      up: cam.up,
    },
  };
}

function rotateAbout(v: Vec3, axis: Vec3, angle: number): Vec3 {
  // Rodrigues' rotation formula
  const c = Math.cos(angle);
  const s = Math.sin(angle);
  const k = normalize(axis);
  const term1 = scale(v, c);
  const term2 = scale(cross(k, v), s);
  const term3 = scale(k, dot(k, v) * (1 - c));
  return add(add(term1, term2), term3);
}

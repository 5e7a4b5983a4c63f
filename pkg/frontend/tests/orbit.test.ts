import { describe, expect, it } from "vitest";

import {
  cameraPatch,
  orbit,
  pan,
  zoom,
  type CameraState,
} from "../src/orbit";

const cam: CameraState = {
  position: [31.5, 31.5, -120],
  target: [31.5, 31.5, 31.5],
  up: [0, 1, 0],
};

function radius(c: CameraState): number {
  return Math.hypot(
    c.position[0] - c.target[0],
    c.position[1] - c.target[1],
    c.position[2] - c.target[2],
  );
}

describe("orbit", () => {
  it("preserves the distance to the target", () => {
    const r0 = radius(cam);
    let c = cam;
    for (const [yaw, pitch] of [
      [0.3, 0.0],
      [0.0, 0.4],
      [-1.2, -0.7],
      [2.5, 0.2],
    ]) {
      c = orbit(c, yaw, pitch);
      expect(radius(c)).toBeCloseTo(r0, 10);
    }
  });

  it("a quarter yaw turn moves the camera to the side", () => {
    const c = orbit(cam, Math.PI / 2, 0);
    // started along -z from the target; now along -x or +x
    expect(Math.abs(c.position[2] - cam.target[2])).toBeLessThan(1e-9);
    expect(Math.abs(c.position[0] - cam.target[0])).toBeCloseTo(151.5, 9);
  });

  it("clamps pitch short of the poles", () => {
    let c = cam;
    for (let i = 0; i < 20; i++) c = orbit(c, 0, 0.5);
    const offset = [
      c.position[0] - c.target[0],
      c.position[1] - c.target[1],
      c.position[2] - c.target[2],
    ];
    const cosUp = offset[1] / radius(c);
    expect(cosUp).toBeLessThan(1 - 1e-4); // never parallel to up
    expect(radius(c)).toBeCloseTo(radius(cam), 9);
  });

  it("does not mutate its input", () => {
    orbit(cam, 1, 1);
    expect(cam.position).toEqual([31.5, 31.5, -120]);
  });
});

describe("zoom", () => {
  it("scales the distance to the target", () => {
    expect(radius(zoom(cam, 0.5))).toBeCloseTo(radius(cam) * 0.5, 10);
    expect(radius(zoom(cam, 2.0))).toBeCloseTo(radius(cam) * 2.0, 10);
  });

  it("keeps the target fixed and never collapses onto it", () => {
    const c = zoom(cam, 1e-9);
    expect(c.target).toEqual(cam.target);
    expect(radius(c)).toBeGreaterThan(0);
  });
});

describe("pan", () => {
  it("moves position and target by the same view-plane offset", () => {
    const c = pan(cam, 5, -3);
    const dPos = c.position.map((v, i) => v - cam.position[i]);
    const dTgt = c.target.map((v, i) => v - cam.target[i]);
    expect(dPos).toEqual(dTgt);
    expect(radius(c)).toBeCloseTo(radius(cam), 10);
    expect(dPos.some((v) => Math.abs(v) > 1)).toBe(true);
  });
});

describe("cameraPatch", () => {
  it("emits the camera schema shape", () => {
    expect(cameraPatch(cam)).toEqual({
      camera: {
        position: [31.5, 31.5, -120],
        target: [31.5, 31.5, 31.5],
        up: [0, 1, 0],
      },
    });
  });
});

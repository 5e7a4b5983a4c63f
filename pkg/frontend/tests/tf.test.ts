import { describe, expect, it } from "vitest";

import {
  exportCsv,
  fromDocument,
  importCsv,
  movePoint,
  toPatch,
  type TransferFunction,
} from "../src/tf";

const sample: TransferFunction = {
  points: [
    { value: -1000, r: 0, g: 0, b: 0, a: 0 },
    { value: 200, r: 0.9, g: 0.7, b: 0.6, a: 0.4 },
    { value: 1000, r: 1, g: 1, b: 1, a: 0.95 },
  ],
  windowLevel: 300,
  windowWidth: 1400,
};

describe("transfer-function CSV", () => {
  it("round-trips through export and import", () => {
    const text = exportCsv(sample);
    const back = importCsv(text);
    expect(back).toEqual(sample);
  });

  it("writes the expected .tfcsv layout", () => {
    const lines = exportCsv(sample).split("\n");
    expect(lines[0]).toBe("value,r,g,b,a");
    expect(lines[1]).toBe("-1000.0,0.0,0.0,0.0,0.0");
    expect(lines[2]).toBe("200.0,0.9,0.7,0.6,0.4");
    expect(lines[4]).toBe("#level,300.0");
    expect(lines[5]).toBe("#width,1400.0");
    expect(lines[6]).toBe("");
  });

  it("omits metadata rows when the window is unset", () => {
    const text = exportCsv({ ...sample, windowLevel: null, windowWidth: null });
    expect(text).not.toContain("#level");
    expect(text).not.toContain("#width");
    expect(importCsv(text).windowLevel).toBeNull();
  });

  it("rejects a missing header with a line number", () => {
    expect(() => importCsv("value,r,g,b\n0,0,0,0,0\n")).toThrow(/line 1/);
  });

  it("rejects a malformed row with its line number", () => {
    const text = "value,r,g,b,a\n0,0,0,0,0\n100,0.5,oops,0.5,1\n";
    expect(() => importCsv(text)).toThrow(/line 3/);
  });

  it("rejects fewer than two control points", () => {
    expect(() => importCsv("value,r,g,b,a\n0,0,0,0,0\n")).toThrow(
      /at least 2/,
    );
  });
});

describe("movePoint", () => {
  it("clamps the value strictly between its neighbors", () => {
    const moved = movePoint(sample, 1, 5000, 0.4);
    expect(moved.points[1].value).toBeLessThan(1000);
    expect(moved.points[1].value).toBeGreaterThan(200);
    const movedLow = movePoint(sample, 1, -5000, 0.4);
    expect(movedLow.points[1].value).toBeGreaterThan(-1000);
  });

  it("clamps alpha to [0, 1] and leaves the input unchanged", () => {
    const moved = movePoint(sample, 2, 1000, 1.7);
    expect(moved.points[2].a).toBe(1);
    expect(sample.points[2].a).toBe(0.95); // original untouched
    expect(movePoint(sample, 0, -1000, -2).points[0].a).toBe(0);
  });

  it("throws on an unknown point index", () => {
    expect(() => movePoint(sample, 9, 0, 0)).toThrow(/no control point/);
  });
});

describe("patches", () => {
  it("emits the transfer_function schema shape", () => {
    expect(toPatch(sample)).toEqual({
      transfer_function: {
        points: [
          [-1000, 0, 0, 0, 0],
          [200, 0.9, 0.7, 0.6, 0.4],
          [1000, 1, 1, 1, 0.95],
        ],
        window_level: 300,
        window_width: 1400,
      },
    });
  });

  it("round-trips through the document form", () => {
    const doc = toPatch(sample).transfer_function as {
      points: number[][];
      window_level: number | null;
      window_width: number | null;
    };
    expect(fromDocument(doc)).toEqual(sample);
  });
});

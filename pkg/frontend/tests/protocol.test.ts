import { describe, expect, it } from "vitest";

import { decodeFrame, FRAME_HEADER_BYTES } from "../src/protocol";
import { encodeFrame, PNG_STUB } from "./mock_service";

describe("decodeFrame", () => {
  it("reads the little-endian header and returns the PNG payload", () => {
    const frame = decodeFrame(encodeFrame(7, 123, 512, 384));
    expect(frame.revision).toBe(7);
    expect(frame.iteration).toBe(123);
    expect(frame.width).toBe(512);
    expect(frame.height).toBe(384);
    expect(Array.from(frame.png)).toEqual(Array.from(PNG_STUB));
  });

  it("rejects frames shorter than the header", () => {
    expect(() => decodeFrame(new ArrayBuffer(FRAME_HEADER_BYTES - 1))).toThrow(
      /too short/,
    );
  });

  it("rejects payloads that are not PNG", () => {
    const buf = encodeFrame(1, 1, 8, 8, new Uint8Array([1, 2, 3, 4, 5]));
    expect(() => decodeFrame(buf)).toThrow(/not a PNG/);
  });

  it("is byte-order sensitive: a big-endian header would misparse", () => {
    const buf = encodeFrame(1, 2, 3, 4);
    new DataView(buf).setUint32(0, 7, false); // big-endian revision
    expect(decodeFrame(buf).revision).toBe(7 * 2 ** 24);
  });
});

import { describe, expect, it } from "vitest";

import type { Frame } from "../src/protocol";
import { FrameStream } from "../src/stream";
import { encodeFrame, MockSocket } from "./mock_service";

function setup() {
  const sockets: MockSocket[] = [];
  const timers: { fn: () => void; ms: number }[] = [];
  const frames: Frame[] = [];
  const statuses: string[] = [];
  const stream = new FrameStream({
    url: "ws://test/api/stream",
    onFrame: (f) => frames.push(f),
    onStatus: (s) => statuses.push(s),
    socketFactory: () => {
      const sock = new MockSocket();
      sockets.push(sock);
      return sock;
    },
    schedule: (fn, ms) => timers.push({ fn, ms }),
  });
  const fireNext = () => {
    const timer = timers.shift();
    if (!timer) throw new Error("no pending reconnect timer");
    timer.fn();
  };
  return { stream, sockets, timers, frames, statuses, fireNext };
}

describe("FrameStream", () => {
  it("decodes delivered frames", () => {
    const { stream, sockets, frames } = setup();
    stream.connect();
    sockets[0].open();
    sockets[0].deliver(encodeFrame(2, 17, 128, 96));
    expect(frames).toHaveLength(1);
    expect(frames[0]).toMatchObject({
      revision: 2,
      iteration: 17,
      width: 128,
      height: 96,
    });
    expect(sockets[0].binaryType).toBe("arraybuffer");
  });

  it("reconnects with exponential backoff, capped", () => {
    const { stream, sockets, fireNext } = setup();
    stream.connect();
    const expected = [500, 1000, 2000, 4000, 8000, 8000];
    for (const _ of expected) {
      sockets[sockets.length - 1].drop();
      fireNext();
    }
    expect(stream.delays).toEqual(expected);
    expect(sockets).toHaveLength(expected.length + 1);
  });

  it("resets the backoff after a frame is delivered", () => {
    const { stream, sockets, fireNext } = setup();
    stream.connect();
    sockets[0].drop();
    fireNext();
    sockets[1].drop();
    fireNext();
    expect(stream.delays).toEqual([500, 1000]);
    sockets[2].open();
    sockets[2].deliver(encodeFrame(1, 1, 8, 8));
    sockets[2].drop();
    expect(stream.delays).toEqual([500, 1000, 500]); // back to base
  });

  it("reports connection status transitions", () => {
    const { stream, sockets, statuses, fireNext } = setup();
    stream.connect();
    sockets[0].open();
    sockets[0].drop();
    fireNext();
    sockets[1].open();
    expect(statuses).toEqual([
      "connecting",
      "connected",
      "disconnected",
      "connecting",
      "connected",
    ]);
  });

  it("treats a socket error as a close", () => {
    const { stream, sockets } = setup();
    stream.connect();
    sockets[0].open();
    sockets[0].onerror?.();
    expect(sockets[0].closedByClient).toBe(true);
  });

  it("stays closed after close() even if the socket drops", () => {
    const { stream, sockets, timers } = setup();
    stream.connect();
    sockets[0].open();
    stream.close();
    expect(sockets[0].closedByClient).toBe(true);
    sockets[0].drop();
    expect(timers).toHaveLength(0); // no reconnect scheduled
    stream.connect(); // explicit reconnect is also refused
    expect(sockets).toHaveLength(1);
  });
});

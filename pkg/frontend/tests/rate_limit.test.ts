import { describe, expect, it } from "vitest";

import { rateLimited } from "../src/rate_limit";

/** Deterministic clock + scheduler for driving the limiter by hand. */
function fakeTime() {
  let t = 0;
  const timers: { at: number; fn: () => void }[] = [];
  return {
    now: () => t,
    schedule: (fn: () => void, ms: number) => {
      timers.push({ at: t + ms, fn });
    },
    advance(ms: number) {
      t += ms;
      timers
        .filter((timer) => timer.at <= t)
        .forEach((timer) => {
          timers.splice(timers.indexOf(timer), 1);
          timer.fn();
        });
    },
  };
}

describe("rateLimited", () => {
  it("sends the first value immediately", () => {
    const time = fakeTime();
    const sent: number[] = [];
    const limiter = rateLimited<number>(
      (v) => sent.push(v),
      5,
      time.now,
      time.schedule,
    );
    limiter.push(1);
    expect(sent).toEqual([1]);
  });

  it("caps a fast drag at 5 sends per second, latest value wins", () => {
    const time = fakeTime();
    const sent: { at: number; value: number }[] = [];
    const limiter = rateLimited<number>(
      (v) => sent.push({ at: time.now(), value: v }),
      5,
      time.now,
      time.schedule,
    );
    // 100 pushes over one second, one every 10 ms
    for (let i = 0; i < 100; i++) {
      limiter.push(i);
      time.advance(10);
    }
    time.advance(200); // let the trailing edge flush
    // consecutive sends are at least 200 ms apart (5 per second)
    for (let i = 1; i < sent.length; i++) {
      expect(sent[i].at - sent[i - 1].at).toBeGreaterThanOrEqual(200);
    }
    expect(sent[0].value).toBe(0);
    // each delivered value is the most recent at its send time
    for (let i = 1; i < sent.length; i++) {
      expect(sent[i].value).toBeGreaterThan(sent[i - 1].value);
    }
    expect(sent[sent.length - 1].value).toBe(99);
  });

  it("flush delivers the pending value without waiting", () => {
    const time = fakeTime();
    const sent: string[] = [];
    const limiter = rateLimited<string>(
      (v) => sent.push(v),
      5,
      time.now,
      time.schedule,
    );
    limiter.push("a");
    limiter.push("b");
    limiter.push("c");
    expect(sent).toEqual(["a"]);
    limiter.flush();
    expect(sent).toEqual(["a", "c"]);
  });

  it("resumes immediate sending after the window passes", () => {
    const time = fakeTime();
    const sent: number[] = [];
    const limiter = rateLimited<number>(
      (v) => sent.push(v),
      5,
      time.now,
      time.schedule,
    );
    limiter.push(1);
    time.advance(250);
    limiter.push(2);
    expect(sent).toEqual([1, 2]);
  });
});

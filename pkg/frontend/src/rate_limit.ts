/**
 * Trailing-edge rate limiter for continuous gestures.
 *
 * Every scene patch restarts progressive accumulation, so drags are
 * throttled to at most `maxPerSecond` sends; the most recent value
 * always wins and is flushed when the window expires.
 */

export interface RateLimiter<T> {
  push(value: T): void;
  flush(): void;
}

export function rateLimited<T>(
  send: (value: T) => void,
  maxPerSecond = 5,
  now: () => number = () => Date.now(),
  schedule: (fn: () => void, ms: number) => void = (fn, ms) =>
    setTimeout(fn, ms),
): RateLimiter<T> {
  const intervalMs = 1000 / maxPerSecond;
  let lastSent = -Infinity;
  let pending: { value: T } | null = null;
  let timerArmed = false;

  const fire = () => {
    timerArmed = false;
    if (pending !== null) {
      const { value } = pending;
      pending = null;
      lastSent = now();
      send(value);
    }
  };

  return {
    push(value: T): void {
      const elapsed = now() - lastSent;
      if (elapsed >= intervalMs && !timerArmed) {
        lastSent = now();
        send(value);
        return;
      }
      pending = { value };
      if (!timerArmed) {
        timerArmed = true;
        schedule(fire, Math.max(0, intervalMs - elapsed));
      }
    },
    flush(): void {
      fire();
    },
  };
}

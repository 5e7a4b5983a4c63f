/**
 * WebSocket frame stream with automatic reconnect.
 *
 * Reconnects use exponential backoff (capped) and reset to the base
 * delay after a successful connection delivers a frame.
 */

import { decodeFrame, type Frame } from "./protocol";

export interface StreamSocket {
  binaryType: string;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  onmessage: ((event: { data: ArrayBuffer }) => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => StreamSocket;

export interface StreamOptions {
  url: string;
  onFrame: (frame: Frame) => void;
  onStatus?: (status: "connecting" | "connected" | "disconnected") => void;
  socketFactory?: SocketFactory;
  schedule?: (fn: () => void, ms: number) => void;
  baseDelayMs?: number;
  maxDelayMs?: number;
}

export class FrameStream {
  private socket: StreamSocket | null = null;
  private closed = false;
  private attempt = 0;
  readonly delays: number[] = []; // reconnect delays actually used

  private readonly factory: SocketFactory;
  private readonly schedule: (fn: () => void, ms: number) => void;
  private readonly baseDelayMs: number;
  private readonly maxDelayMs: number;

  constructor(private readonly opts: StreamOptions) {
    this.factory =
      opts.socketFactory ??
      ((url) => new WebSocket(url) as unknown as StreamSocket);
    this.schedule = opts.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    this.baseDelayMs = opts.baseDelayMs ?? 500;
    this.maxDelayMs = opts.maxDelayMs ?? 8000;
  }

  connect(): void {
    if (this.closed) return;
    this.opts.onStatus?.("connecting");
    const socket = this.factory(this.opts.url);
    this.socket = socket;
    socket.binaryType = "arraybuffer";
    socket.onopen = () => {
      this.opts.onStatus?.("connected");
    };
    socket.onmessage = (event) => {
      this.attempt = 0; // a delivered frame proves the link is healthy
      this.opts.onFrame(decodeFrame(event.data));
    };
    socket.onerror = () => socket.close();
    socket.onclose = () => {
      if (this.closed) return;
      this.opts.onStatus?.("disconnected");
      const delay = Math.min(
        this.baseDelayMs * 2 ** this.attempt,
        this.maxDelayMs,
      );
      this.attempt += 1;
      this.delays.push(delay);
      this.schedule(() => this.connect(), delay);
    };
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }
}

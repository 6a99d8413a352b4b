// WebSocket session wrapper: connect, claim, validated command sending,
// auto-retry on disconnect. The socket constructor is injectable so the
// same client drives both the browser UI and node test harnesses.

import {
  CommandMessage, Quat, ServerFrame, Vec3, parseServerFrame, validateCommand,
} from "./protocol.js";
import {
  SessionState, applyFrame, commandIntervalMs, initialState, markDisconnected,
} from "./state.js";
import { CommandRateLimiter } from "./steering.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientOptions {
  socketFactory?: SocketFactory;
  retryMs?: number;
  autoReconnect?: boolean;
  onFrame?: (frame: ServerFrame, state: SessionState) => void;
}

const defaultFactory: SocketFactory = (url) =>
  new (globalThis as any).WebSocket(url) as SocketLike;

export class SteeringClient {
  state: SessionState = initialState();
  private socket: SocketLike | null = null;
  private closed = false;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;
  private limiter = new CommandRateLimiter(100);

  constructor(private url: string, private opts: ClientOptions = {}) {}

  connect() {
    this.closed = false;
    this.open();
  }

  private open() {
    const factory = this.opts.socketFactory ?? defaultFactory;
    this.state.connection = "connecting";
    let sock: SocketLike;
    try {
      sock = factory(this.url);
    } catch {
      this.scheduleRetry();
      return;
    }
    this.socket = sock;
    sock.onopen = () => {
      // connection is "connected" once the hello frame arrives
    };
    sock.onmessage = (ev) => {
      const frame = parseServerFrame(String(ev.data));
      if (!frame) {
        return;
      }
      applyFrame(this.state, frame);
      if (frame.type === "hello") {
        this.limiter = new CommandRateLimiter(commandIntervalMs(this.state));
      }
      this.opts.onFrame?.(frame, this.state);
    };
    sock.onclose = () => {
      markDisconnected(this.state);
      this.scheduleRetry();
    };
    sock.onerror = () => {
      // onclose follows; nothing to do here
    };
  }

  private scheduleRetry() {
    if (this.closed || this.opts.autoReconnect === false) {
      return;
    }
    if (this.retryTimer !== null) {
      return;
    }
    this.retryTimer = setTimeout(() => {
      this.retryTimer = null;
      if (!this.closed) {
        this.open();
      }
    }, this.opts.retryMs ?? 1000);
  }

  claim(arm: number) {
    this.state.selectedArm = arm;
    this.socket?.send(JSON.stringify({ type: "claim", arm }));
  }

  // Validated, rate-limited command. Returns null when sent, otherwise the
  // reason it was withheld (invalid or rate-limited); invalid frames are
  // never put on the wire.
  sendCommand(raw: Vec3, rotation: Quat, grip: number, nowMs: number,
              dirty = true): string | null {
    if (this.state.connection !== "connected") {
      return "not connected";
    }
    const cmd: CommandMessage = {
      type: "command",
      arm: this.state.selectedArm,
      t: raw,
      r: rotation,
      grip,
      stamp_ms: nowMs,
    };
    const invalid = validateCommand(cmd, this.state.hello?.arms.length ?? 0);
    if (invalid) {
      return invalid;
    }
    if (!this.limiter.ready(nowMs, dirty)) {
      return "rate limited";
    }
    this.socket!.send(JSON.stringify(cmd));
    return null;
  }

  close() {
    this.closed = true;
    if (this.retryTimer !== null) {
      clearTimeout(this.retryTimer);
      this.retryTimer = null;
    }
    this.socket?.close();
  }
}

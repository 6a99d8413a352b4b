// Single state store updated by socket callbacks; rendering reads it at
// display refresh and never writes simulation state back.

import {
  ArmInfo, HelloFrame, ServerFrame, TelemetryFrame,
} from "./protocol.js";

export type ConnectionState = "connecting" | "connected" | "disconnected";

export interface SessionState {
  connection: ConnectionState;
  hello: HelloFrame | null;
  selectedArm: number;
  claimedArms: Set<number>;     // arms this client owns
  spectator: boolean;           // claim was rejected
  latest: Map<number, TelemetryFrame>;
  banner: string | null;
  framesSeen: number;
}

export function initialState(): SessionState {
  return {
    connection: "connecting",
    hello: null,
    selectedArm: 1,
    claimedArms: new Set(),
    spectator: false,
    latest: new Map(),
    banner: null,
    framesSeen: 0,
  };
}

export function armInfo(state: SessionState, arm: number): ArmInfo | null {
  if (!state.hello) {
    return null;
  }
  return state.hello.arms.find((a) => a.arm === arm) ?? null;
}

export function applyFrame(state: SessionState, frame: ServerFrame): SessionState {
  state.framesSeen += 1;
  switch (frame.type) {
    case "hello":
      state.hello = frame;
      state.connection = "connected";
      break;
    case "telemetry":
      state.latest.set(frame.arm, frame);
      break;
    case "claimed":
      state.claimedArms.add(frame.arm);
      state.spectator = false;
      state.banner = null;
      break;
    case "released":
      // someone (possibly us) let go of the arm
      break;
    case "error":
      if (frame.message.includes("already claimed")) {
        state.spectator = true;
        state.banner = `arm busy: ${frame.message}`;
      } else {
        state.banner = frame.message;
      }
      break;
  }
  return state;
}

export function markDisconnected(state: SessionState): SessionState {
  state.connection = "disconnected";
  state.claimedArms.clear();
  state.banner = "disconnected; retrying";
  return state;
}

// command cadence derives from the config echo (decimation * dt)
export function commandIntervalMs(state: SessionState): number {
  if (!state.hello) {
    return 100;
  }
  return 1000 * state.hello.dt * state.hello.decimation;
}

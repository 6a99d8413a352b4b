// Wire protocol types for the steering endpoint: one JSON object per
// websocket text frame, fields mirroring the engine's telemetry records and
// command messages.

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number]; // w, x, y, z

export interface ArmInfo {
  arm: number;
  d_safe: number | null;       // m^2, square of the safe distance
  eta_d: number | null;
  sphere_center: Vec3 | null;
  claimed: boolean;
  t0: Vec3;
  r0: Quat;
}

export interface HelloFrame {
  type: "hello";
  version: number;
  dt: number;
  decimation: number;
  motion_scaling: number;
  arms: ArmInfo[];
}

export interface TelemetryFrame {
  type: "telemetry";
  time: number;
  arm: number;
  q: number[];
  qd: number[];
  t_err: Vec3;
  t_err_norm: number;
  r_err_norm: number;
  d_es_sq: number;
  d_es: number;
  w_es: number;
  n_active: number;
  status: string;
  force: Vec3;
  wall?: number;
  tip?: Vec3;
  shaft_p?: Vec3;
  shaft_l?: Vec3;
  target?: Vec3;
}

export interface ErrorFrame {
  type: "error";
  message: string;
}

export interface ClaimedFrame {
  type: "claimed";
  arm: number;
}

export interface ReleasedFrame {
  type: "released";
  arm: number;
}

export type ServerFrame =
  | HelloFrame
  | TelemetryFrame
  | ErrorFrame
  | ClaimedFrame
  | ReleasedFrame;

export interface CommandMessage {
  type: "command";
  arm: number;
  t: Vec3;       // operator-side translation; server applies motion scaling
  r: Quat;       // unit within 1e-6, scalar first
  grip: number;  // 0..1
  stamp_ms: number;
}

export function parseServerFrame(raw: string): ServerFrame | null {
  let obj: any;
  try {
    obj = JSON.parse(raw);
  } catch {
    return null;
  }
  if (!obj || typeof obj !== "object" || typeof obj.type !== "string") {
    return null;
  }
  switch (obj.type) {
    case "hello":
    case "telemetry":
    case "error":
    case "claimed":
    case "released":
      return obj as ServerFrame;
    default:
      return null;
  }
}

function finiteVec(v: unknown, n: number): v is number[] {
  return Array.isArray(v) && v.length === n &&
    v.every((x) => typeof x === "number" && Number.isFinite(x));
}

export function quatNorm(r: Quat): number {
  return Math.sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2] + r[3] * r[3]);
}

export function normalizeQuat(r: Quat): Quat {
  const n = quatNorm(r);
  return [r[0] / n, r[1] / n, r[2] / n, r[3] / n];
}

// Client-side mirror of the server's command validation: malformed frames
// must never be sent in the first place.
export function validateCommand(cmd: CommandMessage, nArms: number): string | null {
  if (!Number.isInteger(cmd.arm) || cmd.arm < 1 || cmd.arm > nArms) {
    return `arm must be an integer in 1..${nArms}`;
  }
  if (!finiteVec(cmd.t, 3)) {
    return "t must be 3 finite numbers";
  }
  if (!finiteVec(cmd.r, 4)) {
    return "r must be 4 finite numbers";
  }
  if (Math.abs(quatNorm(cmd.r) - 1) > 1e-6) {
    return "r must be unit within 1e-6";
  }
  if (!Number.isFinite(cmd.grip) || cmd.grip < 0 || cmd.grip > 1) {
    return "grip must be in [0, 1]";
  }
  if (!Number.isFinite(cmd.stamp_ms)) {
    return "stamp_ms must be finite";
  }
  return null;
}

// Pointer and keyboard input mapped to operator-side targets, plus the
// client-side preview of the motion-scaled anchor map. The preview is
// advisory only: the server applies the authoritative scaling.

import { Quat, Vec3, normalizeQuat } from "./protocol.js";

export function rotateVec(r: Quat, v: Vec3): Vec3 {
  const [w, x, y, z] = r;
  return [
    (1 - 2 * (y * y + z * z)) * v[0] + 2 * (x * y - w * z) * v[1] + 2 * (x * z + w * y) * v[2],
    2 * (x * y + w * z) * v[0] + (1 - 2 * (x * x + z * z)) * v[1] + 2 * (y * z - w * x) * v[2],
    2 * (x * z - w * y) * v[0] + 2 * (y * z + w * x) * v[1] + (1 - 2 * (x * x + y * y)) * v[2],
  ];
}

export function quatMul(a: Quat, b: Quat): Quat {
  return [
    a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
    a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
    a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
    a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
  ];
}

export function axisAngle(axis: Vec3, angle: number): Quat {
  const n = Math.hypot(axis[0], axis[1], axis[2]);
  const h = angle / 2;
  const s = Math.sin(h) / (n || 1);
  return normalizeQuat([Math.cos(h), s * axis[0], s * axis[1], s * axis[2]]);
}

// t_d = anchor_ps + ms * (raw - anchor_os), the same map the server applies
export function scaleTargetPreview(raw: Vec3, ms: number,
                                   anchorPs: Vec3, anchorOs: Vec3): Vec3 {
  return [
    anchorPs[0] + ms * (raw[0] - anchorOs[0]),
    anchorPs[1] + ms * (raw[1] - anchorOs[1]),
    anchorPs[2] + ms * (raw[2] - anchorOs[2]),
  ];
}

// Per-view mapping from pointer pixels to workspace meters. The top pane
// looks down the z axis (screen x -> world x, screen y -> world -y); the
// side pane looks along -y (screen x -> world x, screen y -> world -z).
export type ViewKind = "top" | "side";

export function pointerDeltaToWorld(view: ViewKind, dxPx: number, dyPx: number,
                                    metersPerPixel: number): Vec3 {
  const dx = dxPx * metersPerPixel;
  const dy = dyPx * metersPerPixel;
  if (view === "top") {
    return [dx, -dy, 0];
  }
  return [dx, 0, -dy];
}

// Modifier-drag orbits: horizontal pixels spin about the view's vertical
// world axis, vertical pixels about the horizontal one.
export function pointerDeltaToRotation(view: ViewKind, dxPx: number,
                                       dyPx: number, radPerPixel: number): Quat {
  const ax = dxPx * radPerPixel;
  const ay = dyPx * radPerPixel;
  const spinV = axisAngle(view === "top" ? [0, 0, 1] : [0, 1, 0], ax);
  const spinH = axisAngle([1, 0, 0], ay);
  return quatMul(spinV, spinH);
}

export class SteeringState {
  raw: Vec3;                 // operator-side translation (sent on the wire)
  rotation: Quat;            // commanded orientation
  anchorOs: Vec3;            // first raw after claim; mirrors the server
  anchorPs: Vec3;            // pose at claim time
  // born dirty: the first command is the clutch-in at the unmodified start
  // pose, which binds the server's anchors to the same values as ours
  dirty = true;

  constructor(startPose: Vec3, startRot: Quat) {
    this.raw = [...startPose] as Vec3;
    this.anchorOs = [...startPose] as Vec3;
    this.anchorPs = [...startPose] as Vec3;
    this.rotation = normalizeQuat([...startRot] as Quat);
  }

  nudge(delta: Vec3) {
    this.raw = [this.raw[0] + delta[0], this.raw[1] + delta[1],
                this.raw[2] + delta[2]];
    this.dirty = true;
  }

  orbit(spin: Quat) {
    this.rotation = normalizeQuat(quatMul(spin, this.rotation));
    this.dirty = true;
  }

  previewTarget(ms: number): Vec3 {
    return scaleTargetPreview(this.raw, ms, this.anchorPs, this.anchorOs);
  }
}

// Commands go out at most at the telemetry decimation rate, and only when
// the operator actually changed something (zero-order hold otherwise).
export class CommandRateLimiter {
  private lastSent = -Infinity;

  constructor(public intervalMs: number) {}

  ready(nowMs: number, dirty: boolean): boolean {
    if (!dirty) {
      return false;
    }
    if (nowMs - this.lastSent < this.intervalMs) {
      return false;
    }
    this.lastSent = nowMs;
    return true;
  }
}

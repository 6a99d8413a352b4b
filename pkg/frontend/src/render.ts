// 2-D orthographic schematic painters: a top view (x-y, looking down z) and
// a side view (x-z, looking along -y). Everything drawn from telemetry
// truth; the only client-side overlay is the preview target, drawn in a
// visibly different style.

import { HelloFrame, TelemetryFrame, Vec3 } from "./protocol.js";
import { ViewKind } from "./steering.js";

export interface ViewTransform {
  scale: number;       // pixels per meter
  cx: number;          // world point mapped to the canvas center
  cy: number;
  cz: number;
}

export function project(view: ViewKind, p: Vec3, t: ViewTransform,
                        width: number, height: number): [number, number] {
  const u = (p[0] - t.cx) * t.scale + width / 2;
  const v = view === "top"
    ? height / 2 - (p[1] - t.cy) * t.scale
    : height / 2 - (p[2] - t.cz) * t.scale;
  return [u, v];
}

// fit the workspace (sphere centers and initial tips) into the panes
export function fitTransform(hello: HelloFrame, width: number,
                             height: number): ViewTransform {
  const pts: Vec3[] = [];
  for (const a of hello.arms) {
    pts.push(a.t0);
    if (a.sphere_center) {
      pts.push(a.sphere_center);
    }
  }
  if (pts.length === 0) {
    return { scale: 1000, cx: 0, cy: 0, cz: 0 };
  }
  const mins = [0, 1, 2].map((i) => Math.min(...pts.map((p) => p[i])));
  const maxs = [0, 1, 2].map((i) => Math.max(...pts.map((p) => p[i])));
  const span = Math.max(maxs[0] - mins[0], maxs[1] - mins[1],
                        maxs[2] - mins[2], 0.05) + 0.20;
  return {
    scale: Math.min(width, height) / span,
    cx: (mins[0] + maxs[0]) / 2,
    cy: (mins[1] + maxs[1]) / 2,
    cz: (mins[2] + maxs[2]) / 2,
  };
}

const ARM_COLORS = ["#4dc3ff", "#ffb84d"];

export function drawPane(ctx: CanvasRenderingContext2D, view: ViewKind,
                         hello: HelloFrame, latest: Map<number, TelemetryFrame>,
                         preview: { arm: number; target: Vec3 } | null,
                         t: ViewTransform) {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, width, height);
  ctx.strokeStyle = "#2a3340";
  ctx.strokeRect(0.5, 0.5, width - 1, height - 1);
  ctx.fillStyle = "#5a6676";
  ctx.font = "11px sans-serif";
  ctx.fillText(view === "top" ? "top (x-y)" : "side (x-z)", 8, 16);

  for (const info of hello.arms) {
    const color = ARM_COLORS[(info.arm - 1) % ARM_COLORS.length];
    if (info.sphere_center && info.d_safe !== null) {
      const [u, v] = project(view, info.sphere_center, t, width, height);
      const r = Math.sqrt(info.d_safe) * t.scale;
      ctx.beginPath();
      ctx.arc(u, v, Math.max(r, 2), 0, 2 * Math.PI);
      ctx.strokeStyle = color + "88";
      ctx.setLineDash([4, 3]);
      ctx.stroke();
      ctx.setLineDash([]);
    }
    const tel = latest.get(info.arm);
    if (tel?.shaft_p && tel.shaft_l && tel.tip) {
      const L = (info as any).shaft_length ?? 0.2;
      const distal = tel.shaft_p;
      const proximal: Vec3 = [
        distal[0] - L * tel.shaft_l[0],
        distal[1] - L * tel.shaft_l[1],
        distal[2] - L * tel.shaft_l[2],
      ];
      const [u0, v0] = project(view, proximal, t, width, height);
      const [u1, v1] = project(view, distal, t, width, height);
      ctx.beginPath();
      ctx.moveTo(u0, v0);
      ctx.lineTo(u1, v1);
      ctx.strokeStyle = color;
      ctx.lineWidth = 3;
      ctx.stroke();
      ctx.lineWidth = 1;
      const [ut, vt] = project(view, tel.tip, t, width, height);
      ctx.beginPath();
      ctx.moveTo(u1, v1);
      ctx.lineTo(ut, vt);
      ctx.strokeStyle = color;
      ctx.stroke();
      ctx.beginPath();
      ctx.arc(ut, vt, 3, 0, 2 * Math.PI);
      ctx.fillStyle = color;
      ctx.fill();
      if (tel.target) {
        const [ug, vg] = project(view, tel.target, t, width, height);
        ctx.beginPath();
        ctx.moveTo(ug - 4, vg);
        ctx.lineTo(ug + 4, vg);
        ctx.moveTo(ug, vg - 4);
        ctx.lineTo(ug, vg + 4);
        ctx.strokeStyle = "#ffffff";
        ctx.stroke();
      }
      // operator-force vector rendered at the tip
      const f = tel.force;
      const fscale = 0.0005 * t.scale; // meters of arrow per force unit
      const [uf, vf] = project(view, [
        tel.tip[0] + f[0] * fscale / t.scale,
        tel.tip[1] + f[1] * fscale / t.scale,
        tel.tip[2] + f[2] * fscale / t.scale,
      ], t, width, height);
      ctx.beginPath();
      ctx.moveTo(ut, vt);
      ctx.lineTo(uf, vf);
      ctx.strokeStyle = "#ff5d5d";
      ctx.stroke();
    }
  }

  if (preview) {
    const [up, vp] = project(view, preview.target, t, width, height);
    ctx.beginPath();
    ctx.arc(up, vp, 5, 0, 2 * Math.PI);
    ctx.strokeStyle = "#b18cff";
    ctx.setLineDash([2, 2]);
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.fillStyle = "#b18cff";
    ctx.font = "10px sans-serif";
    ctx.fillText("preview", up + 7, vp + 3);
  }
}

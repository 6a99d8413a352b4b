// Dashboard wiring: socket client, pointer/keyboard steering, canvas panes,
// gauges. Socket callbacks touch only the state store; rendering runs on
// requestAnimationFrame.

import { SteeringClient } from "./client.js";
import { constraintBadge, distanceGauge, errorGauge, rotationErrorGauge } from "./gauges.js";
import { TelemetryFrame, Vec3 } from "./protocol.js";
import { drawPane, fitTransform, ViewTransform } from "./render.js";
import {
  SteeringState, ViewKind, pointerDeltaToRotation, pointerDeltaToWorld,
} from "./steering.js";
import { armInfo } from "./state.js";

const $ = (id: string) => document.getElementById(id)!;

const endpoint = (document.location.hash.slice(1)
  || `ws://${document.location.hostname || "127.0.0.1"}:8765`);

const client = new SteeringClient(endpoint);
let steering: SteeringState | null = null;
let transform: ViewTransform | null = null;

function selectedTelemetry(): TelemetryFrame | null {
  return client.state.latest.get(client.state.selectedArm) ?? null;
}

client.connect();

// ---------------------------------------------------------------- claiming
for (const arm of [1, 2]) {
  $(`claim${arm}`).addEventListener("click", () => {
    client.claim(arm);
    steering = null;   // anchors rebind on the first post-claim telemetry
  });
}

function ensureSteering(): SteeringState | null {
  if (steering) {
    return steering;
  }
  const info = armInfo(client.state, client.state.selectedArm);
  const tel = selectedTelemetry();
  if (!info || !client.state.claimedArms.has(client.state.selectedArm)) {
    return null;
  }
  const start = (tel?.tip ?? info.t0) as Vec3;
  steering = new SteeringState(start, info.r0);
  return steering;
}

// ------------------------------------------------------------- pointer I/O
function hookPane(canvasId: string, view: ViewKind) {
  const canvas = $(canvasId) as HTMLCanvasElement;
  let dragging = false;
  let lastX = 0;
  let lastY = 0;
  canvas.addEventListener("pointerdown", (ev) => {
    dragging = true;
    lastX = ev.clientX;
    lastY = ev.clientY;
    canvas.setPointerCapture(ev.pointerId);
  });
  canvas.addEventListener("pointerup", () => { dragging = false; });
  canvas.addEventListener("pointermove", (ev) => {
    if (!dragging || !transform) {
      return;
    }
    const st = ensureSteering();
    if (!st) {
      return;
    }
    const dx = ev.clientX - lastX;
    const dy = ev.clientY - lastY;
    lastX = ev.clientX;
    lastY = ev.clientY;
    if (ev.shiftKey) {
      st.orbit(pointerDeltaToRotation(view, dx, dy, 0.01));
    } else {
      st.nudge(pointerDeltaToWorld(view, dx, dy, 1 / transform.scale));
    }
  });
}
hookPane("topPane", "top");
hookPane("sidePane", "side");

const KEY_STEP = 0.001; // meters per keypress
document.addEventListener("keydown", (ev) => {
  const st = ensureSteering();
  if (!st) {
    return;
  }
  const steps: Record<string, Vec3> = {
    ArrowLeft: [-KEY_STEP, 0, 0], ArrowRight: [KEY_STEP, 0, 0],
    ArrowUp: [0, KEY_STEP, 0], ArrowDown: [0, -KEY_STEP, 0],
    PageUp: [0, 0, KEY_STEP], PageDown: [0, 0, -KEY_STEP],
  };
  const d = steps[ev.key];
  if (d) {
    st.nudge(d);
    ev.preventDefault();
  }
});

// ------------------------------------------------------------ command loop
setInterval(() => {
  const st = steering;
  if (!st) {
    return;
  }
  const err = client.sendCommand(st.raw, st.rotation, 0.0, performance.now(),
                                 st.dirty);
  if (err === null) {
    st.dirty = false;
  }
}, 20);

// ----------------------------------------------------------------- gauges
function setBar(id: string, fraction: number, saturated: boolean, label: string) {
  const bar = $(id + "Bar");
  bar.style.width = `${(fraction * 100).toFixed(1)}%`;
  bar.classList.toggle("saturated", saturated);
  $(id + "Label").textContent = label;
}

function renderGauges() {
  const tel = selectedTelemetry();
  const info = armInfo(client.state, client.state.selectedArm);
  if (!tel || !info) {
    return;
  }
  const d = distanceGauge(tel.d_es_sq, info.d_safe);
  setBar("dist", d.fraction, d.saturated, d.label);
  const te = errorGauge(tel.t_err_norm);
  setBar("terr", te.fraction, te.saturated, te.label);
  const re = rotationErrorGauge(tel.r_err_norm);
  setBar("rerr", re.fraction, re.saturated, re.label);
  $("constraints").textContent = constraintBadge(tel.n_active, tel.status);
  const f = tel.force;
  $("force").textContent =
    `force [${f[0].toFixed(2)}, ${f[1].toFixed(2)}, ${f[2].toFixed(2)}]`;
}

// ----------------------------------------------------------------- banner
function renderBanner() {
  const el = $("banner");
  const s = client.state;
  if (s.connection !== "connected") {
    el.textContent = s.connection === "connecting"
      ? "connecting..." : "disconnected; retrying";
    el.className = "banner bad";
  } else if (s.spectator) {
    el.textContent = s.banner ?? "spectating";
    el.className = "banner warn";
  } else if (s.banner) {
    el.textContent = s.banner;
    el.className = "banner warn";
  } else if (s.claimedArms.has(s.selectedArm)) {
    el.textContent = `steering arm ${s.selectedArm}`;
    el.className = "banner ok";
  } else {
    el.textContent = "connected; claim an arm to steer";
    el.className = "banner";
  }
}

// ------------------------------------------------------------ render loop
function frame() {
  const s = client.state;
  if (s.hello) {
    const top = $("topPane") as HTMLCanvasElement;
    const side = $("sidePane") as HTMLCanvasElement;
    if (!transform) {
      transform = fitTransform(s.hello, top.width, top.height);
    }
    const st = steering;
    const ms = s.hello.motion_scaling;
    const preview = st && s.claimedArms.has(s.selectedArm)
      ? { arm: s.selectedArm, target: st.previewTarget(ms) }
      : null;
    drawPane(top.getContext("2d")!, "top", s.hello, s.latest, preview, transform);
    drawPane(side.getContext("2d")!, "side", s.hello, s.latest, preview, transform);
  }
  renderGauges();
  renderBanner();
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);

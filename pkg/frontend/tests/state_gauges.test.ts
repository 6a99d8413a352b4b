import { describe, expect, it } from "vitest";

import { constraintBadge, distanceGauge, errorGauge } from "../src/gauges.js";
import { HelloFrame, TelemetryFrame } from "../src/protocol.js";
import {
  applyFrame, armInfo, commandIntervalMs, initialState, markDisconnected,
} from "../src/state.js";

function hello(): HelloFrame {
  return {
    type: "hello",
    version: 1,
    dt: 0.005,
    decimation: 4,
    motion_scaling: 1,
    arms: [{
      arm: 1, d_safe: 2.5e-5, eta_d: 1, sphere_center: [0.3, 0, 0.2],
      claimed: false, t0: [0.38, 0, 0.12], r0: [1, 0, 0, 0],
    }],
  };
}

function telemetry(dEsSq: number): TelemetryFrame {
  return {
    type: "telemetry", time: 0.1, arm: 1, q: [], qd: [],
    t_err: [0, 0, 0], t_err_norm: 0.002, r_err_norm: 0.01,
    d_es_sq: dEsSq, d_es: Math.sqrt(dEsSq), w_es: 0, n_active: 0,
    status: "optimal", force: [0, 0, 0],
  };
}

describe("state store", () => {
  it("hello connects and config echo drives the command interval", () => {
    const s = initialState();
    applyFrame(s, hello());
    expect(s.connection).toBe("connected");
    expect(commandIntervalMs(s)).toBeCloseTo(20, 9);
    expect(armInfo(s, 1)?.d_safe).toBeCloseTo(2.5e-5);
  });

  it("telemetry replaces the latest record per arm", () => {
    const s = initialState();
    applyFrame(s, hello());
    applyFrame(s, telemetry(1e-6));
    applyFrame(s, telemetry(2e-6));
    expect(s.latest.get(1)?.d_es_sq).toBeCloseTo(2e-6);
  });

  it("claim rejection flips to spectator with a banner", () => {
    const s = initialState();
    applyFrame(s, hello());
    applyFrame(s, { type: "error", message: "arm 1 already claimed; spectating" });
    expect(s.spectator).toBe(true);
    expect(s.banner).toMatch(/busy/);
  });

  it("disconnect clears claims and shows the retry banner", () => {
    const s = initialState();
    applyFrame(s, hello());
    applyFrame(s, { type: "claimed", arm: 1 });
    expect(s.claimedArms.has(1)).toBe(true);
    markDisconnected(s);
    expect(s.connection).toBe("disconnected");
    expect(s.claimedArms.size).toBe(0);
  });
});

describe("gauges", () => {
  it("distance gauge thresholds come from the config echo", () => {
    const g = distanceGauge(2.5e-5 / 4, 2.5e-5);   // half the limit radius
    expect(g.fraction).toBeCloseTo(0.5, 9);
    expect(g.saturated).toBe(false);
  });

  it("saturates (clamps, not exceeds) past the limit", () => {
    const g = distanceGauge(2.5e-5 * 1.1, 2.5e-5);
    expect(g.fraction).toBe(1);
    expect(g.saturated).toBe(true);
  });

  it("handles a missing sphere", () => {
    const g = distanceGauge(1e-6, null);
    expect(g.label).toBe("n/a");
  });

  it("error gauge scales to its display span", () => {
    expect(errorGauge(0.005, 0.01).fraction).toBeCloseTo(0.5, 9);
  });

  it("constraint badge surfaces solver state", () => {
    expect(constraintBadge(0, "optimal")).toBe("unconstrained");
    expect(constraintBadge(3, "optimal")).toBe("3 active rows");
    expect(constraintBadge(0, "max_iter")).toMatch(/max_iter/);
  });
});

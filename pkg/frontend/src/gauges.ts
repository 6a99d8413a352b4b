// Gauge models. Thresholds always come from the hello frame's config echo,
// never from constants baked into the UI.

export interface GaugeReading {
  fraction: number;     // 0..1 of the display span
  saturated: boolean;   // at or past the limit (display clamps, value shown)
  label: string;
}

// Shaft-to-entry-sphere distance against sqrt(D_safe). The gauge clamps at
// the limit so a violating drag shows a pinned, highlighted needle rather
// than running off the dial.
export function distanceGauge(dEsSq: number, dSafeSq: number | null): GaugeReading {
  if (dSafeSq === null || !Number.isFinite(dEsSq)) {
    return { fraction: 0, saturated: false, label: "n/a" };
  }
  const d = Math.sqrt(Math.max(dEsSq, 0));
  const limit = Math.sqrt(dSafeSq);
  const fraction = Math.min(d / limit, 1);
  return {
    fraction,
    saturated: d >= limit * (1 - 1e-9),
    label: `${(d * 1e3).toFixed(3)} / ${(limit * 1e3).toFixed(2)} mm`,
  };
}

// Task error gauges use a soft display span: full scale at `span` meters
// (default 10 mm) purely for display; there is no hard limit to saturate.
export function errorGauge(errNorm: number, span = 0.01): GaugeReading {
  const fraction = Math.min(Math.abs(errNorm) / span, 1);
  return {
    fraction,
    saturated: fraction >= 1,
    label: `${(errNorm * 1e3).toFixed(3)} mm`,
  };
}

export function rotationErrorGauge(errNorm: number, span = 0.5): GaugeReading {
  const fraction = Math.min(Math.abs(errNorm) / span, 1);
  return {
    fraction,
    saturated: fraction >= 1,
    label: errNorm.toFixed(4),
  };
}

// Active-constraint indicator: 18 joint-limit rows + entry-sphere rows.
export function constraintBadge(nActive: number, status: string): string {
  if (status !== "optimal") {
    return `solver: ${status}`;
  }
  if (nActive === 0) {
    return "unconstrained";
  }
  return `${nActive} active row${nActive === 1 ? "" : "s"}`;
}

/**
 * The three run figures: channel state, link adaptation, platoon distances.
 *
 * Layouts mirror the reference experiment's presentation: dual-axis time
 * series with fixed ranges (BLER capped at 0.3, MCS 0-30, delay 0-400 ms,
 * distance 3-15 m) so different runs are visually comparable.
 */

import type { RunBundle } from "./bundle.js";
import { channelWindowMeans, delayWindowMeans } from "./series.js";
import { renderChart, type Series } from "./svg.js";

const ORANGE = "#d55e00";
const BLUE = "#0173b2";
const GREEN = "#029e73";

function xTicks(duration: number): number[] {
  const step = duration <= 120 ? 25 : Math.ceil(duration / 5 / 25) * 25;
  const ticks: number[] = [];
  for (let t = 0; t <= duration + 1e-9; t += step) ticks.push(t);
  return ticks;
}

function requireRows(bundle: RunBundle, rows: unknown[], file: string): void {
  if (rows.length === 0) {
    throw new Error(`${file} in ${bundle.dir} has no data rows; nothing to plot`);
  }
}

/** Cross-vehicle mean RSRP against mean uplink BLER. */
export function plotChannel(bundle: RunBundle): string {
  requireRows(bundle, bundle.channel, "channel.csv");
  const duration = bundle.run.duration;
  const rsrp = channelWindowMeans(bundle.channel, (r) => r.rsrpDbm);
  const rsrpSeries: Series = {
    label: "avg RSRP [dBm]",
    color: ORANGE,
    axis: "left",
    points: [...rsrp.entries()].map(([w, v]) => [w, v]),
  };
  const blerPoints: Array<[number, number | null]> = bundle.link
    .filter((r) => r.veh === "all" && r.dir === "UL")
    .map((r) => [r.t, r.avgBler]);
  const blerSeries: Series = {
    label: "avg uplink BLER",
    color: BLUE,
    axis: "right",
    points: blerPoints,
  };
  return renderChart({
    title: "Wireless channel state",
    xLabel: "time [s]",
    xRange: [0, duration],
    xTicks: xTicks(duration),
    left: { label: "average RSRP [dBm]", range: [-95, -55], ticks: [-90, -80, -70, -60] },
    right: { label: "average BLER", range: [0, 0.3], ticks: [0, 0.1, 0.2, 0.3] },
    series: [rsrpSeries, blerSeries],
  });
}

/** Mean uplink MCS against mean end-to-end application delay. */
export function plotLink(bundle: RunBundle, opts: { perVehicle?: boolean } = {}): string {
  requireRows(bundle, bundle.link, "link.csv");
  requireRows(bundle, bundle.app, "app.csv");
  const duration = bundle.run.duration;
  const series: Series[] = [];
  series.push({
    label: "avg MCS",
    color: ORANGE,
    axis: "left",
    points: bundle.link
      .filter((r) => r.veh === "all" && r.dir === "UL")
      .map((r) => [r.t, r.avgMcs]),
  });
  if (opts.perVehicle) {
    for (const veh of bundle.run.vehicles) {
      series.push({
        label: `MCS ${veh}`,
        color: "#999999",
        axis: "left",
        width: 1.0,
        dash: "4 3",
        points: bundle.link
          .filter((r) => r.veh === veh && r.dir === "UL")
          .map((r) => [r.t, r.avgMcs]),
      });
    }
  }
  const delays = delayWindowMeans(bundle.app);
  series.push({
    label: "avg delay [ms]",
    color: BLUE,
    axis: "right",
    points: [...delays.entries()].map(([w, v]) => [w, v]),
  });
  return renderChart({
    title: "Link adaptation and end-to-end delay",
    xLabel: "time [s]",
    xRange: [0, duration],
    xTicks: xTicks(duration),
    left: { label: "average MCS", range: [0, 30], ticks: [0, 10, 20, 30] },
    right: { label: "average delay [ms]", range: [0, 400], ticks: [0, 100, 200, 300, 400] },
    series,
  });
}

/** Inter-vehicle distances with steady band and excursion annotation. */
export function plotDistance(bundle: RunBundle): string {
  requireRows(bundle, bundle.mobility, "mobility.csv");
  const duration = bundle.run.duration;
  const followers = bundle.run.vehicles.slice(1);
  const colors = [BLUE, ORANGE, GREEN];
  const series: Series[] = followers.map((veh, i) => ({
    label: `gap ahead of ${veh}`,
    color: colors[i % colors.length],
    axis: "left",
    points: bundle.mobility
      .filter((r) => r.veh === veh)
      .map((r) => [r.t, r.gapFront]),
  }));

  const annotations = [];
  let peak: { x: number; y: number } | null = null;
  for (const s of series) {
    for (const [x, y] of s.points) {
      if (y !== null && (peak === null || y > peak.y)) peak = { x, y };
    }
  }
  if (peak && peak.y > 6.0) {
    annotations.push({
      x: peak.x,
      y: Math.min(peak.y, 14.5),
      axis: "left" as const,
      text: `peak ${peak.y.toFixed(1)} m`,
    });
  }

  return renderChart({
    title: "Distance between the vehicles",
    xLabel: "time [s]",
    xRange: [0, duration],
    xTicks: xTicks(duration),
    left: { label: "distance [m]", range: [3, 15], ticks: [5, 7.5, 10, 12.5, 15] },
    series,
    annotations,
    bands: [
      { yLow: 4.5, yHigh: 5.5, axis: "left", color: "#90c090", label: "steady band 4.5-5.5 m" },
    ],
  });
}

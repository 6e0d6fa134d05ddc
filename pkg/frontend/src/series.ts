/** Windowing helpers shared by the plots and the checker. */

import type { AppRow, ChannelRow, RunBundle } from "./bundle.js";

/** 1-based index of the 1 s window (w-1, w] containing time u. */
export function windowOf(u: number): number {
  const w = Math.floor(u);
  return u <= w ? w : w + 1;
}

export function mean(values: number[]): number {
  let total = 0;
  for (const v of values) total += v;
  return total / values.length;
}

/** Per-second cross-vehicle mean of a channel column. */
export function channelWindowMeans(
  rows: ChannelRow[],
  value: (r: ChannelRow) => number
): Map<number, number> {
  const acc = new Map<number, number[]>();
  for (const r of rows) {
    const w = windowOf(r.t);
    const list = acc.get(w) ?? [];
    list.push(value(r));
    acc.set(w, list);
  }
  return new Map([...acc.entries()].sort((a, b) => a[0] - b[0]).map(([w, v]) => [w, mean(v)]));
}

/** Per-second per-vehicle mean RSRP, keyed "veh|window". */
export function rsrpByVehicleWindow(rows: ChannelRow[]): Map<string, number> {
  const acc = new Map<string, number[]>();
  for (const r of rows) {
    const key = `${r.veh}|${windowOf(r.t)}`;
    const list = acc.get(key) ?? [];
    list.push(r.rsrpDbm);
    acc.set(key, list);
  }
  return new Map([...acc.entries()].map(([k, v]) => [k, mean(v)]));
}

/** Per-second mean application delay across all vehicles, ms. */
export function delayWindowMeans(rows: AppRow[]): Map<number, number> {
  const acc = new Map<number, number[]>();
  for (const r of rows) {
    const w = windowOf(r.t);
    const list = acc.get(w) ?? [];
    list.push(r.delayMs);
    acc.set(w, list);
  }
  return new Map([...acc.entries()].sort((a, b) => a[0] - b[0]).map(([w, v]) => [w, mean(v)]));
}

/** ACC intervals [start, end] per follower, from the mobility mode column. */
export function accEpisodes(bundle: RunBundle): Map<string, Array<[number, number]>> {
  const out = new Map<string, Array<[number, number]>>();
  for (const veh of bundle.run.vehicles.slice(1)) {
    const times = bundle.mobility.filter((r) => r.veh === veh && r.mode === "ACC").map((r) => r.t);
    const episodes: Array<[number, number]> = [];
    for (const t of times.sort((a, b) => a - b)) {
      const last = episodes[episodes.length - 1];
      if (last && t - last[1] <= 0.11) {
        last[1] = t;
      } else {
        episodes.push([t, t]);
      }
    }
    out.set(veh, episodes);
  }
  return out;
}

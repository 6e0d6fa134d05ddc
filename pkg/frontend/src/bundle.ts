/**
 * RunBundle: a completed simulation output directory loaded into memory.
 *
 * Only the external interface is consumed: run.json plus the four metric
 * CSVs. Headers are validated against the documented schemas and row
 * counts against the cadences, so truncated or foreign files are detected
 * before any check runs.
 */

import { readFileSync } from "fs";
import path from "path";

import { columnIndex, parseCsv, toNumber, toNumberOrNull, type CsvTable } from "./csv.js";

export interface MobilityRow {
  t: number;
  veh: string;
  s: number;
  x: number;
  y: number;
  speed: number;
  accel: number;
  gapFront: number | null;
  mode: string;
}

export interface ChannelRow {
  t: number;
  veh: string;
  los: boolean;
  d3d: number;
  plDb: number;
  shadowDb: number;
  rsrpDbm: number;
  snrDb: number;
}

export interface LinkRow {
  t: number;
  veh: string;
  dir: "UL" | "DL";
  avgMcs: number | null;
  avgBler: number | null;
  retxCount: number;
  txOk: number;
  txDrop: number;
}

export interface AppRow {
  t: number;
  veh: string;
  from: string;
  seq: number;
  delayMs: number;
  mode: string;
}

export interface RunInfo {
  status: string;
  seed: number;
  duration: number;
  dtSim: number;
  forceDegradation: [number, number] | null;
  vehicles: string[];
  channelUpdatePeriod: number;
}

export interface RunBundle {
  dir: string;
  run: RunInfo;
  mobility: MobilityRow[];
  channel: ChannelRow[];
  link: LinkRow[];
  app: AppRow[];
  /** files whose row counts fall short of the cadence-implied count */
  truncated: string[];
}

const HEADERS = {
  "mobility.csv": ["t", "veh", "s", "x", "y", "speed", "accel", "gap_front", "mode"],
  "channel.csv": ["t", "veh", "los", "d3d", "pl_db", "shadow_db", "rsrp_dbm", "snr_db"],
  "link.csv": ["t", "veh", "dir", "avg_mcs", "avg_bler", "retx_count", "tx_ok", "tx_drop"],
  "app.csv": ["t", "veh", "from", "seq", "delay_ms", "mode"],
} as const;

function loadTable(dir: string, file: keyof typeof HEADERS): CsvTable {
  const table = parseCsv(readFileSync(path.join(dir, file), "utf-8"));
  for (const name of HEADERS[file]) {
    columnIndex(table, name, file);
  }
  if (table.header.length !== HEADERS[file].length) {
    throw new Error(`${file}: unexpected extra columns (${table.header.join(",")})`);
  }
  return table;
}

export function loadRunBundle(dir: string): RunBundle {
  const runDoc = JSON.parse(readFileSync(path.join(dir, "run.json"), "utf-8"));
  const scenario = runDoc.scenario ?? {};
  const run: RunInfo = {
    status: String(runDoc.status ?? "unknown"),
    seed: Number(runDoc.seed),
    duration: Number(runDoc.duration),
    dtSim: Number(runDoc.dt_sim),
    forceDegradation: runDoc.force_degradation
      ? [Number(runDoc.force_degradation[0]), Number(runDoc.force_degradation[1])]
      : null,
    vehicles: (scenario.vehicles ?? []).map((v: { id: string }) => String(v.id)),
    channelUpdatePeriod: Number(scenario.channel?.update_period ?? 0.01),
  };

  const mobilityTable = loadTable(dir, "mobility.csv");
  const mobility: MobilityRow[] = mobilityTable.rows.map((r) => ({
    t: toNumber(r[0]),
    veh: r[1],
    s: toNumber(r[2]),
    x: toNumber(r[3]),
    y: toNumber(r[4]),
    speed: toNumber(r[5]),
    accel: toNumber(r[6]),
    gapFront: toNumberOrNull(r[7]),
    mode: r[8],
  }));

  const channelTable = loadTable(dir, "channel.csv");
  const channel: ChannelRow[] = channelTable.rows.map((r) => ({
    t: toNumber(r[0]),
    veh: r[1],
    los: r[2] === "1",
    d3d: toNumber(r[3]),
    plDb: toNumber(r[4]),
    shadowDb: toNumber(r[5]),
    rsrpDbm: toNumber(r[6]),
    snrDb: toNumber(r[7]),
  }));

  const linkTable = loadTable(dir, "link.csv");
  const link: LinkRow[] = linkTable.rows.map((r) => ({
    t: toNumber(r[0]),
    veh: r[1],
    dir: r[2] as "UL" | "DL",
    avgMcs: toNumberOrNull(r[3]),
    avgBler: toNumberOrNull(r[4]),
    retxCount: toNumber(r[5]),
    txOk: toNumber(r[6]),
    txDrop: toNumber(r[7]),
  }));

  const appTable = loadTable(dir, "app.csv");
  const app: AppRow[] = appTable.rows.map((r) => ({
    t: toNumber(r[0]),
    veh: r[1],
    from: r[2],
    seq: toNumber(r[3]),
    delayMs: toNumber(r[4]),
    mode: r[5],
  }));

  const nVeh = run.vehicles.length;
  const truncated: string[] = [];
  if (run.status === "complete" && nVeh > 0) {
    const expect = {
      "mobility.csv": [mobility.length, Math.round(run.duration / 0.1) * nVeh],
      "channel.csv": [channel.length, Math.round(run.duration / run.channelUpdatePeriod) * nVeh],
      "link.csv": [link.length, Math.round(run.duration) * (nVeh + 1) * 2],
    } as const;
    for (const [file, [actual, wanted]] of Object.entries(expect)) {
      if (actual < wanted) {
        truncated.push(file);
      }
    }
  } else if (run.status !== "complete") {
    truncated.push("run.json");
  }

  return { dir, run, mobility, channel, link, app, truncated };
}

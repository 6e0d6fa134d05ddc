#!/usr/bin/env python3
"""Run the bundled scenario end to end and summarize the output tables.

Equivalent to `platoonsim run luxembourg_loop --out <dir>`, then a quick
pass over the four CSVs: gap band, RSRP sweep, per-second BLER extremes,
and the delay distribution seen by the platooning application. Pass
--force-degradation to reproduce the fallback episode.
"""

import argparse
import csv
import statistics
import tempfile
from collections import defaultdict
from pathlib import Path

from platoonsim.orchestrator import run_scenario
from platoonsim.scenario import bundled_scenario_path, load_scenario, validate


def read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=None)
    ap.add_argument("--force-degradation", nargs=2, type=float, metavar=("T0", "DUR"))
    opts = ap.parse_args()

    out = Path(opts.out) if opts.out else Path(tempfile.mkdtemp(prefix="platoonsim_"))
    scenario = validate(load_scenario(bundled_scenario_path("luxembourg_loop")))
    force = tuple(opts.force_degradation) if opts.force_degradation else None
    counters = run_scenario(scenario, out, force_degradation=force)
    print(f"run complete -> {out}")
    print(f"counters: {counters}")

    mob = read(out / "mobility.csv")
    gaps = [float(r["gap_front"]) for r in mob if r["gap_front"] != ""]
    modes = {r["mode"] for r in mob}
    print(f"\ngaps: min {min(gaps):.2f} m, max {max(gaps):.2f} m; modes seen: {sorted(modes)}")

    chan = read(out / "channel.csv")
    rsrp = [float(r["rsrp_dbm"]) for r in chan]
    sf = [float(r["rsrp_dbm"]) + float(r["shadow_db"]) for r in chan]
    print(f"RSRP: [{min(rsrp):.1f}, {max(rsrp):.1f}] dBm "
          f"(shadow-free [{min(sf):.2f}, {max(sf):.2f}])")

    per_window = defaultdict(list)
    for r in read(out / "link.csv"):
        if r["dir"] == "UL" and r["veh"] == "all" and r["avg_bler"] != "":
            per_window[float(r["t"])] = float(r["avg_bler"])
    worst = sorted(per_window.items(), key=lambda kv: -kv[1])[:5]
    print("worst uplink BLER windows: " + ", ".join(f"t={t:.0f}s {b:.3f}" for t, b in worst))

    delays = [float(r["delay_ms"]) for r in read(out / "app.csv")]
    print(f"application delay: median {statistics.median(delays):.0f} ms, "
          f"p99 {sorted(delays)[int(0.99 * len(delays))]:.0f} ms, max {max(delays):.0f} ms")


if __name__ == "__main__":
    main()

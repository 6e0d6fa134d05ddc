#!/usr/bin/env python3
"""Step responses of the two gap controllers.

A two-vehicle string follows a leader that brakes from 25 to 15 m/s. The
same disturbance is played through the cooperative controller (fresh
telemetry every step) and through the radar-only fallback, showing the
constant 5 m gap versus the speed-proportional headway gap.
"""

import argparse

from platoonsim.control import ControllerParams, acc_accel, cacc_accel, make_control_msg
from platoonsim.mobility import VehicleSpec, VehicleState, gap_front, step_vehicle

DT = 0.01
LOOP = 10_000.0


def simulate(mode: str, seconds: float = 30.0):
    p = ControllerParams()
    spec = VehicleSpec(id="x")
    lead_spec = VehicleSpec(id="lead", max_accel=1.2, max_decel=1.2)
    lead = VehicleState(id="lead", s=109.0, speed=25.0)
    ego = VehicleState(id="ego", s=100.0, speed=25.0)
    rows = []
    for k in range(int(seconds / DT)):
        t = k * DT
        target = 15.0 if 5.0 <= t < 20.0 else 25.0
        lead_cmd = 1.0 * (target - lead.speed)
        gap = gap_front(ego.s, lead.s, LOOP, spec.length)
        if mode == "cacc":
            msg = make_control_msg("lead", lead.s, lead.speed, lead.accel, 0, 0)
            cmd = cacc_accel(ego.speed, msg, msg, gap, p)
        else:
            cmd = acc_accel(ego.speed, gap, lead.speed, p)
        lead = step_vehicle(lead, lead_spec, lead_cmd, DT, LOOP)
        ego = step_vehicle(ego, spec, cmd, DT, LOOP)
        if k % 50 == 0:
            rows.append((t, lead.speed, ego.speed, gap_front(ego.s, lead.s, LOOP, spec.length)))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--plot", action="store_true")
    opts = ap.parse_args()

    traces = {m: simulate(m) for m in ("cacc", "acc")}
    for mode, rows in traces.items():
        gaps = [g for _, _, _, g in rows]
        print(f"{mode.upper():4s}: gap min {min(gaps):6.2f} m, max {max(gaps):6.2f} m, "
              f"final {gaps[-1]:6.2f} m")
    print("\nthe cooperative controller holds ~5 m through the braking wave;")
    print("the headway policy re-targets 1.2 s x speed, so its gap breathes with speed")

    if opts.plot:
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(7, 4))
        for mode, rows in traces.items():
            ax.plot([r[0] for r in rows], [r[3] for r in rows], label=mode.upper())
        ax.set_xlabel("time [s]")
        ax.set_ylabel("gap to front [m]")
        ax.grid(alpha=0.4)
        ax.legend()
        fig.tight_layout()
        fig.savefig("controllers.png", dpi=120)
        print("wrote controllers.png")


if __name__ == "__main__":
    main()

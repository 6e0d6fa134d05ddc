"""Command-line entry point: run simulations, check scenarios, print version.

Exit codes: 0 on success, 2 for scenario syntax/schema/validation problems,
3 for runtime failures.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from ._version import __version__
from .orchestrator import run_scenario
from .scenario import (
    ConfigSyntaxError,
    SchemaError,
    ValidationError,
    bundled_scenario_path,
    load_scenario,
    validate,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def _resolve_scenario(arg: str) -> Path:
    """Accept a file path or the bare name of a bundled scenario."""
    p = Path(arg)
    if p.is_file():
        return p
    if "/" not in arg and "." not in arg:
        try:
            return bundled_scenario_path(arg)
        except FileNotFoundError:
            pass
    raise FileNotFoundError(f"scenario file not found: {arg}")


def _load_validated(arg: str):
    config = load_scenario(_resolve_scenario(arg))
    return config, validate(config)


def cmd_run(args) -> int:
    config, validated = _load_validated(args.scenario)
    out_dir = Path(args.out)
    force = tuple(args.force_degradation) if args.force_degradation else None
    t0 = time.monotonic()
    counters = run_scenario(
        validated,
        out_dir,
        seed=args.seed,
        force_degradation=force,
        realtime=args.realtime,
    )
    wall = time.monotonic() - t0
    seed = config.seed if args.seed is None else args.seed
    print(f"simulated {config.duration:g} s in {wall:.1f} s wall (seed {seed})")
    print(
        "packets: sent {sent}, uplink ok/drop {ul_ok}/{ul_drop}, "
        "downlink ok/drop {dl_ok}/{dl_drop}, app received {app_rx}".format(**counters)
    )
    print(f"outputs in {out_dir}/")
    return EXIT_OK


def cmd_check(args) -> int:
    config, validated = _load_validated(args.scenario)
    geometry = validated.path
    print(f"scenario OK: {len(config.vehicles)} vehicle(s), max_nodes {config.max_nodes}")
    print(f"path: {len(config.path)} waypoints, total length {geometry.total_length:.6g} m")
    print(f"buildings: {len(config.buildings)} polygon(s)")
    for i, bbox in enumerate(validated.buildings.bboxes):
        print(f"  [{i}] bbox x [{bbox[0]:g}, {bbox[2]:g}], y [{bbox[1]:g}, {bbox[3]:g}]")
    print(
        f"cadences: dt_sim {config.dt_sim:g} s, control every {validated.ticks_per_control} "
        f"tick(s), channel every {validated.ticks_per_channel} tick(s), "
        f"{validated.n_steps} steps for {config.duration:g} s"
    )
    return EXIT_OK


def cmd_version(_args) -> int:
    print(__version__)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="platoonsim",
        description="Deterministic platooning-over-cellular co-simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write CSV outputs")
    p_run.add_argument("scenario", help="scenario file, or the name of a bundled scenario")
    p_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_run.add_argument("--out", default="out", help="output directory (default: out)")
    p_run.add_argument(
        "--realtime", action="store_true", help="pace the loop to wall clock (results unchanged)"
    )
    p_run.add_argument(
        "--force-degradation",
        nargs=2,
        type=float,
        metavar=("T0", "DUR"),
        help="delay all control packets sent in [T0, T0+DUR) by at least 400 ms",
    )
    p_run.set_defaults(func=cmd_run)

    p_check = sub.add_parser("check", help="validate a scenario and print derived quantities")
    p_check.add_argument("scenario", help="scenario file, or the name of a bundled scenario")
    p_check.set_defaults(func=cmd_check)

    p_version = sub.add_parser("version", help="print the package version")
    p_version.set_defaults(func=cmd_version)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigSyntaxError, SchemaError, ValidationError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {e.__class__.__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())

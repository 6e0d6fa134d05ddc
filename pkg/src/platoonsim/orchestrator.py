"""Simulation orchestrator: world state, logical clock, deterministic replay.

A fixed-step engine advances the world by dt_sim per tick with a fixed
intra-tick phase order: controller commands from the previous tick's
snapshot, mobility integration, channel refresh, beacon generation and
uplink submission, downlink processing and application delivery, fallback
FSM updates, then metrics emission. Vehicles are visited in scenario order
inside every phase, all randomness comes from named streams derived from
the master seed, and the data plane flows over an in-process bus, so the
complete output is a pure function of (scenario, seed, code version).
"""

from __future__ import annotations

import hashlib
import heapq
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._version import __version__
from . import control, link, metrics, mobility
from .bus import InProcessBus, InProcessClient, TcpBroker
from .channel import ChannelSample, ShadowState, sample_channel
from .control import CONTROL_PERIOD, STALENESS_PERIODS, ControlMessage, FallbackState
from .scenario import ValidatedScenario, config_to_dict

FORCED_DELAY = 0.400  # s, injected by --force-degradation


class DuplicateLabel(Exception):
    pass


@dataclass
class RngStream:
    label: str
    gen: np.random.Generator


def derive_rng(master_seed: int, label: str, registry: set | None = None) -> RngStream:
    """Named random stream: a stable hash of (seed, label) keys a PCG64.

    Equal inputs give identical streams on every platform and run; distinct
    labels give independent streams. A registry (one per run) rejects
    deriving the same label twice.
    """
    if not label:
        raise ValueError("stream label must be non-empty")
    if registry is not None:
        if label in registry:
            raise DuplicateLabel(f"rng stream {label!r} derived twice")
        registry.add(label)
    digest = hashlib.sha256(f"{master_seed}/{label}".encode("utf-8")).digest()
    seed = int.from_bytes(digest[:16], "big")
    return RngStream(label=label, gen=np.random.Generator(np.random.PCG64(seed)))


@dataclass
class AppRuntime:
    """Per-vehicle application state: beacons seen, fallback FSM, bus client."""

    veh_id: str
    client: InProcessClient
    fsm: FallbackState = field(default_factory=FallbackState)
    seq: int = 0
    last_msg: dict = field(default_factory=dict)  # sender -> ControlMessage
    last_rx: dict = field(default_factory=dict)  # sender -> reception time, s
    pending_delays: list = field(default_factory=list)  # samples this control period


class _WindowAcc:
    """Per-(vehicle, direction) link statistics bucketed by 1 s window index."""

    def __init__(self):
        self.attempts: dict[int, int] = {}
        self.failures: dict[int, int] = {}
        self.mcs_sum: dict[int, int] = {}
        self.retx: dict[int, int] = {}
        self.tx_ok: dict[int, int] = {}
        self.tx_drop: dict[int, int] = {}

    def add_outcome(self, out: link.LinkOutcome, window_of) -> None:
        n = out.attempts
        for i, u in enumerate(out.attempt_times):
            w = window_of(u)
            failed = i < n - 1 or not out.delivered
            self.attempts[w] = self.attempts.get(w, 0) + 1
            self.mcs_sum[w] = self.mcs_sum.get(w, 0) + out.mcs_used
            if failed:
                self.failures[w] = self.failures.get(w, 0) + 1
            if i > 0:
                self.retx[w] = self.retx.get(w, 0) + 1
        # packet fates keyed by submission window so counts always reconcile,
        # even for chains still running when the window (or the run) closes
        w0 = window_of(out.enqueue_t)
        bucket = self.tx_ok if out.delivered else self.tx_drop
        bucket[w0] = bucket.get(w0, 0) + 1

    def window_row(self, w: int) -> tuple:
        """(avg_mcs, avg_bler, retx, tx_ok, tx_drop) with None means for gaps."""
        att = self.attempts.get(w, 0)
        if att == 0:
            return (None, None, 0, self.tx_ok.get(w, 0), self.tx_drop.get(w, 0))
        return (
            self.mcs_sum.get(w, 0) / att,
            self.failures.get(w, 0) / att,
            self.retx.get(w, 0),
            self.tx_ok.get(w, 0),
            self.tx_drop.get(w, 0),
        )


class Simulation:
    """Owns the world state and drives it to the scenario's end time."""

    def __init__(
        self,
        scenario: ValidatedScenario,
        out_dir: str | Path,
        seed: int | None = None,
        force_degradation: tuple[float, float] | None = None,
        realtime: bool = False,
    ):
        self.val = scenario
        self.cfg = scenario.config
        self.seed = self.cfg.seed if seed is None else seed
        self.out_dir = Path(out_dir)
        self.force_degradation = force_degradation
        self.realtime = realtime

        self.tick = 0
        self.dt = self.cfg.dt_sim
        self.path_length = scenario.path.total_length

        self._rng_registry: set = set()
        self.rng_labels: list[str] = []

        self.specs = {v.id: v for v in self.cfg.vehicles}
        self.order = [v.id for v in self.cfg.vehicles]
        self.states: dict[str, mobility.VehicleState] = {
            v.id: mobility.VehicleState(id=v.id, s=v.initial_s, speed=v.initial_speed)
            for v in self.cfg.vehicles
        }

        self.bus = InProcessBus(max_clients=self.cfg.bus.max_clients)
        self.orch_client = self.bus.connect("orchestrator")
        self.chan_client = self.bus.connect("channel-generator")
        self.chan_client.subscribe("chan/update")
        self.metrics_client = self.bus.connect("metrics")
        self.metrics_client.subscribe("metrics/#")

        self.apps: dict[str, AppRuntime] = {}
        for vid in self.order:
            client = self.bus.connect(f"app/{vid}")
            client.subscribe(f"veh/{vid}/ctrl")
            self.apps[vid] = AppRuntime(veh_id=vid, client=client)

        self.shadow = {vid: ShadowState() for vid in self.order}
        self.chan: dict[str, ChannelSample] = {}
        self.shadow_rng = {
            vid: self._rng(f"shadow/{vid}") for vid in self.order
        }
        self.ul_state = {vid: link.LinkState(veh_id=vid, leg="UL") for vid in self.order}
        self.dl_state = {vid: link.LinkState(veh_id=vid, leg="DL") for vid in self.order}
        self.ul_rng = {vid: self._rng(f"harq/{vid}/UL") for vid in self.order}
        self.dl_rng = {vid: self._rng(f"harq/{vid}/DL") for vid in self.order}

        self._serial = 0
        self.dl_pending: list = []  # heap of (enqueue_t, serial, receiver, msg)
        self.deliveries: list = []  # heap of (deliver_t, serial, receiver, msg)
        self.ul_acc = {vid: _WindowAcc() for vid in self.order}
        self.dl_acc = {vid: _WindowAcc() for vid in self.order}

        self.counters = {"sent": 0, "ul_ok": 0, "ul_drop": 0, "dl_ok": 0, "dl_drop": 0, "app_rx": 0}

        self.tcp_broker = None
        if not self.cfg.bus.inprocess:
            self.tcp_broker = TcpBroker(
                port=self.cfg.bus.listen_port, max_clients=self.cfg.bus.max_clients
            )

        self.sinks = {
            "mobility": metrics.CsvSink(self.out_dir / "mobility.csv", metrics.MOBILITY_HEADER),
            "channel": metrics.CsvSink(self.out_dir / "channel.csv", metrics.CHANNEL_HEADER),
            "link": metrics.CsvSink(self.out_dir / "link.csv", metrics.LINK_HEADER),
            "app": metrics.CsvSink(self.out_dir / "app.csv", metrics.APP_HEADER),
        }

    def _rng(self, label: str) -> np.random.Generator:
        stream = derive_rng(self.seed, label, self._rng_registry)
        self.rng_labels.append(label)
        return stream.gen

    @property
    def t(self) -> float:
        return self.tick * self.dt

    def _ns(self, t: float) -> int:
        return round(t * 1e9)

    def _window_of(self, u: float) -> int:
        """1-based index of the 1 s metrics window (w-1, w] containing u."""
        w = int(u)
        return w if u <= w else w + 1

    def _publish(self, topic: str, payload: dict, ts: float) -> None:
        raw = json.dumps(payload, separators=(",", ":")).encode("utf-8")
        self.orch_client.publish(topic, raw, ts=self._ns(ts))
        if self.tcp_broker is not None:
            self.tcp_broker.publish_local("orchestrator", topic, raw, ts=self._ns(ts))

    # -- intra-tick phases ------------------------------------------------

    def _commands(self) -> dict[str, float]:
        """Phase 1: controller commands from the previous tick's snapshot."""
        cmds = {}
        for idx, vid in enumerate(self.order):
            st = self.states[vid]
            if idx == 0:
                target = mobility.leader_target_speed(self.t, self.cfg.leader)
                cmds[vid] = control.leader_accel(st.speed, target)
                continue
            front_id = self.order[idx - 1]
            leader_id = self.order[0]
            front = self.states[front_id]
            gap = mobility.gap_front(
                st.s, front.s, self.path_length, self.specs[front_id].length
            )
            app = self.apps[vid]
            if app.fsm.mode == control.MODE_ACC:
                cmds[vid] = control.acc_accel(st.speed, gap, front.speed, self.cfg.controller)
            else:
                front_msg = app.last_msg.get(front_id)
                leader_msg = app.last_msg.get(leader_id)
                if front_msg is None or leader_msg is None:
                    cmds[vid] = 0.0  # no telemetry yet: hold
                else:
                    cmds[vid] = control.cacc_accel(
                        st.speed, front_msg, leader_msg, gap, self.cfg.controller
                    )
        return cmds

    def _integrate(self, cmds: dict[str, float]) -> None:
        for vid in self.order:
            self.states[vid] = mobility.step_vehicle(
                self.states[vid], self.specs[vid], cmds[vid], self.dt, self.path_length
            )

    def _sample_channel(self, t_new: float) -> None:
        positions = {vid: self.val.path.position(self.states[vid].s) for vid in self.order}
        self._publish(
            "chan/update",
            {"t": t_new, "positions": {vid: [round(p[0], 9), round(p[1], 9)] for vid, p in positions.items()}},
            t_new,
        )
        self.chan_client.drain()
        rows = []
        for vid in self.order:
            sample = sample_channel(
                vid,
                positions[vid],
                self.cfg.gnb.position,
                self.cfg.channel,
                self.val.buildings,
                self.shadow[vid],
                self.shadow_rng[vid],
                t_new,
            )
            self.chan[vid] = sample
            rows.append(
                [t_new, vid, sample.los, sample.d3d, sample.pl, sample.shadow, sample.rsrp, sample.snr]
            )
        for row in rows:
            self.sinks["channel"].append_row(row)

    def _send_beacons(self, t_new: float) -> None:
        """Phase 4: beacon per vehicle onto its uplink; schedule DL clones."""
        for vid in self.order:
            st = self.states[vid]
            x, y = self.val.path.position(st.s)
            self._publish(
                f"veh/{vid}/state",
                {"id": vid, "t": t_new, "s": round(st.s, 9), "x": round(x, 9), "y": round(y, 9),
                 "speed": round(st.speed, 9), "accel": round(st.accel, 9), "mode": st.mode},
                t_new,
            )
            app = self.apps[vid]
            msg = control.make_control_msg(vid, st.s, st.speed, st.accel, app.seq, self._ns(t_new))
            app.seq += 1
            self.counters["sent"] += 1
            out = link.transmit(
                self.cfg.link.packet_bytes,
                self.ul_state[vid],
                self.chan[vid].snr,
                t_new,
                self.ul_rng[vid],
                self.cfg.link,
            )
            self.ul_acc[vid].add_outcome(out, self._window_of)
            if not out.delivered:
                self.counters["ul_drop"] += 1
                continue
            self.counters["ul_ok"] += 1
            dl_enqueue = out.deliver_t + self.cfg.link.core_latency
            for rid in self.order:
                if rid != vid:
                    self._serial += 1
                    heapq.heappush(self.dl_pending, (dl_enqueue, self._serial, rid, msg))

    def _process_downlinks(self, t_new: float) -> None:
        """Phase 5: run due downlink clones; schedule application deliveries."""
        while self.dl_pending and self.dl_pending[0][0] <= t_new:
            enqueue_t, _, rid, msg = heapq.heappop(self.dl_pending)
            out = link.transmit(
                self.cfg.link.packet_bytes,
                self.dl_state[rid],
                self.chan[rid].snr,
                enqueue_t,
                self.dl_rng[rid],
                self.cfg.link,
            )
            self.dl_acc[rid].add_outcome(out, self._window_of)
            if not out.delivered:
                self.counters["dl_drop"] += 1
                continue
            self.counters["dl_ok"] += 1
            deliver_t = out.deliver_t + self.cfg.link.core_latency
            if self.force_degradation is not None:
                t0, dur = self.force_degradation
                ts_sec = msg.ts_l4 / 1e9
                if t0 <= ts_sec < t0 + dur:
                    deliver_t = max(deliver_t, ts_sec + FORCED_DELAY)
            self._serial += 1
            heapq.heappush(self.deliveries, (deliver_t, self._serial, rid, msg))

    def _deliver_and_update_fsm(self, t_new: float, control_tick: bool) -> None:
        """Phase 6: hand due beacons to applications; step fallback FSMs."""
        while self.deliveries and self.deliveries[0][0] <= t_new:
            _, _, rid, msg = heapq.heappop(self.deliveries)
            self._publish(
                f"veh/{rid}/ctrl",
                {"from": msg.sender_id, "seq": msg.seq, "s": msg.pos_s, "speed": msg.speed,
                 "accel": msg.accel, "ts_l4": msg.ts_l4},
                t_new,
            )
        for vid in self.order:
            app = self.apps[vid]
            for env in app.client.drain():
                body = json.loads(env.payload)
                msg = ControlMessage(
                    sender_id=body["from"], seq=body["seq"], pos_s=body["s"],
                    speed=body["speed"], accel=body["accel"], ts_l4=body["ts_l4"],
                )
                delay = t_new - msg.ts_l4 / 1e9
                prev = app.last_msg.get(msg.sender_id)
                if prev is None or msg.seq >= prev.seq:
                    app.last_msg[msg.sender_id] = msg
                app.last_rx[msg.sender_id] = t_new
                app.pending_delays.append(delay)
                self.counters["app_rx"] += 1
                self.sinks["app"].append_row(
                    [t_new, vid, msg.sender_id, msg.seq, delay * 1000.0, app.fsm.mode]
                )

        if not control_tick:
            return
        stale_after = STALENESS_PERIODS * CONTROL_PERIOD
        for idx, vid in enumerate(self.order):
            if idx == 0:
                continue  # the leader runs no fallback FSM
            app = self.apps[vid]
            samples = list(app.pending_delays)
            app.pending_delays.clear()
            for src in (self.order[idx - 1], self.order[0]):
                last_rx = app.last_rx.get(src)
                if last_rx is not None and t_new - last_rx > stale_after:
                    # outage: synthesize a sample from the age of the last beacon
                    samples.append(t_new - app.last_msg[src].ts_l4 / 1e9)
            if samples:
                app.fsm = control.fallback_step(
                    app.fsm, max(samples), t_new, self.cfg.fallback
                )
                self.states[vid].mode = app.fsm.mode

    def _emit_mobility(self, t_new: float) -> None:
        for idx, vid in enumerate(self.order):
            st = self.states[vid]
            x, y = self.val.path.position(st.s)
            if idx == 0:
                gap = None
            else:
                front_id = self.order[idx - 1]
                gap = mobility.gap_front(
                    st.s, self.states[front_id].s, self.path_length, self.specs[front_id].length
                )
            self.sinks["mobility"].append_row(
                [t_new, vid, st.s, x, y, st.speed, st.accel, gap, st.mode]
            )

    def _emit_link_window(self, t_new: float) -> None:
        w = self._window_of(t_new)
        rows = []
        for leg, accs in (("UL", self.ul_acc), ("DL", self.dl_acc)):
            per_veh = []
            for vid in self.order:
                avg_mcs, avg_bler, retx, ok, drop = accs[vid].window_row(w)
                per_veh.append((avg_mcs, avg_bler, retx, ok, drop))
                rows.append([t_new, vid, leg, avg_mcs, avg_bler, retx, ok, drop])
            if per_veh:
                # cross-vehicle mean row; blank means are excluded from the mean
                mcs_vals = [r[0] for r in per_veh if r[0] is not None]
                bler_vals = [r[1] for r in per_veh if r[1] is not None]
                rows.append([
                    t_new, "all", leg,
                    sum(mcs_vals) / len(mcs_vals) if mcs_vals else None,
                    sum(bler_vals) / len(bler_vals) if bler_vals else None,
                    sum(r[2] for r in per_veh),
                    sum(r[3] for r in per_veh),
                    sum(r[4] for r in per_veh),
                ])
        if rows:
            self.sinks["link"].flush_window(t_new, rows)
            self._publish("metrics/link", {"t": t_new, "rows": len(rows)}, t_new)

    # -- main loop ---------------------------------------------------------

    def step(self) -> None:
        cmds = self._commands()
        self._integrate(cmds)
        self.tick += 1
        t_new = self.tick * self.dt

        if self.tick % self.val.ticks_per_channel == 0:
            self._sample_channel(t_new)
        control_tick = self.tick % self.val.ticks_per_control == 0
        if control_tick and self.chan:
            self._send_beacons(t_new)
        self._process_downlinks(t_new)
        self._deliver_and_update_fsm(t_new, control_tick)
        if self.tick % self.val.ticks_per_mobility_log == 0:
            self._emit_mobility(t_new)
        if self.tick % self.val.ticks_per_metrics == 0:
            self._emit_link_window(t_new)
        self._publish("sim/clock", {"tick": self.tick, "t": t_new}, t_new)

    def run(self) -> dict:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        for sink in self.sinks.values():
            sink.open()
        status = "complete"
        wall_start = time.monotonic()
        try:
            for _ in range(self.val.n_steps):
                self.step()
                if self.realtime:
                    ahead = self.t - (time.monotonic() - wall_start)
                    if ahead > 0:
                        time.sleep(ahead)
        except Exception as e:
            status = f"aborted: {e.__class__.__name__}: {e}"
            raise
        else:
            self.counters["in_flight_dl"] = len(self.dl_pending)
            self.counters["in_flight_app"] = len(self.deliveries)
        finally:
            for sink in self.sinks.values():
                sink.close()
            if self.tcp_broker is not None:
                self.tcp_broker.close()
            self._write_run_json(status)
        return self.counters

    def _write_run_json(self, status: str) -> None:
        doc = {
            "status": status,
            "seed": self.seed,
            "code_version": __version__,
            "t_start": 0.0,
            "t_end": self.t,
            "dt_sim": self.dt,
            "duration": self.cfg.duration,
            "bus_mode": "inprocess" if self.cfg.bus.inprocess else "tcp",
            "realtime": self.realtime,
            "force_degradation": list(self.force_degradation) if self.force_degradation else None,
            "rng_streams": self.rng_labels,
            "packet_counters": self.counters,
            "files": {
                "mobility": "mobility.csv",
                "channel": "channel.csv",
                "link": "link.csv",
                "app": "app.csv",
            },
            "scenario": config_to_dict(self.cfg),
        }
        with open(self.out_dir / "run.json", "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")


def run_scenario(
    scenario: ValidatedScenario,
    out_dir: str | Path,
    seed: int | None = None,
    force_degradation: tuple[float, float] | None = None,
    realtime: bool = False,
) -> dict:
    """Run a validated scenario to completion; returns packet counters."""
    sim = Simulation(
        scenario, out_dir, seed=seed, force_degradation=force_degradation, realtime=realtime
    )
    return sim.run()

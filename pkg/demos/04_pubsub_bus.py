#!/usr/bin/env python3
"""Tour of the message plane: canonical frames, wildcards, TCP fan-out."""

from platoonsim.bus import (
    BusEnvelope,
    InProcessBus,
    TcpBroker,
    TcpBusClient,
    decode_frame,
    encode_frame,
)


def main():
    env = BusEnvelope("PUB", "veh1", "veh/1/state", b'{"speed":20}', ts=1_000_000)
    frame = encode_frame(env)
    print(f"frame ({len(frame)} bytes): {frame[:4].hex()} | {frame[4:].decode()}")
    decoded, used = decode_frame(frame)
    print(f"round trip ok: {decoded == env}, consumed {used} bytes")

    bus = InProcessBus()
    orch = bus.connect("orchestrator")
    metrics = bus.connect("metrics")
    metrics.subscribe("veh/#")
    app = bus.connect("app/veh2")
    app.subscribe("veh/veh2/ctrl")
    orch.publish("veh/veh2/ctrl", b"beacon-from-veh1")
    orch.publish("veh/veh1/state", b"state")
    print(f"metrics tap saw {len(metrics.drain())} messages (wildcard veh/#)")
    print(f"veh2 app saw {len(app.drain())} message (its own ctrl topic)")

    broker = TcpBroker(port=0)
    try:
        sub = TcpBusClient(broker.port, "tap")
        sub.subscribe("sim/#")
        pub = TcpBusClient(broker.port, "sim")
        for tick in range(3):
            pub.publish("sim/clock", str(tick).encode(), ts=tick)
        got = [sub.recv().payload.decode() for _ in range(3)]
        print(f"TCP subscriber on port {broker.port} received ticks {got}")
        sub.close()
        pub.close()
    finally:
        broker.close()


if __name__ == "__main__":
    main()

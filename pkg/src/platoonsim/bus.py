"""Topic-based publish-subscribe message plane.

A minimal framed-JSON protocol carries five message kinds (CONNECT, SUBACK,
SUB, UNSUB, PUB) over a byte stream. Encoding is canonical: fixed key order,
no insignificant whitespace, 4-byte big-endian length prefix, so two equal
envelopes always produce identical bytes. The broker offers QoS-0 fan-out
with '#' tail wildcards and per-(publisher, subscriber) FIFO ordering.

Two transports share one broker core: an in-process loopback bus (the
deterministic default used for simulation runs) and a threaded TCP server
for external observers.
"""

from __future__ import annotations

import base64
import json
import socket
import threading
from collections import deque
from dataclasses import dataclass, field

MAX_FRAME_BYTES = 1 << 20  # decoder closes the connection above this
MAX_PAYLOAD_BYTES = 65536

KINDS = ("CONNECT", "SUBACK", "SUB", "UNSUB", "PUB")
_TOPIC_KINDS = ("SUB", "UNSUB", "PUB")


class BusError(Exception):
    pass


class EncodeError(BusError):
    pass


class FrameError(BusError):
    pass


@dataclass(frozen=True)
class BusEnvelope:
    kind: str
    client_id: str
    topic: str = ""
    payload: bytes = b""
    ts: int = 0  # simulated time, nanoseconds


@dataclass
class BusParams:
    listen_port: int = 18830
    max_clients: int = 16
    inprocess: bool = True


def _check_topic(topic: str, is_filter: bool) -> str | None:
    """Return an error string if `topic` is not a valid topic/filter."""
    if not topic:
        return "topic is empty"
    if any(c.isspace() for c in topic):
        return "topic contains whitespace"
    segments = topic.split("/")
    if any(seg == "" for seg in segments):
        return "topic has an empty segment"
    for i, seg in enumerate(segments):
        if "#" in seg:
            if not is_filter:
                return "wildcard not allowed in publish topic"
            if seg != "#" or i != len(segments) - 1:
                return "'#' must be the final segment"
    return None


def validate_envelope(env: BusEnvelope) -> None:
    if env.kind not in KINDS:
        raise EncodeError(f"unknown kind {env.kind!r}")
    if env.kind in _TOPIC_KINDS:
        err = _check_topic(env.topic, is_filter=env.kind in ("SUB", "UNSUB"))
        if err:
            raise EncodeError(f"{env.kind} topic {env.topic!r}: {err}")
    elif env.topic:
        raise EncodeError(f"{env.kind} must not carry a topic")
    if env.kind != "PUB" and env.payload:
        raise EncodeError(f"{env.kind} must not carry a payload")
    if len(env.payload) > MAX_PAYLOAD_BYTES:
        raise EncodeError("payload exceeds 65536 bytes")


def encode_frame(env: BusEnvelope) -> bytes:
    """Canonical wire encoding: length prefix + compact JSON, fixed key order."""
    validate_envelope(env)
    obj: dict = {"t": env.kind, "cid": env.client_id, "topic": env.topic, "ts": env.ts}
    if env.kind == "PUB":
        obj["pl"] = base64.b64encode(env.payload).decode("ascii")
    body = json.dumps(obj, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    return len(body).to_bytes(4, "big") + body


def decode_frame(buf: bytes) -> tuple[BusEnvelope, int]:
    """Decode one frame from the head of `buf`; returns (envelope, bytes consumed).

    Trailing bytes are left untouched so callers can stream. Raises FrameError
    on malformed input; the transport must then close the connection.
    """
    if len(buf) < 4:
        raise FrameError("incomplete length prefix")
    n = int.from_bytes(buf[:4], "big")
    if n > MAX_FRAME_BYTES:
        raise FrameError(f"frame length {n} exceeds limit")
    if len(buf) < 4 + n:
        raise FrameError("incomplete frame body")
    try:
        obj = json.loads(buf[4 : 4 + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FrameError(f"malformed frame body: {e}") from None
    if not isinstance(obj, dict):
        raise FrameError("frame body is not an object")
    keys = set(obj)
    if not {"t", "cid", "topic", "ts"} <= keys or keys - {"t", "cid", "topic", "ts", "pl"}:
        raise FrameError(f"unexpected frame keys {sorted(keys)}")
    try:
        payload = base64.b64decode(obj["pl"]) if "pl" in obj else b""
        env = BusEnvelope(
            kind=obj["t"],
            client_id=obj["cid"],
            topic=obj["topic"],
            payload=payload,
            ts=int(obj["ts"]),
        )
        validate_envelope(env)
    except (TypeError, ValueError, KeyError, EncodeError) as e:
        raise FrameError(f"invalid envelope: {e}") from None
    return env, 4 + n


def frame_size(buf: bytes) -> int | None:
    """Total size of the frame at the head of `buf`, or None if incomplete."""
    if len(buf) < 4:
        return None
    n = int.from_bytes(buf[:4], "big")
    if n > MAX_FRAME_BYTES:
        raise FrameError(f"frame length {n} exceeds limit")
    return 4 + n if len(buf) >= 4 + n else None


def match_topic(filt: str, topic: str) -> bool:
    """True iff `topic` matches `filt` segment by segment.

    A trailing '#' matches any remainder, including the empty one, so
    "veh/#" matches both "veh/1/state" and "veh" (MQTT convention).
    """
    fsegs = filt.split("/")
    tsegs = topic.split("/")
    if fsegs[-1] == "#":
        head = fsegs[:-1]
        return len(tsegs) >= len(head) and tsegs[: len(head)] == head
    return fsegs == tsegs


class Broker:
    """Transport-agnostic broker state: clients, subscriptions, routing.

    Not thread-safe by itself; transports serialize access. Delivery order to
    each recipient follows publish order, and recipients are enumerated in
    connect order, which keeps in-process runs fully deterministic.
    """

    def __init__(self, max_clients: int = 16):
        self.max_clients = max_clients
        self._subs: dict[str, list[str]] = {}  # client_id -> filters, insertion ordered

    def connect(self, client_id: str) -> None:
        if client_id in self._subs:
            raise BusError(f"client id {client_id!r} already connected")
        if len(self._subs) >= self.max_clients:
            raise BusError(f"client limit {self.max_clients} reached")
        self._subs[client_id] = []

    def subscribe(self, client_id: str, filt: str) -> None:
        err = _check_topic(filt, is_filter=True)
        if err:
            raise BusError(f"bad filter {filt!r}: {err}")
        filters = self._subs[client_id]
        if filt not in filters:
            filters.append(filt)

    def unsubscribe(self, client_id: str, filt: str) -> None:
        filters = self._subs.get(client_id, [])
        if filt in filters:
            filters.remove(filt)

    def route(self, env: BusEnvelope) -> list[str]:
        """Recipients of a PUB envelope: each matching client exactly once.

        The publisher is included only if it subscribed to a matching filter.
        """
        assert env.kind == "PUB"
        out = []
        for cid, filters in self._subs.items():
            if any(match_topic(f, env.topic) for f in filters):
                out.append(cid)
        return out

    def disconnect(self, client_id: str) -> None:
        self._subs.pop(client_id, None)

    def is_clean(self) -> bool:
        return not self._subs

    @property
    def client_ids(self) -> list[str]:
        return list(self._subs)


class InProcessClient:
    """Handle returned by InProcessBus.connect; holds the delivery inbox."""

    def __init__(self, bus: "InProcessBus", client_id: str):
        self._bus = bus
        self.client_id = client_id
        self.inbox: deque[BusEnvelope] = deque()

    def subscribe(self, filt: str) -> None:
        self._bus.broker.subscribe(self.client_id, filt)

    def unsubscribe(self, filt: str) -> None:
        self._bus.broker.unsubscribe(self.client_id, filt)

    def publish(self, topic: str, payload: bytes, ts: int = 0) -> list[str]:
        return self._bus.publish(self.client_id, topic, payload, ts)

    def drain(self) -> list[BusEnvelope]:
        out = list(self.inbox)
        self.inbox.clear()
        return out

    def close(self) -> None:
        self._bus.disconnect(self.client_id)


class InProcessBus:
    """Single-threaded loopback bus: publish appends synchronously to inboxes."""

    def __init__(self, max_clients: int = 64):
        self.broker = Broker(max_clients)
        self._clients: dict[str, InProcessClient] = {}

    def connect(self, client_id: str) -> InProcessClient:
        self.broker.connect(client_id)
        client = InProcessClient(self, client_id)
        self._clients[client_id] = client
        return client

    def publish(self, sender_id: str, topic: str, payload: bytes, ts: int = 0) -> list[str]:
        env = BusEnvelope("PUB", sender_id, topic, payload, ts)
        validate_envelope(env)
        recipients = self.broker.route(env)
        for cid in recipients:
            self._clients[cid].inbox.append(env)
        return recipients

    def disconnect(self, client_id: str) -> None:
        self.broker.disconnect(client_id)
        self._clients.pop(client_id, None)


class TcpBroker:
    """Threaded TCP transport around the broker core.

    One reader thread per connection; all broker mutations and deliveries run
    under a single lock, which serializes writes per subscriber and preserves
    publish order. Intended for external observers of a running simulation.
    """

    def __init__(self, port: int = 0, max_clients: int = 16, host: str = "127.0.0.1"):
        self.broker = Broker(max_clients)
        self._lock = threading.Lock()
        self._conns: dict[str, socket.socket] = {}
        self._server = socket.create_server((host, port))
        self.port = self._server.getsockname()[1]
        self._closing = False
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._threads: list[threading.Thread] = [self._accept_thread]
        self._accept_thread.start()

    def _accept_loop(self) -> None:
        while not self._closing:
            try:
                conn, _ = self._server.accept()
            except OSError:
                return
            t = threading.Thread(target=self._serve, args=(conn,), daemon=True)
            self._threads.append(t)
            t.start()

    def _send(self, conn: socket.socket, env: BusEnvelope) -> None:
        try:
            conn.sendall(encode_frame(env))
        except OSError:
            pass  # peer vanished; reader side cleans up

    def _serve(self, conn: socket.socket) -> None:
        buf = b""
        cid = None
        try:
            while True:
                try:
                    size = frame_size(buf)
                except FrameError:
                    return
                if size is None:
                    chunk = conn.recv(65536)
                    if not chunk:
                        return
                    buf += chunk
                    continue
                try:
                    env, used = decode_frame(buf)
                except FrameError:
                    return
                buf = buf[used:]
                with self._lock:
                    if env.kind == "CONNECT":
                        self.broker.connect(env.client_id)
                        cid = env.client_id
                        self._conns[cid] = conn
                        self._send(conn, BusEnvelope("SUBACK", cid, ts=env.ts))
                    elif cid is None:
                        return  # first frame must be CONNECT
                    elif env.kind == "SUB":
                        self.broker.subscribe(cid, env.topic)
                        self._send(conn, BusEnvelope("SUBACK", cid, ts=env.ts))
                    elif env.kind == "UNSUB":
                        self.broker.unsubscribe(cid, env.topic)
                    elif env.kind == "PUB":
                        for rid in self.broker.route(env):
                            self._send(self._conns[rid], env)
        except (BusError, OSError):
            pass
        finally:
            with self._lock:
                if cid is not None:
                    self.broker.disconnect(cid)
                    self._conns.pop(cid, None)
            conn.close()

    def publish_local(self, sender_id: str, topic: str, payload: bytes, ts: int = 0) -> None:
        """Inject a publish without a client connection (simulation mirror)."""
        env = BusEnvelope("PUB", sender_id, topic, payload, ts)
        validate_envelope(env)
        with self._lock:
            for rid in self.broker.route(env):
                self._send(self._conns[rid], env)

    def close(self) -> None:
        self._closing = True
        try:
            self._server.close()
        except OSError:
            pass
        with self._lock:
            conns = list(self._conns.values())
        for c in conns:
            try:
                c.close()
            except OSError:
                pass


class TcpBusClient:
    """Blocking TCP client for the framed protocol; receives into a queue."""

    def __init__(self, port: int, client_id: str, host: str = "127.0.0.1", timeout: float = 5.0):
        self.client_id = client_id
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._buf = b""
        self.inbox: deque[BusEnvelope] = deque()
        self._send(BusEnvelope("CONNECT", client_id))
        self._expect_suback()

    def _send(self, env: BusEnvelope) -> None:
        self._sock.sendall(encode_frame(env))

    def _recv_frame(self) -> BusEnvelope:
        while True:
            size = frame_size(self._buf)
            if size is not None:
                env, used = decode_frame(self._buf)
                self._buf = self._buf[used:]
                return env
            chunk = self._sock.recv(65536)
            if not chunk:
                raise BusError("connection closed by broker")
            self._buf += chunk

    def _expect_suback(self) -> None:
        env = self._recv_frame()
        while env.kind == "PUB":  # deliveries may interleave with acks
            self.inbox.append(env)
            env = self._recv_frame()
        if env.kind != "SUBACK":
            raise BusError(f"expected SUBACK, got {env.kind}")

    def subscribe(self, filt: str) -> None:
        self._send(BusEnvelope("SUB", self.client_id, filt))
        self._expect_suback()

    def unsubscribe(self, filt: str) -> None:
        self._send(BusEnvelope("UNSUB", self.client_id, filt))

    def publish(self, topic: str, payload: bytes, ts: int = 0) -> None:
        self._send(BusEnvelope("PUB", self.client_id, topic, payload, ts))

    def recv(self, timeout: float = 5.0) -> BusEnvelope:
        if self.inbox:
            return self.inbox.popleft()
        self._sock.settimeout(timeout)
        return self._recv_frame()

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass

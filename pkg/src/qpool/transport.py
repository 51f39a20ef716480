"""Pluggable point-to-point transports between ranks.

Two implementations share one contract: ordered delivery between each fixed
(source, dest) pair, full-duplex exchange between partners (achieved by
buffering: queues in-process, drained reader threads over sockets), and a
message-accounting counter on the send side.

Socket wire format (little-endian):
  header  = u32 magic 0x51504152 | u32 version 1 | u64 payload bytes
            | u32 source rank | u32 tag
  payload = raw interleaved re/im 64-bit floats (complex128 memory layout)

Every payload is a complex128 array; scalars travel as one-element arrays.
The rendezvous file for socket mode has one "host:port" line per rank,
ordered by rank index.
"""
from __future__ import annotations

import queue
import socket
import struct
import threading
import time
from dataclasses import dataclass, field

import numpy as np

MAGIC = 0x51504152
PROTOCOL_VERSION = 1
HEADER = struct.Struct("<IIQII")
DEFAULT_TIMEOUT = 30.0

TAG_EXCHANGE = 1
TAG_RETURN = 2
TAG_REDUCE = 3
TAG_BARRIER = 4
TAG_BCAST = 5
TAG_GATHER = 6


class TransportTimeout(TimeoutError):
    """A collective partner never showed up; protocol misuse or dead peer."""


class TransportError(RuntimeError):
    """Connection establishment or framing failure."""


@dataclass
class TransportCounters:
    messages_sent: int = 0
    amplitudes_sent: int = 0

    @property
    def bytes_sent(self) -> int:
        return 16 * self.amplitudes_sent

    def snapshot(self) -> "TransportCounters":
        return TransportCounters(self.messages_sent, self.amplitudes_sent)

    def delta(self, earlier: "TransportCounters") -> "TransportCounters":
        return TransportCounters(
            self.messages_sent - earlier.messages_sent,
            self.amplitudes_sent - earlier.amplitudes_sent,
        )


class Transport:
    """Base point-to-point endpoint for one rank."""

    rank: int
    world_size: int
    timeout: float

    def __init__(self, rank: int, world_size: int, timeout: float = DEFAULT_TIMEOUT):
        self.rank = rank
        self.world_size = world_size
        self.timeout = timeout
        self.counters = TransportCounters()

    def send(self, dest: int, payload: np.ndarray, tag: int = 0) -> None:
        raise NotImplementedError

    def receive(self, src: int, timeout: float | None = None) -> np.ndarray:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def _account(self, payload: np.ndarray) -> None:
        self.counters.messages_sent += 1
        self.counters.amplitudes_sent += int(payload.size)

    def barrier(self, ranks=None) -> None:
        """Synchronize the given ranks (all by default): gather to the lowest
        member, then release."""
        members = sorted(range(self.world_size) if ranks is None else ranks)
        if len(members) <= 1:
            return
        root = members[0]
        token = np.zeros(0, dtype=np.complex128)
        if self.rank == root:
            for r in members[1:]:
                self.receive(r)
            for r in members[1:]:
                self.send(r, token, tag=TAG_BARRIER)
        else:
            self.send(root, token, tag=TAG_BARRIER)
            self.receive(root)


def as_payload(values) -> np.ndarray:
    """Payloads are flat complex128 arrays on every transport, matching the
    wire format; senders of structured data flatten and receivers reshape."""
    return np.ascontiguousarray(np.asarray(values, dtype=np.complex128)).ravel()


class InProcessTransport(Transport):
    def __init__(self, fabric: "InProcessFabric", rank: int):
        super().__init__(rank, fabric.world_size, fabric.timeout)
        self._fabric = fabric

    def send(self, dest: int, payload: np.ndarray, tag: int = 0) -> None:
        payload = as_payload(payload)
        self._account(payload)
        self._fabric.queue(self.rank, dest).put(payload.copy())

    def receive(self, src: int, timeout: float | None = None) -> np.ndarray:
        try:
            return self._fabric.queue(src, self.rank).get(
                timeout=self.timeout if timeout is None else timeout
            )
        except queue.Empty:
            raise TransportTimeout(
                f"rank {self.rank}: no message from rank {src} "
                f"(non-collective call or dead peer?)"
            ) from None


class InProcessFabric:
    """Shared mailbox set connecting worker threads inside one process."""

    def __init__(self, world_size: int, timeout: float = DEFAULT_TIMEOUT):
        self.world_size = world_size
        self.timeout = timeout
        self._queues: dict[tuple[int, int], queue.Queue] = {
            (s, d): queue.Queue() for s in range(world_size) for d in range(world_size)
        }

    def queue(self, src: int, dest: int) -> queue.Queue:
        return self._queues[(src, dest)]

    def endpoint(self, rank: int) -> InProcessTransport:
        return InProcessTransport(self, rank)


def parse_rendezvous(text: str) -> list[tuple[str, int]]:
    addrs = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        host, _, port = line.rpartition(":")
        if not host:
            raise TransportError(f"bad rendezvous line {line!r}")
        addrs.append((host, int(port)))
    if not addrs:
        raise TransportError("empty rendezvous file")
    return addrs


def load_rendezvous(path) -> list[tuple[str, int]]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_rendezvous(fh.read())


def write_rendezvous(path, num_ranks: int, host: str = "127.0.0.1") -> list[tuple[str, int]]:
    """Pick free localhost ports and write the per-rank address file."""
    socks = []
    addrs = []
    for _ in range(num_ranks):
        s = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        s.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        s.bind((host, 0))
        socks.append(s)
        addrs.append((host, s.getsockname()[1]))
    for s in socks:
        s.close()
    with open(path, "w", encoding="utf-8") as fh:
        for h, p in addrs:
            fh.write(f"{h}:{p}\n")
    return addrs


def _recv_exact(conn: socket.socket, count: int) -> bytes:
    chunks = []
    remaining = count
    while remaining:
        data = conn.recv(min(remaining, 1 << 20))
        if not data:
            raise TransportError("peer closed connection mid-message")
        chunks.append(data)
        remaining -= len(data)
    return b"".join(chunks)


class SocketTransport(Transport):
    """TCP mesh over localhost or a cluster; one connection per rank pair.

    Lower ranks connect to higher ranks' listeners. A reader thread per peer
    drains inbound messages into per-source queues, so simultaneous sends by
    exchange partners never deadlock.
    """

    def __init__(self, rank: int, addresses: list[tuple[str, int]],
                 timeout: float = DEFAULT_TIMEOUT, connect_timeout: float = 20.0):
        super().__init__(rank, len(addresses), timeout)
        self._conns: dict[int, socket.socket] = {}
        self._send_locks: dict[int, threading.Lock] = {}
        self._inboxes: dict[int, queue.Queue] = {
            r: queue.Queue() for r in range(self.world_size) if r != rank
        }
        self._closing = threading.Event()
        self._readers: list[threading.Thread] = []
        if self.world_size == 1:
            self._listener = None
            return

        host, port = addresses[rank]
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            listener.bind((host, port))
        except OSError as exc:
            raise TransportError(f"rank {rank}: cannot bind {host}:{port}: {exc}") from exc
        listener.listen(self.world_size)
        listener.settimeout(connect_timeout)
        self._listener = listener

        expected_inbound = rank  # every lower rank dials in
        accepted: dict[int, socket.socket] = {}
        accept_err: list[Exception] = []

        def _accept_all():
            try:
                for _ in range(expected_inbound):
                    conn, _addr = listener.accept()
                    peer = struct.unpack("<I", _recv_exact(conn, 4))[0]
                    accepted[peer] = conn
            except Exception as exc:  # surfaced after join
                accept_err.append(exc)

        acceptor = threading.Thread(target=_accept_all, daemon=True)
        acceptor.start()

        # Outbound to every higher rank, retrying until its listener is up.
        for peer in range(rank + 1, self.world_size):
            self._conns[peer] = self._connect_with_retry(addresses[peer], connect_timeout)
            self._conns[peer].sendall(struct.pack("<I", rank))

        acceptor.join(connect_timeout)
        if accept_err:
            raise TransportError(f"rank {rank}: accept failed: {accept_err[0]}")
        if len(accepted) != expected_inbound:
            raise TransportError(
                f"rank {rank}: expected {expected_inbound} inbound connections, "
                f"got {len(accepted)}"
            )
        self._conns.update(accepted)

        for peer, conn in self._conns.items():
            # connect/accept armed these with the handshake timeout; steady
            # state is blocking I/O, with receive deadlines enforced at the
            # inbox and sends drained by the peer's reader thread
            conn.settimeout(None)
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            self._send_locks[peer] = threading.Lock()
            t = threading.Thread(target=self._read_loop, args=(peer, conn), daemon=True)
            t.start()
            self._readers.append(t)

    @staticmethod
    def _connect_with_retry(addr: tuple[str, int], connect_timeout: float) -> socket.socket:
        deadline = time.monotonic() + connect_timeout
        while True:
            try:
                return socket.create_connection(addr, timeout=connect_timeout)
            except OSError as exc:
                if time.monotonic() >= deadline:
                    raise TransportError(f"cannot connect to {addr[0]}:{addr[1]}: {exc}") from exc
                time.sleep(0.02)

    def _read_loop(self, peer: int, conn: socket.socket) -> None:
        try:
            while not self._closing.is_set():
                header = _recv_exact(conn, HEADER.size)
                magic, version, nbytes, src, tag = HEADER.unpack(header)
                if magic != MAGIC or version != PROTOCOL_VERSION:
                    raise TransportError(
                        f"bad frame from rank {peer}: magic={magic:#x} version={version}"
                    )
                payload = _recv_exact(conn, nbytes) if nbytes else b""
                arr = np.frombuffer(payload, dtype=np.complex128).copy()
                self._inboxes[src].put((tag, arr))
        except (TransportError, OSError):
            if not self._closing.is_set():
                self._inboxes[peer].put((None, None))  # wake any waiter with an error

    def send(self, dest: int, payload: np.ndarray, tag: int = 0) -> None:
        payload = as_payload(payload)
        self._account(payload)
        raw = payload.tobytes()
        header = HEADER.pack(MAGIC, PROTOCOL_VERSION, len(raw), self.rank, tag)
        conn = self._conns[dest]
        with self._send_locks[dest]:
            conn.sendall(header + raw)

    def receive(self, src: int, timeout: float | None = None) -> np.ndarray:
        try:
            tag, arr = self._inboxes[src].get(
                timeout=self.timeout if timeout is None else timeout
            )
        except queue.Empty:
            raise TransportTimeout(
                f"rank {self.rank}: no message from rank {src}"
            ) from None
        if arr is None:
            raise TransportError(f"rank {self.rank}: connection to rank {src} failed")
        return arr

    def close(self) -> None:
        self._closing.set()
        for conn in self._conns.values():
            try:
                conn.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            conn.close()
        if self._listener is not None:
            self._listener.close()


def broadcast_array(transport: Transport, values, root: int = 0,
                    ranks=None) -> np.ndarray:
    """Root sends the array to every other member; all return the root's copy."""
    members = sorted(range(transport.world_size) if ranks is None else ranks)
    if transport.rank == root:
        payload = as_payload(values)
        for r in members:
            if r != root:
                transport.send(r, payload, tag=TAG_BCAST)
        return payload
    return transport.receive(root)

"""Two-party inner-product estimation as communicating state machines.

Each party owns one state and a master seed.  The session runs

    HELLO -> SETUP -> BELL_RESULT* -> PAULI_ESTIMATE* -> PURITY -> RESULT

in both directions over any ordered, reliable duplex channel.  Messages are
JSON objects framed by a 4-byte big-endian length prefix.

Round ``i`` (1-based) is sampled by Alice when bit ``i`` of a SHA-256 stream
keyed by the XOR of the two 32-byte SETUP seeds is 0, and by Bob otherwise
(see :func:`round_coins`).  This is fair for honest-but-curious
parties only; nothing stops a party that sees the peer seed first from
choosing its own.

Every party draws from fixed substreams of its master seed, and computes all
of its estimates at once after the last label is known, so the outcome does
not depend on message timing.  :func:`simulate_rdipe` replays exactly the
same draws without any messaging and is used for large Monte Carlo studies.
"""

from __future__ import annotations

import hashlib
import json
import queue
import socket
import struct
import threading
import time
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (
    ChannelError,
    ConfigMismatch,
    DimensionMismatch,
    EmptyRounds,
    ProtocolViolation,
    PurityTooLow,
    RdipeError,
    TooLarge,
)
from .pauli import PauliString
from .rng import substream
from .sampling import bell_sample_arrays, estimate_purity, shots_from_expectation
from .states import QuantumState, expectation_arrays, purity

PROTOCOL_VERSION = 1
MESSAGE_TYPES = ("HELLO", "SETUP", "BELL_RESULT", "PAULI_ESTIMATE", "PURITY", "RESULT", "ERROR")
ROLES = ("alice", "bob")
MAX_PROTOCOL_QUBITS = 64
MAX_FRAME = 1 << 24

# substream keys under (seed, role index)
_SEED_KEY, _BELL_KEY, _SHOTS_KEY, _PURITY_KEY = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# configuration and records


@dataclass(frozen=True)
class ProtocolConfig:
    """Inputs of one party.  ``N1``/``N2`` may be left out when ``epsilon`` and
    ``delta`` are given; they are then planned by ``sample_size_plan``.  With
    estimated purities, ``N3 = 0`` means the default ``N1 * N2``."""

    n: int
    N1: int | None = None
    N2: int | None = None
    N3: int = 0
    epsilon: float | None = None
    delta: float | None = None
    seed: int = 0
    role: str = "alice"
    purity_mode: str = "exact"

    def __post_init__(self):
        if self.N1 is None or self.N2 is None:
            if self.epsilon is None or self.delta is None:
                raise ValueError("give N1 and N2, or epsilon and delta to plan them")
            from .distributions import sample_size_plan

            N1, N2 = sample_size_plan(self.n, self.epsilon, self.delta)
            object.__setattr__(self, "N1", self.N1 if self.N1 is not None else N1)
            object.__setattr__(self, "N2", self.N2 if self.N2 is not None else N2)
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.N1 < 1 or self.N2 < 1:
            raise ValueError("N1 and N2 must be >= 1")
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}")
        if self.purity_mode not in ("exact", "estimated"):
            raise ValueError("purity_mode must be 'exact' or 'estimated'")
        if self.N3 < 0:
            raise ValueError("N3 must be >= 0")
        if self.purity_mode == "estimated" and self.N3 == 0:
            object.__setattr__(self, "N3", self.N1 * self.N2)  # one Bell sample per single-copy shot

    @property
    def role_index(self) -> int:
        return ROLES.index(self.role)

    def for_role(self, role: str) -> ProtocolConfig:
        return replace(self, role=role)

    def shared_fields(self) -> dict:
        """Fields both parties must agree on (sent in HELLO)."""
        return {"n": self.n, "N1": self.N1, "N2": self.N2, "N3": self.N3, "purity_mode": self.purity_mode}


@dataclass(frozen=True)
class RoundRecord:
    i: int
    sampler: str
    a: str  # base-4 digits, MSD = qubit 0
    alpha: float
    beta: float
    value: float

    def to_dict(self) -> dict:
        return {"record": "round", "i": self.i, "sampler": self.sampler, "a": self.a,
                "alpha": self.alpha, "beta": self.beta, "value": self.value}


@dataclass
class Transcript:
    """One party's view of a session: every message sent or received, in order."""

    role: str
    config: dict
    messages: list[dict] = field(default_factory=list)  # {"dir": "send"|"recv", "msg": {...}}
    rounds: list[RoundRecord] = field(default_factory=list)
    A: float | None = None
    B: float | None = None
    f: float | None = None
    complete: bool = False

    def log(self, direction: str, msg: dict) -> None:
        self.messages.append({"dir": direction, "msg": msg})

    def count(self, mtype: str, direction: str | None = None) -> int:
        return sum(1 for m in self.messages
                   if m["msg"]["type"] == mtype and (direction is None or m["dir"] == direction))

    def lines(self) -> list[str]:
        out = [_dumps({"record": "config", "role": self.role, **self.config})]
        out += [_dumps({"record": "message", **m}) for m in self.messages]
        out += [_dumps(r.to_dict()) for r in self.rounds]
        out.append(_dumps({"record": "summary", "A": self.A, "B": self.B, "f": self.f,
                           "complete": self.complete, "rounds": len(self.rounds)}))
        return out

    def write_jsonl(self, path) -> Path:
        path = Path(path)
        path.write_text("\n".join(self.lines()) + "\n")
        return path

    @classmethod
    def read_jsonl(cls, path) -> Transcript:
        t = None
        for line in Path(path).read_text().splitlines():
            rec = json.loads(line)
            kind = rec.pop("record")
            if kind == "config":
                t = cls(rec.pop("role"), rec)
            elif kind == "message":
                t.messages.append(rec)
            elif kind == "round":
                t.rounds.append(RoundRecord(**rec))
            elif kind == "summary":
                t.A, t.B, t.f, t.complete = rec["A"], rec["B"], rec["f"], rec["complete"]
        if t is None:
            raise ValueError(f"{path}: no config record")
        return t


# ---------------------------------------------------------------------------
# estimator


def round_values(alpha, beta, A: float, B: float) -> np.ndarray:
    """Per-round ratio ``2 a b / (a^2 sqrt(B/A) + b^2 sqrt(A/B))``; 0 when ``a = b = 0``."""
    if A <= 0 or B <= 0:
        raise PurityTooLow("purity estimates must be positive")
    a = np.asarray(alpha, dtype=float)
    b = np.asarray(beta, dtype=float)
    den = a * a * np.sqrt(B / A) + b * b * np.sqrt(A / B)
    num = 2 * a * b
    safe = np.where(den > 0, den, 1.0)
    return np.where(den > 0, num / safe, 0.0)


def estimator_f(rounds, A: float, B: float) -> float:
    """Mean of the per-round ratios over ``rounds = [(alpha_i, beta_i), ...]``."""
    r = np.asarray(rounds, dtype=float).reshape(-1, 2) if len(rounds) else np.empty((0, 2))
    if r.shape[0] == 0:
        raise EmptyRounds("no rounds to average")
    return float(np.mean(round_values(r[:, 0], r[:, 1], A, B)))


# ---------------------------------------------------------------------------
# shared randomness


def party_seed_bytes(config: ProtocolConfig) -> bytes:
    return substream(config.seed, config.role_index, _SEED_KEY).bytes(32)


def round_coins(key: bytes, N1: int) -> np.ndarray:
    """Sampler of each round: 0 = Alice, 1 = Bob.

    Round ``i`` (1-based) reads bit ``(i-1) mod 256`` (little-endian within
    each byte) of ``SHA-256(key || j)``, ``j = (i-1) // 256`` as 8 big-endian bytes.
    """
    blocks = (N1 + 255) // 256
    stream = b"".join(hashlib.sha256(key + j.to_bytes(8, "big")).digest() for j in range(blocks))
    bits = np.unpackbits(np.frombuffer(stream, dtype=np.uint8), bitorder="little")
    return bits[:N1].astype(np.int8)


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


def _label(n: int, x: int, z: int) -> str:
    return PauliString(n, x, z).to_base4()


def _parse_label(text, n: int) -> tuple[int, int]:
    if not isinstance(text, str) or len(text) != n:
        raise ProtocolViolation(f"Bell label must be {n} base-4 digits")
    try:
        p = PauliString.from_base4(text)
    except ValueError as e:
        raise ProtocolViolation(str(e)) from None
    return p.x, p.z


def _local_purity(s: QuantumState, config: ProtocolConfig) -> float:
    if config.purity_mode == "exact":
        return purity(s)
    return estimate_purity(s, config.N3, substream(config.seed, config.role_index, _PURITY_KEY))


def _check_inputs(s: QuantumState, config: ProtocolConfig) -> None:
    if s.n != config.n:
        raise DimensionMismatch(f"state has {s.n} qubits, config says {config.n}")
    if config.n > MAX_PROTOCOL_QUBITS:
        raise TooLarge(f"protocol labels are packed in 64-bit words (n={config.n})")
    p = purity(s)
    if p <= 0.5:
        raise PurityTooLow(f"tr rho^2 = {p:.4f} <= 1/2")


# ---------------------------------------------------------------------------
# messages and framing


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def make_message(mtype: str, **fields) -> dict:
    return {"type": mtype, "v": PROTOCOL_VERSION, **fields}


def encode_frame(msg: dict) -> bytes:
    body = _dumps(msg).encode("utf-8")
    return struct.pack(">I", len(body)) + body


def decode_body(body: bytes) -> dict:
    try:
        msg = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ProtocolViolation(f"malformed frame: {e}") from None
    if not isinstance(msg, dict) or msg.get("type") not in MESSAGE_TYPES:
        raise ProtocolViolation(f"unknown message: {msg!r}"[:200])
    return msg


def decode_frames(buf: bytes) -> tuple[list[dict], bytes]:
    """Split complete frames off the front of ``buf``; returns the remainder."""
    out = []
    while len(buf) >= 4:
        (size,) = struct.unpack(">I", buf[:4])
        if size > MAX_FRAME:
            raise ProtocolViolation(f"frame of {size} bytes exceeds limit")
        if len(buf) < 4 + size:
            break
        out.append(decode_body(buf[4 : 4 + size]))
        buf = buf[4 + size :]
    return out, buf


# ---------------------------------------------------------------------------
# party state machine


class Party:
    """One side of the session.  Feed incoming messages to :meth:`step`."""

    def __init__(self, state: QuantumState, config: ProtocolConfig):
        _check_inputs(state, config)
        self.state = state
        self.config = config
        self.transcript = Transcript(config.role, {"seed": config.seed, **config.shared_fields()})
        self.phase = "INIT"
        self.n, self.N1 = config.n, config.N1
        self.my_bit = config.role_index
        self._seed = party_seed_bytes(config)
        self._coins = None
        self._xs = np.zeros(self.N1, dtype=np.uint64)
        self._zs = np.zeros(self.N1, dtype=np.uint64)
        self._labels: list[str | None] = [None] * self.N1
        self._peer_rounds: deque[int] = deque()
        self._mine = None
        self._peer_est = np.zeros(self.N1)
        self._next_est = 0
        self._peer_purity = None
        self.purity = None
        self.f = None

    @property
    def done(self) -> bool:
        return self.phase == "DONE"

    def _emit(self, msg: dict) -> dict:
        self.transcript.log("send", msg)
        return msg

    def start(self) -> list[dict]:
        if self.phase != "INIT":
            raise ProtocolViolation("party already started")
        self.phase = "HELLO"
        return [self._emit(make_message("HELLO", role=self.config.role, **self.config.shared_fields()))]

    def error_message(self, reason: str) -> dict:
        return self._emit(make_message("ERROR", reason=reason))

    def step(self, msg: dict) -> list[dict]:
        self.transcript.log("recv", msg)
        mtype = msg.get("type")
        if mtype == "ERROR":
            reason = str(msg.get("reason", ""))
            self.phase = "FAILED"
            if reason.startswith("config mismatch"):
                raise ConfigMismatch(f"peer reported: {reason}")
            raise ProtocolViolation(f"peer reported: {reason}")
        if msg.get("v") != PROTOCOL_VERSION:
            raise ProtocolViolation(f"version mismatch: got {msg.get('v')!r}, speak {PROTOCOL_VERSION}")
        handler = {
            ("HELLO", "HELLO"): self._on_hello,
            ("SETUP", "SETUP"): self._on_setup,
            ("ROUNDS", "BELL_RESULT"): self._on_bell,
            ("ROUNDS", "PAULI_ESTIMATE"): self._on_estimate,
            ("ROUNDS", "PURITY"): self._on_purity,
            ("RESULT", "RESULT"): self._on_result,
        }.get((self.phase, mtype))
        if handler is None:
            raise ProtocolViolation(f"unexpected {mtype} in phase {self.phase}")
        try:
            return handler(msg)
        except (KeyError, TypeError, ValueError) as e:
            raise ProtocolViolation(f"malformed {mtype}: {e}") from None

    # -- handlers

    def _on_hello(self, msg):
        theirs = {k: msg[k] for k in self.config.shared_fields()}
        if theirs != self.config.shared_fields():
            diff = sorted(k for k in theirs if theirs[k] != self.config.shared_fields()[k])
            raise ConfigMismatch(f"config mismatch: {', '.join(diff)}")
        if msg["role"] == self.config.role:
            raise ConfigMismatch(f"config mismatch: both parties claim role {msg['role']}")
        self.phase = "SETUP"
        return [self._emit(make_message("SETUP", seed=self._seed.hex()))]

    def _on_setup(self, msg):
        peer = bytes.fromhex(msg["seed"])
        if len(peer) != 32:
            raise ProtocolViolation("SETUP seed must be 32 bytes")
        key = _xor(self._seed, peer) if self.my_bit == 0 else _xor(peer, self._seed)
        self._coins = round_coins(key, self.N1)
        mine = np.flatnonzero(self._coins == self.my_bit)
        self._peer_rounds = deque(np.flatnonzero(self._coins != self.my_bit).tolist())
        xs, zs = _draw_labels(self.state, self.config, len(mine))
        self._xs[mine], self._zs[mine] = xs, zs
        out = []
        for j, x, z in zip(mine.tolist(), xs.tolist(), zs.tolist()):
            a = _label(self.n, x, z)
            self._labels[j] = a
            out.append(self._emit(make_message("BELL_RESULT", i=j + 1, a=a)))
        self.phase = "ROUNDS"
        if not self._peer_rounds:
            out += self._send_estimates()
        return out

    def _on_bell(self, msg):
        if not self._peer_rounds:
            raise ProtocolViolation("BELL_RESULT for a round the peer does not own")
        j = self._peer_rounds.popleft()
        if msg["i"] != j + 1:
            raise ProtocolViolation(f"BELL_RESULT for round {msg['i']}, expected {j + 1}")
        x, z = _parse_label(msg["a"], self.n)
        self._xs[j], self._zs[j] = x, z
        self._labels[j] = msg["a"]
        return self._send_estimates() if not self._peer_rounds else []

    def _send_estimates(self):
        self._mine = _local_estimates(self.state, self.config, self._xs, self._zs)
        self.purity = _local_purity(self.state, self.config)
        out = [self._emit(make_message("PAULI_ESTIMATE", i=j + 1, value=float(v)))
               for j, v in enumerate(self._mine.tolist())]
        out.append(self._emit(make_message("PURITY", value=self.purity)))
        return out

    def _on_estimate(self, msg):
        if self._peer_rounds or self._mine is None:
            raise ProtocolViolation("PAULI_ESTIMATE before every label is known")
        if msg["i"] != self._next_est + 1:
            raise ProtocolViolation(f"PAULI_ESTIMATE for round {msg['i']}, expected {self._next_est + 1}")
        self._peer_est[self._next_est] = float(msg["value"])
        self._next_est += 1
        return []

    def _on_purity(self, msg):
        if self._next_est != self.N1:
            raise ProtocolViolation("PURITY before all estimates")
        self._peer_purity = float(msg["value"])
        alpha, beta = (self._mine, self._peer_est) if self.my_bit == 0 else (self._peer_est, self._mine)
        A, B = (self.purity, self._peer_purity) if self.my_bit == 0 else (self._peer_purity, self.purity)
        values = round_values(alpha, beta, A, B)
        self.f = float(np.mean(values))
        t = self.transcript
        t.A, t.B, t.f = A, B, self.f
        t.rounds = [RoundRecord(j + 1, ROLES[int(c)], a, float(al), float(be), float(v))
                    for j, (c, a, al, be, v) in enumerate(zip(self._coins.tolist(), self._labels,
                                                              alpha.tolist(), beta.tolist(), values.tolist()))]
        self.phase = "RESULT"
        return [self._emit(make_message("RESULT", f=self.f))]

    def _on_result(self, msg):
        if float(msg["f"]) != self.f:
            raise ProtocolViolation(f"parties disagree on f: {msg['f']!r} vs {self.f!r}")
        self.phase = "DONE"
        self.transcript.complete = True
        return []


def _draw_labels(s: QuantumState, config: ProtocolConfig, count: int):
    rng = substream(config.seed, config.role_index, _BELL_KEY)
    if count == 0:
        return np.zeros(0, dtype=np.uint64), np.zeros(0, dtype=np.uint64)
    xs, zs = bell_sample_arrays(s, count, rng)
    return np.asarray(xs, dtype=np.uint64), np.asarray(zs, dtype=np.uint64)


def _local_estimates(s: QuantumState, config: ProtocolConfig, xs, zs) -> np.ndarray:
    rng = substream(config.seed, config.role_index, _SHOTS_KEY)
    ev = expectation_arrays(s, xs, zs)
    return np.asarray(shots_from_expectation(ev, config.N2, rng), dtype=float)


def party_step(party: Party, msg: dict | None) -> list[dict]:
    """Functional form of the state machine: ``None`` starts the party."""
    return party.start() if msg is None else party.step(msg)


# ---------------------------------------------------------------------------
# channels


class MemoryChannel:
    """One end of an in-process duplex byte pipe carrying framed messages."""

    def __init__(self, inbox: deque, outbox: deque):
        self._in, self._out = inbox, outbox
        self._buf = b""
        self._pending: deque[dict] = deque()
        self.closed = False

    def send(self, msg: dict) -> None:
        if self.closed:
            raise ChannelError("channel closed")
        self._out.append(encode_frame(msg))

    def poll(self) -> dict | None:
        while not self._pending and self._in:
            chunk = self._in.popleft()
            if chunk is None:
                raise ChannelError("peer closed the channel")
            frames, self._buf = decode_frames(self._buf + chunk)
            self._pending.extend(frames)
        return self._pending.popleft() if self._pending else None

    def close(self) -> None:
        if not self.closed:
            self.closed = True
            self._out.append(None)


def memory_pair() -> tuple[MemoryChannel, MemoryChannel]:
    a_to_b, b_to_a = deque(), deque()
    return MemoryChannel(b_to_a, a_to_b), MemoryChannel(a_to_b, b_to_a)


class SocketChannel:
    """Framed messages over a connected TCP socket.

    A reader thread drains the socket into a queue, so both sides can stream
    their messages without deadlocking on full kernel buffers.
    """

    def __init__(self, sock: socket.socket, timeout: float = 60.0):
        self.sock = sock
        self.timeout = timeout
        self._queue: queue.Queue = queue.Queue()
        self._send_lock = threading.Lock()
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self):
        buf = b""
        try:
            while True:
                chunk = self.sock.recv(1 << 16)
                if not chunk:
                    self._queue.put(ChannelError("peer closed the connection"))
                    return
                frames, buf = decode_frames(buf + chunk)
                for f in frames:
                    self._queue.put(f)
        except ProtocolViolation as e:
            self._queue.put(e)
        except OSError as e:
            self._queue.put(ChannelError(f"socket error: {e}"))

    def send(self, msg: dict) -> None:
        self.send_many([msg])

    def send_many(self, msgs: list[dict]) -> None:
        if not msgs:
            return
        data = b"".join(encode_frame(m) for m in msgs)
        try:
            with self._send_lock:
                self.sock.sendall(data)
        except OSError as e:
            raise ChannelError(f"send failed: {e}") from None

    def recv(self) -> dict:
        try:
            item = self._queue.get(timeout=self.timeout)
        except queue.Empty:
            raise ChannelError(f"no message within {self.timeout} s") from None
        if isinstance(item, Exception):
            raise item
        return item

    def close(self) -> None:
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


def parse_address(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    if not port.isdigit():
        raise ValueError(f"address must look like HOST:PORT, got {addr!r}")
    return host or "127.0.0.1", int(port)


def listen(addr: str) -> socket.socket:
    srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        srv.bind(parse_address(addr))
    except OSError as e:
        srv.close()
        raise ChannelError(f"cannot listen on {addr}: {e}") from None
    srv.listen(1)
    return srv


def open_connection(addr: str, retries: int = 5, delay: float = 0.2, timeout: float = 60.0) -> SocketChannel:
    host, port = parse_address(addr)
    last = None
    for attempt in range(retries + 1):
        try:
            sock = socket.create_connection((host, port), timeout=5.0)
            sock.settimeout(None)
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            return SocketChannel(sock, timeout)
        except OSError as e:
            last = e
            if attempt < retries:
                time.sleep(delay)
    raise ChannelError(f"cannot reach {addr} after {retries + 1} attempts ({retries} retries): {last}")


# ---------------------------------------------------------------------------
# drivers


def _persist(party: Party, path) -> None:
    if path is not None:
        party.transcript.write_jsonl(path)


def run_party(party: Party, channel: SocketChannel, transcript_path=None) -> tuple[float, Transcript]:
    """Drive one party over a blocking channel until RESULT (or failure)."""
    try:
        channel.send_many(party.start())
        while not party.done:
            out = party.step(channel.recv())
            channel.send_many(out)
    except (ConfigMismatch, ProtocolViolation) as e:
        if party.phase != "FAILED":
            try:
                channel.send(party.error_message(str(e)))
            except ChannelError:
                pass
        _persist(party, transcript_path)
        raise
    except RdipeError:
        _persist(party, transcript_path)
        raise
    _persist(party, transcript_path)
    return party.f, party.transcript


def serve(state: QuantumState, config: ProtocolConfig, addr: str, transcript_path=None,
          accept_timeout: float = 60.0, timeout: float = 60.0, ready: threading.Event | None = None):
    """Accept one peer on ``addr`` and run this party's side of the session."""
    party = Party(state, config)
    srv = listen(addr)
    if ready is not None:
        ready.port = srv.getsockname()[1]
        ready.set()
    try:
        srv.settimeout(accept_timeout)
        try:
            sock, _ = srv.accept()
        except OSError as e:
            raise ChannelError(f"no peer connected to {addr}: {e}") from None
        sock.settimeout(None)
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    finally:
        srv.close()
    channel = SocketChannel(sock, timeout)
    try:
        return run_party(party, channel, transcript_path)
    finally:
        channel.close()


def connect(state: QuantumState, config: ProtocolConfig, addr: str, transcript_path=None,
            retries: int = 5, delay: float = 0.2, timeout: float = 60.0):
    """Connect to a serving peer and run this party's side of the session."""
    party = Party(state, config)
    channel = open_connection(addr, retries, delay, timeout)
    try:
        return run_party(party, channel, transcript_path)
    finally:
        channel.close()


def run_session(state_a: QuantumState, state_b: QuantumState, config_a: ProtocolConfig,
                config_b: ProtocolConfig) -> tuple[Transcript, Transcript]:
    """Both parties in one thread over an in-memory framed pipe."""
    alice, bob = Party(state_a, config_a), Party(state_b, config_b)
    ca, cb = memory_pair()
    for m in alice.start():
        ca.send(m)
    for m in bob.start():
        cb.send(m)
    parties = ((alice, ca), (bob, cb))
    while not (alice.done and bob.done):
        progressed = False
        for party, ch in parties:
            msg = ch.poll()
            while msg is not None:
                progressed = True
                try:
                    out = party.step(msg)
                except (ConfigMismatch, ProtocolViolation) as e:
                    if party.phase != "FAILED":
                        ch.send(party.error_message(str(e)))
                    raise
                for m in out:
                    ch.send(m)
                msg = ch.poll()
        if not progressed:
            raise ProtocolViolation("session stalled before completion")
    return alice.transcript, bob.transcript


def _pair_configs(config: ProtocolConfig, config_b: ProtocolConfig | None):
    config_a = config.for_role("alice")
    config_b = config.for_role("bob") if config_b is None else config_b.for_role("bob")
    return config_a, config_b


def run_rdipe(state_a: QuantumState, state_b: QuantumState, config: ProtocolConfig,
              config_b: ProtocolConfig | None = None) -> tuple[float, Transcript]:
    """Run the full message-level protocol in process; returns Alice's ``f`` and transcript.

    ``config`` is used for Alice; Bob uses ``config_b`` or, by default, the
    same master seed (separate substreams are keyed by role).
    """
    if state_a.n != state_b.n:
        raise DimensionMismatch("both states need the same number of qubits")
    ta, _ = run_session(state_a, state_b, *_pair_configs(config, config_b))
    return ta.f, ta


# ---------------------------------------------------------------------------
# message-free replay


@dataclass(frozen=True)
class RoundArrays:
    coins: np.ndarray
    xs: np.ndarray
    zs: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    values: np.ndarray
    A: float
    B: float
    f: float


def simulate_rdipe(state_a: QuantumState, state_b: QuantumState, config: ProtocolConfig,
                   config_b: ProtocolConfig | None = None) -> RoundArrays:
    """Same draws and same ``f`` as :func:`run_rdipe`, without building messages."""
    if state_a.n != state_b.n:
        raise DimensionMismatch("both states need the same number of qubits")
    ca, cb = _pair_configs(config, config_b)
    if ca.shared_fields() != cb.shared_fields():
        raise ConfigMismatch("config mismatch between parties")
    _check_inputs(state_a, ca)
    _check_inputs(state_b, cb)
    key = _xor(party_seed_bytes(ca), party_seed_bytes(cb))
    coins = round_coins(key, ca.N1)
    xs = np.zeros(ca.N1, dtype=np.uint64)
    zs = np.zeros(ca.N1, dtype=np.uint64)
    for bit, (s, c) in enumerate(((state_a, ca), (state_b, cb))):
        idx = np.flatnonzero(coins == bit)
        xs[idx], zs[idx] = _draw_labels(s, c, len(idx))
    alpha = _local_estimates(state_a, ca, xs, zs)
    beta = _local_estimates(state_b, cb, xs, zs)
    A, B = _local_purity(state_a, ca), _local_purity(state_b, cb)
    values = round_values(alpha, beta, A, B)
    return RoundArrays(coins, xs, zs, alpha, beta, values, A, B, float(np.mean(values)))

"""Discrete-event simulation of the low-power-listening MAC with flooding.

Every tag runs the same state machine::

    Sleep -> Observe -> Receive -> Validate -> Sleep
                     -> Transmit -> Sleep
                     -> Sleep

Nodes wake on a grid with period ``sleep_period`` plus a per-cycle random
offset, sample the channel for ``observation_period`` and count bit
transitions. A busy channel sends the node into Receive, where it locks on
to a preamble with enough bits left before the delimiter. An idle channel
with a queued frame starts a transmission: long preamble then frame.

Time is kept in integer SMCLK ticks (16 per microsecond) so that every
timing constant, including half-bit lengths at 512 bps, is exact.
Transmissions are intervals with a precomputed FM0 edge list; edges are
counted analytically instead of being scheduled one by one.
"""
from __future__ import annotations

import heapq
import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .codec import CLOCK_HZ, PREAMBLE_LOCK_BITS, BitTiming, Frame, decode_stream, encode_frame, preamble_bytes, transition_offsets
from .flood import Action, FloodState, RelayPolicy, handle_frame
from .rf import RfEnvironment
from .topology import OFF, CancellationMode, Deployment, link_cancelled, link_weight

TICKS_PER_US = CLOCK_HZ // 1_000_000
TICKS_PER_MS = 1000 * TICKS_PER_US


def ms_to_ticks(ms: float) -> int:
    ticks = ms * TICKS_PER_MS
    r = round(ticks)
    if abs(ticks - r) > 1e-6:
        raise ValueError(f"{ms} ms is not a whole number of clock ticks")
    return int(r)


def ticks_to_us(ticks: int) -> float:
    return ticks / TICKS_PER_US


class Mode(str, Enum):
    SLEEP = "Sleep"
    OBSERVE = "Observe"
    RECEIVE = "Receive"
    VALIDATE = "Validate"
    TRANSMIT = "Transmit"


ALLOWED_TRANSITIONS = {
    Mode.SLEEP: {Mode.OBSERVE},
    Mode.OBSERVE: {Mode.RECEIVE, Mode.TRANSMIT, Mode.SLEEP},
    Mode.RECEIVE: {Mode.VALIDATE, Mode.SLEEP},
    Mode.VALIDATE: {Mode.SLEEP},
    Mode.TRANSMIT: {Mode.SLEEP},
}


class EventKind(int, Enum):
    # value doubles as the tie-break order at equal (time, node)
    TX_END = 0
    RX_TIMEOUT = 1
    VALIDATE_END = 2
    OBSERVATION_END = 3
    INJECT = 4
    WAKE_UP = 5
    TX_START = 6


@dataclass(frozen=True)
class MacConfig:
    """MAC timing, buffers and power figures. Durations in ms, powers in mW."""

    sleep_period: float = 26.5
    reception_timeout: float = 15.0
    preamble_length: float = 36.0
    inter_frame_gap: float = 0.25
    jitter_low: float = 0.025
    jitter_high: float = 0.0375
    cycle_randomization: float = 5.0
    observation_period: float = 6.1
    busy_threshold: int = 8
    rx_buffer: int = 8
    tx_buffer: int = 8
    validation_time: float = 1.0
    noise_edge_rate: float = 100.0  # edges per second
    bit_length: int = 1600
    rx_power: float = 1.3
    tx_power: float = 0.7
    mcu_power: float = 2.2
    sleep_power: float = 0.0
    phase_policy: str = "single"
    initial_phase: str = "random"
    relay: RelayPolicy = field(default_factory=RelayPolicy)

    def __post_init__(self):
        if self.preamble_length < self.sleep_period + self.observation_period:
            raise ValueError("preamble must cover a full sleep period plus an observation window")
        if self.phase_policy not in ("single", "phase_shift_repeat"):
            raise ValueError(f"unknown phase policy {self.phase_policy!r}")
        if self.initial_phase not in ("random", "aligned"):
            raise ValueError(f"unknown initial phase {self.initial_phase!r}")
        if not self.jitter_low <= self.jitter_high:
            raise ValueError("jitter_low must not exceed jitter_high")
        if self.rx_buffer < 1 or self.tx_buffer < 1:
            raise ValueError("buffers need room for at least one frame")
        BitTiming(self.bit_length)
        for name in ("sleep_period", "reception_timeout", "inter_frame_gap", "jitter_low", "jitter_high",
                     "cycle_randomization", "observation_period", "validation_time"):
            ms_to_ticks(getattr(self, name))

    @property
    def timing(self) -> BitTiming:
        return BitTiming(self.bit_length)

    @property
    def copies_per_frame(self) -> int:
        return 2 if self.phase_policy == "phase_shift_repeat" else 1

    def frame_airtime_ms(self) -> float:
        """Preamble plus SFD, body and CRC."""
        t = self.timing
        bits = 8 * (preamble_bytes(self.preamble_length, t) + 11)
        return bits * t.bit_us / 1000.0


@dataclass
class EnergyLedger:
    """Per-mode time and energy. Energies in mJ, durations in ms."""

    durations: dict[str, float]
    rx_energy: float
    tx_energy: float
    mcu_active_energy: float
    sleep_energy: float

    @property
    def total_energy(self) -> float:
        return self.rx_energy + self.tx_energy + self.mcu_active_energy + self.sleep_energy

    @property
    def rx_time(self) -> float:
        return self.durations[Mode.OBSERVE.value] + self.durations[Mode.RECEIVE.value]

    @property
    def tx_time(self) -> float:
        return self.durations[Mode.TRANSMIT.value]


def energy_from_durations(durations_ticks: dict[Mode, int], mac: MacConfig) -> EnergyLedger:
    """Superpose mode powers: RX in Observe/Receive, MCU in Observe/Validate/Transmit, TX on air."""
    ms = {m.value: durations_ticks.get(m, 0) / TICKS_PER_MS for m in Mode}
    rx_s = (durations_ticks.get(Mode.OBSERVE, 0) + durations_ticks.get(Mode.RECEIVE, 0)) / CLOCK_HZ
    mcu_s = (durations_ticks.get(Mode.OBSERVE, 0) + durations_ticks.get(Mode.VALIDATE, 0)
             + durations_ticks.get(Mode.TRANSMIT, 0)) / CLOCK_HZ
    tx_s = durations_ticks.get(Mode.TRANSMIT, 0) / CLOCK_HZ
    sleep_s = durations_ticks.get(Mode.SLEEP, 0) / CLOCK_HZ
    return EnergyLedger(
        durations=ms,
        rx_energy=mac.rx_power * rx_s,
        tx_energy=mac.tx_power * tx_s,
        mcu_active_energy=mac.mcu_power * mcu_s,
        sleep_energy=mac.sleep_power * sleep_s,
    )


@dataclass(frozen=True)
class Traffic:
    time_ms: float
    src: int
    frame: Frame


@dataclass
class Transmission:
    tx_id: int
    node: int
    frame: Frame
    path: tuple[int, ...]
    origin_tick: int
    start: int
    end: int
    sfd_tick: int
    edges: np.ndarray  # absolute ticks
    shifted: bool
    copy_index: int
    audible: frozenset[int] = frozenset()


@dataclass
class Delivery:
    time_us: float
    src: int
    dst: int
    message_id: int
    path: list[int]
    latency_us: float


@dataclass
class SimReport:
    seed: int
    duration_ms: float
    end_time_ms: float
    deliveries: list[Delivery]
    energy: dict[int, EnergyLedger]
    collisions: int
    false_triggers: int
    missed_preambles: int
    drops: dict[str, int]
    transmissions: list[dict]
    reception_timeouts: int
    trace: list[tuple[int, int, str, str]] = field(default_factory=list, repr=False)

    def delivered_keys(self, dst: int | None = None) -> set[tuple[int, int]]:
        return {(d.src, d.message_id) for d in self.deliveries if dst is None or d.dst == dst}

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "duration_ms": self.duration_ms,
            "end_time_ms": self.end_time_ms,
            "deliveries": [asdict(d) for d in self.deliveries],
            "energy": {
                str(k): {
                    "durations_ms": v.durations,
                    "rx_energy_mJ": v.rx_energy,
                    "tx_energy_mJ": v.tx_energy,
                    "mcu_active_energy_mJ": v.mcu_active_energy,
                    "sleep_energy_mJ": v.sleep_energy,
                }
                for k, v in sorted(self.energy.items())
            },
            "counters": {
                "collisions": self.collisions,
                "false_triggers": self.false_triggers,
                "missed_preambles": self.missed_preambles,
                "reception_timeouts": self.reception_timeouts,
                "drops": dict(sorted(self.drops.items())),
            },
            "transmissions": self.transmissions,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


@lru_cache(maxsize=4096)
def _waveform_edges(frame: Frame, preamble_ms: float, bit_length: int) -> tuple[np.ndarray, int, int]:
    """Edge offsets (ticks), SFD offset (ticks) and total length (ticks) of one transmission."""
    levels = encode_frame(frame, preamble_ms, BitTiming(bit_length))
    half = bit_length // 2 if bit_length % 2 == 0 else None
    if half is None:
        raise ValueError("odd bit length")
    edges = np.concatenate(([0], transition_offsets(levels))) * half
    sfd = 8 * preamble_bytes(preamble_ms, BitTiming(bit_length)) * bit_length
    return edges.astype(np.int64), sfd, len(levels) * half


@lru_cache(maxsize=4096)
def _decode_clean(frame: Frame, preamble_ms: float, bit_length: int) -> tuple[Frame, bool]:
    found, _ = decode_stream(encode_frame(frame, preamble_ms, BitTiming(bit_length)))
    if len(found) != 1:
        return frame, False
    return found[0].frame, found[0].crc_ok


@dataclass
class _Node:
    node_id: int
    flood: FloodState
    phase0: int
    mode: Mode = Mode.SLEEP
    mode_since: int = 0
    durations: dict[Mode, int] = field(default_factory=lambda: {m: 0 for m in Mode})
    tx_queue: deque = field(default_factory=deque)
    wake_at: int = 0
    lock: Transmission | None = None
    hunt_deadline: int | None = None
    pending: tuple | None = None
    tx_remaining: int = 0


class Simulator:
    """Single-threaded event loop; build one per run."""

    def __init__(
        self,
        env: RfEnvironment,
        dep: Deployment,
        mac: MacConfig,
        seed: int = 0,
        cancellation: CancellationMode = OFF,
        cancellable_links: Iterable[tuple[int, int]] | None = None,
        wake_phases: dict[int, float] | None = None,
    ):
        self.env = env
        self.dep = dep
        self.mac = mac
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.timing = mac.timing
        self.bit_ticks = mac.bit_length
        self.t_s = ms_to_ticks(mac.sleep_period)
        self.t_o = ms_to_ticks(mac.observation_period)
        self.t_x = ms_to_ticks(mac.reception_timeout)
        self.t_g = ms_to_ticks(mac.inter_frame_gap)
        self.t_val = ms_to_ticks(mac.validation_time)
        self.rand_ticks = ms_to_ticks(mac.cycle_randomization)
        self.jit_lo = ms_to_ticks(mac.jitter_low)
        self.jit_hi = ms_to_ticks(mac.jitter_high)
        self._events: list[tuple] = []
        self._seq = 0
        self.now = 0
        self.on_air: list[Transmission] = []
        self.history: list[Transmission] = []
        self.trace: list[tuple[int, int, str, str]] = []
        self.deliveries: list[Delivery] = []
        self.collisions = 0
        self.false_triggers = 0
        self.missed_preambles = 0
        self.reception_timeouts = 0
        self.drops = {"duplicate": 0, "limit": 0, "overflow": 0, "rx_overflow": 0, "crc": 0}
        self._tx_counter = 0
        self._max_len = _waveform_edges(Frame(0, 0), mac.preamble_length, mac.bit_length)[2]
        self.audible = self._link_table(cancellation, cancellable_links)
        self.nodes: dict[int, _Node] = {}
        wake_phases = wake_phases or {}
        for tid in dep.ids:
            phase = 0 if mac.initial_phase == "aligned" else int(self.rng.integers(0, self.t_s))
            if tid in wake_phases:
                phase = int(round(wake_phases[tid] * TICKS_PER_MS)) % self.t_s
            self.nodes[tid] = _Node(tid, FloodState(tid, mac.relay), phase)

    # -- link table ---------------------------------------------------------

    def _link_table(self, cancellation, cancellable) -> dict[tuple[int, int, bool], bool]:
        """``audible[(tx, rx, shifted)]`` for every ordered pair and both phases."""
        env, dep = self.env, self.dep
        allowed = None if cancellable is None else set(cancellable)
        table = {}
        for a, pa in dep.tags:
            for b, pb in dep.tags:
                if a == b:
                    continue
                alive = link_weight(env, dep, pa, pb) >= env.tag_sensitivity
                for shifted in (False, True):
                    ok = alive
                    subject = allowed is None or (a, b) in allowed
                    if cancellation.kind == "geometric" and subject:
                        ok = ok and not link_cancelled(env, dep, pa, pb, math.pi / 2 if shifted else 0.0)
                    elif cancellation.kind == "bernoulli" and subject:
                        # draw for every pair so the stream does not depend on liveness
                        dead = self.rng.random() < cancellation.p_c
                        ok = ok and not dead
                    table[(a, b, shifted)] = ok
        return table

    # -- event plumbing -----------------------------------------------------

    def _push(self, time: int, node: int, kind: EventKind, payload=None) -> None:
        self._seq += 1
        heapq.heappush(self._events, (time, node, int(kind), self._seq, kind, payload))

    def _set_mode(self, node: _Node, mode: Mode, at: int | None = None) -> None:
        at = self.now if at is None else at
        if mode not in ALLOWED_TRANSITIONS[node.mode]:
            raise RuntimeError(f"illegal transition {node.mode.value} -> {mode.value} at node {node.node_id}")
        node.durations[node.mode] += at - node.mode_since
        self.trace.append((at, node.node_id, node.mode.value, mode.value))
        node.mode = mode
        node.mode_since = at

    def _schedule_wake(self, node: _Node) -> None:
        k = (self.now - node.phase0) // self.t_s + 1
        nominal = node.phase0 + k * self.t_s
        offset = int(self.rng.integers(0, self.rand_ticks + 1)) if self.rand_ticks else 0
        jitter = int(self.rng.integers(self.jit_lo, self.jit_hi + 1)) if self.jit_hi else 0
        node.wake_at = nominal + offset + jitter
        self._push(node.wake_at, node.node_id, EventKind.WAKE_UP)

    def _go_to_sleep(self, node: _Node) -> None:
        self._set_mode(node, Mode.SLEEP)
        node.lock = None
        node.hunt_deadline = None
        self._schedule_wake(node)

    # -- handlers -----------------------------------------------------------

    def _on_wake(self, node: _Node) -> None:
        self._set_mode(node, Mode.OBSERVE)
        self._push(self.now + self.t_o, node.node_id, EventKind.OBSERVATION_END, self.now)

    def _overlapping(self, t0: int, t1: int):
        """Transmissions intersecting [t0, t1); history is in start order."""
        for tx in reversed(self.history):
            if tx.start + self._max_len < t0:
                break
            if tx.start < t1 and tx.end > t0:
                yield tx

    def _genuine_edges(self, node_id: int, t0: int, t1: int) -> int:
        count = 0
        for tx in self._overlapping(t0, t1):
            if node_id in tx.audible:
                count += int(np.searchsorted(tx.edges, t1, "left") - np.searchsorted(tx.edges, t0, "left"))
        return count

    def _lock_candidate(self, node_id: int) -> Transmission | None:
        need = PREAMBLE_LOCK_BITS * self.bit_ticks
        best = None
        for tx in self.on_air:
            if node_id in tx.audible and tx.sfd_tick - self.now >= need:
                if best is None or (tx.sfd_tick, tx.tx_id) < (best.sfd_tick, best.tx_id):
                    best = tx
        return best

    def _on_observation_end(self, node: _Node, window_start: int) -> None:
        genuine = self._genuine_edges(node.node_id, window_start, self.now)
        noise = 0
        if self.mac.noise_edge_rate > 0:
            noise = int(self.rng.poisson(self.mac.noise_edge_rate * self.t_o / CLOCK_HZ))
        if genuine + noise >= self.mac.busy_threshold:
            self._set_mode(node, Mode.RECEIVE)
            cand = self._lock_candidate(node.node_id)
            if cand is not None:
                node.lock = cand
                return
            if genuine < self.mac.busy_threshold:
                self.false_triggers += 1
            else:
                self.missed_preambles += 1
            node.hunt_deadline = self.now + self.t_x
            self._push(node.hunt_deadline, node.node_id, EventKind.RX_TIMEOUT, node.hunt_deadline)
            return
        if node.tx_queue:
            self._start_transmit(node)
        else:
            self._go_to_sleep(node)

    def _start_transmit(self, node: _Node) -> None:
        frame, path, origin = node.tx_queue.popleft()
        self._set_mode(node, Mode.TRANSMIT)
        edges, sfd, length = _waveform_edges(frame, self.mac.preamble_length, self.mac.bit_length)
        start = self.now
        copies = self.mac.copies_per_frame
        node.tx_remaining = copies
        for c in range(copies):
            self._tx_counter += 1
            shifted = c == 1
            audible = frozenset(
                rx for rx in self.nodes if rx != node.node_id and self.audible[(node.node_id, rx, shifted)]
            )
            tx = Transmission(self._tx_counter, node.node_id, frame, path, origin, start, start + length,
                              start + sfd, edges + start, shifted, c, audible)
            self._push(start, node.node_id, EventKind.TX_START, tx)
            self._push(tx.end, node.node_id, EventKind.TX_END, tx)
            start = tx.end + self.t_g

    def _on_tx_start(self, tx: Transmission) -> None:
        self.on_air.append(tx)
        self.history.append(tx)
        for rx in sorted(tx.audible):
            other = self.nodes[rx]
            if other.mode is Mode.RECEIVE and other.lock is None and other.hunt_deadline is not None:
                if tx.sfd_tick - self.now >= PREAMBLE_LOCK_BITS * self.bit_ticks:
                    other.lock = tx
                    other.hunt_deadline = None

    def _corrupted(self, tx: Transmission, rx: int) -> bool:
        return any(other is not tx and rx in other.audible for other in self._overlapping(tx.start, tx.end))

    def _on_tx_end(self, node: _Node, tx: Transmission) -> None:
        self.on_air.remove(tx)
        for rx in sorted(tx.audible):
            other = self.nodes[rx]
            if other.lock is not tx:
                continue
            other.lock = None
            if self._corrupted(tx, rx):
                self.collisions += 1
                frame, crc_ok = tx.frame, False
            else:
                frame, crc_ok = _decode_clean(tx.frame, self.mac.preamble_length, self.mac.bit_length)
            self._set_mode(other, Mode.VALIDATE)
            other.pending = (frame, crc_ok, tx.path, tx.origin_tick)
            self._push(self.now + self.t_val, rx, EventKind.VALIDATE_END)
        node.tx_remaining -= 1
        if node.tx_remaining == 0:
            self._go_to_sleep(node)

    def _on_validate_end(self, node: _Node) -> None:
        frame, crc_ok, path, origin = node.pending
        node.pending = None
        if not crc_ok:
            self.drops["crc"] += 1
        else:
            free = self.mac.tx_buffer - len(node.tx_queue)
            decision = handle_frame(node.flood, frame, free)
            if decision.action is Action.DELIVER:
                self.deliveries.append(Delivery(
                    ticks_to_us(self.now), frame.sender_id, node.node_id, frame.message_id,
                    list(path) + [node.node_id], ticks_to_us(self.now - origin)))
                self.trace.append((self.now, node.node_id, "FrameDelivered", f"{frame.sender_id}:{frame.message_id}"))
            elif decision.action is Action.FORWARD:
                for _ in range(decision.copies):
                    node.tx_queue.append((frame, tuple(path) + (node.node_id,), origin))
            else:
                self.drops[decision.reason] += 1
        self._go_to_sleep(node)

    def _on_rx_timeout(self, node: _Node, deadline: int) -> None:
        if node.mode is Mode.RECEIVE and node.lock is None and node.hunt_deadline == deadline:
            self.reception_timeouts += 1
            self._go_to_sleep(node)

    def _on_inject(self, node: _Node, frame: Frame) -> None:
        node.flood.originate(frame)
        if len(node.tx_queue) >= self.mac.tx_buffer:
            self.drops["overflow"] += 1
            return
        node.tx_queue.append((frame, (node.node_id,), self.now))

    # -- driver -------------------------------------------------------------

    def _quiescent(self) -> bool:
        if self.on_air or any(e[4] is EventKind.INJECT for e in self._events):
            return False
        return all(n.mode in (Mode.SLEEP, Mode.OBSERVE) and not n.tx_queue for n in self.nodes.values())

    def run(self, traffic: Sequence[Traffic], duration_ms: float, stop_when_idle: bool = False) -> SimReport:
        end = int(round(duration_ms * TICKS_PER_MS))
        for t in traffic:
            if t.src not in self.nodes:
                raise ValueError(f"traffic source {t.src} not in deployment")
            if not 0 <= t.time_ms <= duration_ms:
                raise ValueError(f"traffic time {t.time_ms} ms outside [0, {duration_ms}] ms")
            self._push(int(round(t.time_ms * TICKS_PER_MS)), t.src, EventKind.INJECT, t.frame)
        for node in self.nodes.values():
            self.now = 0
            self._schedule_wake(node)
        stop = end
        while self._events:
            time, node_id, _, _, kind, payload = self._events[0]
            if time > end:
                break
            if stop_when_idle and self._quiescent():
                stop = self.now
                break
            heapq.heappop(self._events)
            self.now = time
            node = self.nodes[node_id]
            if kind is EventKind.WAKE_UP:
                if node.mode is Mode.SLEEP and node.wake_at == time:
                    self._on_wake(node)
            elif kind is EventKind.OBSERVATION_END:
                self._on_observation_end(node, payload)
            elif kind is EventKind.TX_START:
                self._on_tx_start(payload)
            elif kind is EventKind.TX_END:
                self._on_tx_end(node, payload)
            elif kind is EventKind.VALIDATE_END:
                self._on_validate_end(node)
            elif kind is EventKind.RX_TIMEOUT:
                self._on_rx_timeout(node, payload)
            elif kind is EventKind.INJECT:
                self._on_inject(node, payload)
        self.now = stop
        energy = {}
        for node in self.nodes.values():
            node.durations[node.mode] += stop - node.mode_since
            node.mode_since = stop
            energy[node.node_id] = energy_from_durations(node.durations, self.mac)
        tx_log = [
            {"tx_id": t.tx_id, "node": t.node, "sender": t.frame.sender_id, "message_id": t.frame.message_id,
             "copy": t.copy_index, "start_us": ticks_to_us(t.start), "end_us": ticks_to_us(t.end)}
            for t in self.history if t.start < stop
        ]
        return SimReport(
            seed=self.seed,
            duration_ms=duration_ms,
            end_time_ms=stop / TICKS_PER_MS,
            deliveries=self.deliveries,
            energy=energy,
            collisions=self.collisions,
            false_triggers=self.false_triggers,
            missed_preambles=self.missed_preambles,
            drops=dict(self.drops),
            transmissions=tx_log,
            reception_timeouts=self.reception_timeouts,
            trace=self.trace,
        )


def simulate(
    env: RfEnvironment,
    dep: Deployment,
    mac: MacConfig,
    traffic: Sequence[Traffic],
    duration_ms: float,
    seed: int = 0,
    cancellation: CancellationMode = OFF,
    cancellable_links: Iterable[tuple[int, int]] | None = None,
    stop_when_idle: bool = False,
    wake_phases: dict[int, float] | None = None,
) -> SimReport:
    """Run one simulation.

    ``wake_phases`` pins the wake-up grid offset (ms) of selected nodes;
    the others draw a random offset unless ``mac.initial_phase`` is
    ``aligned``. With ``stop_when_idle`` the run ends as soon as no frame is
    queued, on air or being processed, which is enough for delivery studies
    but truncates the energy ledgers.
    """
    sim = Simulator(env, dep, mac, seed, cancellation, cancellable_links, wake_phases)
    return sim.run(traffic, duration_ms, stop_when_idle)


def channel_observe(edge_count: int, mac: MacConfig) -> str:
    """Busy/idle verdict for the number of transitions seen in one window."""
    return "busy" if edge_count >= mac.busy_threshold else "idle"


def preamble_transitions(window_ms: float, mac: MacConfig) -> int:
    """Transitions an ongoing preamble produces in a window starting on a byte boundary."""
    edges, sfd, _ = _waveform_edges(Frame(0, 0), mac.preamble_length, mac.bit_length)
    t1 = min(ms_to_ticks(window_ms), sfd)
    return int(np.searchsorted(edges, t1, "left"))


def check_trace(trace: Sequence[tuple[int, int, str, str]]) -> list[str]:
    """Return a description of every transition that leaves the state machine."""
    problems = []
    current: dict[int, str] = {}
    for time, node, src, dst in trace:
        if src == "FrameDelivered":
            continue
        if current.get(node, Mode.SLEEP.value) != src:
            problems.append(f"t={time} node {node}: recorded from {src}, was in {current.get(node)}")
        if Mode(dst) not in ALLOWED_TRANSITIONS[Mode(src)]:
            problems.append(f"t={time} node {node}: {src} -> {dst} not allowed")
        current[node] = dst
    return problems


def transmit_with_phase_policy(frame: Frame, policy: str) -> list[tuple[Frame, float]]:
    """Channel occupancies for one frame: ``(frame, phase offset rad)`` pairs."""
    if policy == "single":
        return [(frame, 0.0)]
    if policy == "phase_shift_repeat":
        return [(frame, 0.0), (frame, math.pi / 2)]
    raise ValueError(f"unknown phase policy {policy!r}")

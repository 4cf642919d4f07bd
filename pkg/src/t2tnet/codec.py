"""Frame layout, CRC-16/CCITT-FALSE and FM0 baseband coding.

A baseband waveform is an array of half-bit levels (0/1), two samples per
bit. FM0 flips the level at every bit boundary and additionally mid-bit for
a data 0.

On-air layout after the preamble::

    SFD 0xAA | sender | receiver | type | msg id | payload (4) | CRC (2, big endian)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

PREAMBLE_BYTE = 0xBB
SFD_BYTE = 0xAA
BROADCAST = 0xFF
BODY_LEN = 8
FRAME_LEN = 11  # SFD + body + CRC
CLOCK_HZ = 16_000_000
PREAMBLE_LOCK_BITS = 16

_CRC_TABLE: list[int] = []


def _build_table() -> None:
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021) if crc & 0x8000 else (crc << 1)
        _CRC_TABLE.append(crc & 0xFFFF)


_build_table()


def crc16(data: bytes) -> int:
    """CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor."""
    crc = 0xFFFF
    for b in data:
        crc = ((crc << 8) & 0xFFFF) ^ _CRC_TABLE[((crc >> 8) ^ b) & 0xFF]
    return crc


@dataclass(frozen=True)
class Frame:
    sender_id: int
    receiver_id: int
    message_type: int = BROADCAST
    message_id: int = 0
    payload: bytes = b"\x00\x00\x00\x00"

    def __post_init__(self):
        for name in ("sender_id", "receiver_id", "message_type", "message_id"):
            v = getattr(self, name)
            if not 0 <= v <= 0xFF:
                raise ValueError(f"{name}={v} does not fit in one byte")
        if len(self.payload) != 4:
            raise ValueError(f"payload must be 4 bytes, got {len(self.payload)}")
        object.__setattr__(self, "payload", bytes(self.payload))

    @property
    def key(self) -> tuple[int, int]:
        return (self.sender_id, self.message_id)

    def body(self) -> bytes:
        return bytes([self.sender_id, self.receiver_id, self.message_type, self.message_id]) + self.payload

    @property
    def crc(self) -> int:
        return crc16(self.body())

    def to_bytes(self) -> bytes:
        """SFD, body and CRC: the 11 bytes that follow the preamble."""
        return bytes([SFD_BYTE]) + self.body() + self.crc.to_bytes(2, "big")

    @classmethod
    def from_body(cls, body: bytes) -> "Frame":
        if len(body) != BODY_LEN:
            raise ValueError(f"frame body must be {BODY_LEN} bytes")
        return cls(body[0], body[1], body[2], body[3], bytes(body[4:8]))

    def hex(self) -> str:
        return self.to_bytes().hex(" ")


@dataclass(frozen=True)
class BitTiming:
    bit_length: int = 1600
    clock_rate: int = CLOCK_HZ

    def __post_init__(self):
        if self.bit_length not in (1600, 16000, 31250):
            raise ValueError(f"unsupported bit length {self.bit_length} cycles")

    @property
    def data_rate(self) -> float:
        return self.clock_rate / self.bit_length

    @property
    def bit_us(self) -> float:
        return 1e6 * self.bit_length / self.clock_rate

    def airtime_us(self, n_bits: int) -> float:
        return n_bits * self.bit_us


def preamble_bytes(preamble_ms: float, timing: BitTiming) -> int:
    """Whole 0xBB bytes needed to cover ``preamble_ms`` at the active bit rate."""
    bits = preamble_ms * 1e-3 * timing.data_rate
    return max(1, math.ceil(round(bits, 9) / 8))


def bytes_to_bits(data: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8))


def bits_to_bytes(bits: Sequence[int]) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()


def fm0_encode(bits: Sequence[int], start_level: int = 1) -> np.ndarray:
    """Half-bit levels for ``bits``.

    The level entering the first bit is ``start_level``; the first half of
    the first bit is its inverse (boundary flip).
    """
    bits = np.asarray(bits, dtype=np.int8)
    out = np.empty(2 * len(bits), dtype=np.uint8)
    level = start_level & 1
    for i, b in enumerate(bits):
        level ^= 1
        out[2 * i] = level
        if b == 0:
            level ^= 1
        out[2 * i + 1] = level
    return out


def fm0_decode(levels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bits from bit-aligned half-bit levels, plus a per-bit boundary check.

    ``ok[i]`` is False when there is no transition entering bit ``i``
    (``ok[0]`` is always True since the preceding level is unknown).
    """
    lv = np.asarray(levels, dtype=np.int8)
    n = len(lv) // 2
    pairs = lv[: 2 * n].reshape(n, 2)
    bits = (pairs[:, 0] == pairs[:, 1]).astype(np.uint8)
    ok = np.ones(n, dtype=bool)
    ok[1:] = pairs[1:, 0] != pairs[:-1, 1]
    return bits, ok


def encode_frame(frame: Frame, preamble_duration: float = 36.0, timing: BitTiming | None = None) -> np.ndarray:
    """FM0 waveform of preamble, SFD, body and CRC."""
    timing = timing or BitTiming()
    raw = bytes([PREAMBLE_BYTE]) * preamble_bytes(preamble_duration, timing) + frame.to_bytes()
    return fm0_encode(bytes_to_bits(raw))


def frame_bits(preamble_duration: float = 36.0, timing: BitTiming | None = None) -> int:
    timing = timing or BitTiming()
    return 8 * (preamble_bytes(preamble_duration, timing) + FRAME_LEN)


def transition_offsets(levels: np.ndarray) -> np.ndarray:
    """Half-bit indices at which the level changes (index i: change entering sample i)."""
    lv = np.asarray(levels, dtype=np.int8)
    return np.flatnonzero(lv[1:] != lv[:-1]) + 1


@dataclass
class DecodeDiagnostics:
    preamble_locks: int = 0
    false_triggers: int = 0
    timeouts: int = 0
    hex_dumps: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class DecodedFrame:
    frame: Frame
    crc_ok: bool
    received_crc: int
    start: int  # half-bit index of the SFD


_PREAMBLE_BITS = np.unpackbits(np.array([PREAMBLE_BYTE], dtype=np.uint8)).astype(np.int8)
_SFD_BITS = np.unpackbits(np.array([SFD_BYTE], dtype=np.uint8)).astype(np.int8)


def _runs_ending(match: np.ndarray) -> np.ndarray:
    """Length of the run of True values ending at each index."""
    idx = np.arange(len(match))
    last_false = np.maximum.accumulate(np.where(match, -1, idx))
    return idx - last_false


def _preamble_lock(bits: np.ndarray, ok: np.ndarray, begin: int) -> tuple[int, int, int] | None:
    """First ``(lock_index, run_start, alignment)`` at or after ``begin``.

    ``lock_index`` is the index of the 16th consecutive bit matching the
    repeated preamble byte under some byte alignment, with a valid FM0
    boundary in front of every bit but the first.
    """
    n = len(bits)
    if n - begin < PREAMBLE_LOCK_BITS:
        return None
    best: tuple[int, int, int] | None = None
    seg = bits[begin:].astype(np.int8)
    seg_ok = ok[begin:].copy()
    seg_ok[0] = True
    idx = np.arange(begin, n)
    for align in range(8):
        match = (seg == _PREAMBLE_BITS[(idx + align) % 8]) & seg_ok
        runs = _runs_ending(match)
        hits = np.flatnonzero(runs >= PREAMBLE_LOCK_BITS)
        if len(hits):
            lock = begin + int(hits[0])
            if best is None or lock < best[0]:
                best = (lock, lock - PREAMBLE_LOCK_BITS + 1, align)
    return best


def _find_sfd(bits: np.ndarray, run_start: int, align: int) -> int | None:
    """Index of the SFD's first bit, searched where the preamble run ends."""
    n = len(bits)
    idx = np.arange(run_start, n)
    mismatch = np.flatnonzero(bits[run_start:] != _PREAMBLE_BITS[(idx + align) % 8])
    end = run_start + int(mismatch[0]) if len(mismatch) else n
    for s in range(max(run_start + PREAMBLE_LOCK_BITS, end - 7), end + 1):
        if s + 8 > n:
            return None
        if np.array_equal(bits[s : s + 8], _SFD_BITS):
            return s
    return None


def _activity_bursts(levels: np.ndarray) -> int:
    """Number of transition bursts separated by at least one idle bit (3 flat half-bits)."""
    edges = transition_offsets(levels)
    if len(edges) == 0:
        return 0
    return 1 + int(np.count_nonzero(np.diff(edges) >= 3))


def decode_stream(symbols: Sequence[int], timing: BitTiming | None = None) -> tuple[list[DecodedFrame], DecodeDiagnostics]:
    """Find every frame in a half-bit level stream.

    The half-bit phase of the stream is unknown; both phases are tried and the
    earliest preamble lock wins. Bursts of activity that do not produce a
    frame count as false triggers. A frame cut short after its SFD counts as
    a reception timeout.
    """
    del timing  # levels are sampled per half bit; duration only matters to the MAC
    levels = np.asarray(symbols, dtype=np.int8)
    diag = DecodeDiagnostics()
    frames: list[DecodedFrame] = []
    decoded = [fm0_decode(levels[p:]) for p in (0, 1)]
    pos = 0  # half-bit cursor
    while True:
        best = None
        for phase in (0, 1):
            bits, ok = decoded[phase]
            begin_bit = max(0, math.ceil((pos - phase) / 2))
            lock = _preamble_lock(bits, ok, begin_bit)
            if lock is not None:
                lock_half = phase + 2 * lock[0]
                if best is None or lock_half < best[0]:
                    best = (lock_half, phase, lock[1], lock[2])
        if best is None:
            break
        _, phase, run_start, align = best
        bits, ok = decoded[phase]
        diag.preamble_locks += 1
        sfd = _find_sfd(bits, run_start, align)
        if sfd is None:
            # lost sync inside the preamble or no delimiter before the stream ended
            if run_start + PREAMBLE_LOCK_BITS >= len(bits) - 8:
                diag.timeouts += 1
                break
            pos = phase + 2 * (run_start + PREAMBLE_LOCK_BITS)
            continue
        body_start = sfd + 8
        if body_start + 80 > len(bits):
            diag.timeouts += 1
            diag.hex_dumps.append(bits_to_bytes(bits[sfd:]).hex(" "))
            break
        raw = bits_to_bytes(bits[body_start : body_start + 80])
        body, rx_crc = raw[:BODY_LEN], int.from_bytes(raw[BODY_LEN:], "big")
        crc_ok = crc16(body) == rx_crc and bool(ok[sfd + 1 : body_start + 80].all())
        frame = Frame.from_body(body)
        if not crc_ok:
            diag.hex_dumps.append(bits_to_bytes(bits[sfd : body_start + 80]).hex(" "))
        frames.append(DecodedFrame(frame, crc_ok, rx_crc, phase + 2 * sfd))
        pos = phase + 2 * (body_start + 80)
    diag.false_triggers = max(0, _activity_bursts(levels) - len(frames))
    return frames, diag


def encode_rle(levels: Sequence[int]) -> str:
    """Run-length trace ``<first level>:<run>,<run>,...`` for golden files."""
    lv = list(np.asarray(levels, dtype=np.int8))
    if not lv:
        return ""
    runs = []
    count = 1
    for a, b in zip(lv, lv[1:]):
        if a == b:
            count += 1
        else:
            runs.append(count)
            count = 1
    runs.append(count)
    return f"{lv[0]}:" + ",".join(map(str, runs))


def decode_rle(trace: str) -> np.ndarray:
    if not trace:
        return np.zeros(0, dtype=np.uint8)
    first, runs = trace.split(":")
    level = int(first)
    out: list[int] = []
    for r in runs.split(","):
        out.extend([level] * int(r))
        level ^= 1
    return np.array(out, dtype=np.uint8)


def count_transitions(edge_times: np.ndarray, t0: float, t1: float) -> int:
    """Edges with ``t0 <= t < t1`` in a sorted array."""
    return int(np.searchsorted(edge_times, t1, side="left") - np.searchsorted(edge_times, t0, side="left"))


def iter_frames(frames: Iterable[DecodedFrame], crc_ok_only: bool = True) -> list[Frame]:
    return [d.frame for d in frames if d.crc_ok or not crc_ok_only]

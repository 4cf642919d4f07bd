"""Flooding link layer: freshness ring, per-frame rebroadcast limit, delivery."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Hashable

from .codec import Frame


class DedupRing:
    """FIFO of the most recent ``capacity`` frame keys."""

    def __init__(self, capacity: int = 10):
        if capacity < 1:
            raise ValueError("ring capacity must be at least 1")
        self.capacity = capacity
        self._entries: deque[Hashable] = deque()
        self._members: dict[Hashable, int] = {}

    def __contains__(self, key: Hashable) -> bool:
        return key in self._members

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> list[Hashable]:
        return list(self._entries)

    def insert(self, key: Hashable) -> Hashable | None:
        """Add ``key``; returns the evicted key when the ring was full."""
        evicted = None
        if len(self._entries) == self.capacity:
            evicted = self._entries.popleft()
            self._members[evicted] -= 1
            if not self._members[evicted]:
                del self._members[evicted]
        self._entries.append(key)
        self._members[key] = self._members.get(key, 0) + 1
        return evicted


@dataclass(frozen=True)
class RelayPolicy:
    rebroadcast_limit: int = 1
    ring_capacity: int = 10

    def __post_init__(self):
        if self.rebroadcast_limit < 0:
            raise ValueError("rebroadcast limit must be non-negative")


class Action(str, Enum):
    DELIVER = "deliver"
    FORWARD = "forward"
    DROP = "drop"


@dataclass(frozen=True)
class Decision:
    action: Action
    reason: str = ""
    copies: int = 0


@dataclass
class FloodState:
    """Per-node link-layer state."""

    node_id: int
    policy: RelayPolicy = field(default_factory=RelayPolicy)
    ring: DedupRing = field(init=False)
    forwarded: dict[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self):
        self.ring = DedupRing(self.policy.ring_capacity)

    def originate(self, frame: Frame) -> None:
        """Mark a locally generated frame as seen so echoes are not forwarded."""
        if frame.key not in self.ring:
            self.ring.insert(frame.key)


def handle_frame(state: FloodState, frame: Frame, tx_free_slots: int | None = None) -> Decision:
    """Link-layer decision for a frame that already passed its CRC check.

    ``tx_free_slots`` is the room left in the transmit buffer; ``None`` means
    unbounded. A forward asks for ``rebroadcast_limit`` transmissions, minus
    any this node already made for the same key.
    """
    key = frame.key
    if key in state.ring:
        return Decision(Action.DROP, "duplicate")
    state.ring.insert(key)
    if frame.receiver_id == state.node_id:
        return Decision(Action.DELIVER)
    remaining = state.policy.rebroadcast_limit - state.forwarded.get(key, 0)
    if remaining <= 0:
        return Decision(Action.DROP, "limit")
    if tx_free_slots is not None and tx_free_slots <= 0:
        return Decision(Action.DROP, "overflow")
    copies = remaining if tx_free_slots is None else min(remaining, tx_free_slots)
    state.forwarded[key] = state.forwarded.get(key, 0) + copies
    return Decision(Action.FORWARD, copies=copies)


def flood_delivery_probability(p_c: float, relays: int) -> float:
    """Success probability of flooding over ``relays`` parallel candidates plus the source."""
    if not 0.0 <= p_c <= 1.0:
        raise ValueError(f"p_c must be in [0, 1], got {p_c}")
    if relays < 0:
        raise ValueError("relay count must be non-negative")
    return 1.0 - p_c ** (relays + 1)


def relay_candidates(graph, src: int, dst: int) -> list[int]:
    """Nodes that hear ``src`` directly and reach ``dst`` directly."""
    return sorted(r for r in graph.nodes if r not in (src, dst) and graph.has_link(src, r) and graph.has_link(r, dst))


def flood_delivery_probability_on_graph(graph, src: int, dst: int, p_c: float) -> float:
    """:func:`flood_delivery_probability` with the relay count read off a link graph."""
    return flood_delivery_probability(p_c, len(relay_candidates(graph, src, dst)))

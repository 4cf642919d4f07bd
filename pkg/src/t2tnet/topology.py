"""Directed link graph of a tag deployment and connectivity queries."""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .rf import Position, RfEnvironment, is_cancelled, received_power, strongest_exciter


@dataclass(frozen=True)
class CancellationMode:
    """How phase-cancellation nulls are applied to otherwise alive links.

    ``kind`` is one of ``off``, ``geometric`` (free-space phase predicate) or
    ``bernoulli`` (each link independently dead with probability ``p_c``).
    """

    kind: str = "off"
    p_c: float = 0.1

    def __post_init__(self):
        if self.kind not in ("off", "geometric", "bernoulli"):
            raise ValueError(f"unknown cancellation mode {self.kind!r}")
        if not 0.0 <= self.p_c <= 1.0:
            raise ValueError(f"p_c must be in [0, 1], got {self.p_c}")

    @classmethod
    def parse(cls, text: str) -> "CancellationMode":
        """Accepts ``off``, ``geometric``, ``bernoulli`` or ``bernoulli(0.3)``."""
        text = text.strip().lower()
        if text.startswith("bernoulli"):
            rest = text[len("bernoulli"):].strip()
            if rest:
                if not (rest.startswith("(") and rest.endswith(")")):
                    raise ValueError(f"cannot parse cancellation mode {text!r}")
                return cls("bernoulli", float(rest[1:-1]))
            return cls("bernoulli")
        return cls(text)

    def __str__(self) -> str:
        return f"bernoulli({self.p_c:g})" if self.kind == "bernoulli" else self.kind


OFF = CancellationMode("off")


@dataclass
class Deployment:
    exciters: list[Position]
    tags: list[tuple[int, Position]]
    area_side: float = 30.0

    def __post_init__(self):
        if not self.exciters:
            raise ValueError("deployment needs at least one exciter")
        ids = [tid for tid, _ in self.tags]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate tag ids in {ids}")
        for tid in ids:
            if not 0 <= tid <= 0xFF:
                raise ValueError(f"tag id {tid} does not fit in one byte")

    @property
    def exciter(self) -> Position:
        return self.exciters[0]

    @property
    def ids(self) -> list[int]:
        return [tid for tid, _ in self.tags]

    def position(self, tag_id: int) -> Position:
        for tid, pos in self.tags:
            if tid == tag_id:
                return pos
        raise KeyError(f"unknown tag id {tag_id}")

    def to_dict(self) -> dict:
        d: dict = {"area_side": self.area_side}
        if len(self.exciters) == 1:
            d["exciter"] = [self.exciter.x, self.exciter.y]
        else:
            d["exciters"] = [[e.x, e.y] for e in self.exciters]
        d["tags"] = [{"id": tid, "x": p.x, "y": p.y} for tid, p in self.tags]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Deployment":
        if "exciters" in d:
            exciters = [Position(float(x), float(y)) for x, y in d["exciters"]]
        else:
            x, y = d["exciter"]
            exciters = [Position(float(x), float(y))]
        tags = [(int(t["id"]), Position(float(t["x"]), float(t["y"]))) for t in d["tags"]]
        return cls(exciters, tags, float(d.get("area_side", 30.0)))

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Deployment":
        return cls.from_dict(json.loads(Path(path).read_text()))


def random_deployment(
    n_tags: int,
    area_side: float,
    exciter: Position,
    rng: np.random.Generator,
    min_spacing: float = 0.0,
    max_attempts: int = 10_000,
) -> Deployment:
    """Uniform tag placement on ``[0, area_side]^2`` with rejection of close pairs."""
    placed: list[Position] = []
    for _ in range(n_tags):
        for _attempt in range(max_attempts):
            x, y = rng.uniform(0.0, area_side, size=2)
            p = Position(float(x), float(y))
            if p.distance_to(exciter) <= 0.0:
                continue
            if all(p.distance_to(q) >= min_spacing for q in placed):
                placed.append(p)
                break
        else:
            raise RuntimeError(f"could not place {n_tags} tags with spacing {min_spacing} m")
    return Deployment([exciter], [(i + 1, p) for i, p in enumerate(placed)], area_side)


@dataclass
class LinkGraph:
    nodes: list[int]
    links: dict[tuple[int, int], float] = field(default_factory=dict)

    def successors(self, node: int) -> list[int]:
        return [m for (n, m) in self.links if n == node]

    def has_link(self, src: int, dst: int) -> bool:
        return (src, dst) in self.links

    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {n: [] for n in self.nodes}
        for n, m in self.links:
            adj[n].append(m)
        for v in adj.values():
            v.sort()
        return adj

    def with_link(self, src: int, dst: int, weight: float) -> "LinkGraph":
        links = dict(self.links)
        links[(src, dst)] = weight
        return LinkGraph(list(self.nodes), links)


def link_weight(env: RfEnvironment, dep: Deployment, tx: Position, rx: Position) -> float:
    exc = dep.exciter if len(dep.exciters) == 1 else strongest_exciter(env, dep.exciters, tx)
    return received_power(env, exc, tx, rx)


def link_cancelled(env: RfEnvironment, dep: Deployment, tx: Position, rx: Position, phase_offset: float = 0.0) -> bool:
    exc = dep.exciter if len(dep.exciters) == 1 else strongest_exciter(env, dep.exciters, tx)
    return is_cancelled(env, exc, tx, rx, phase_offset)


def build_graph(
    env: RfEnvironment,
    dep: Deployment,
    cancellation: CancellationMode = OFF,
    rng_seed: int | None = None,
) -> LinkGraph:
    """Evaluate every ordered tag pair and keep links at or above sensitivity."""
    if not dep.tags:
        raise ValueError("deployment has no tags")
    rng = np.random.default_rng(rng_seed)
    g = LinkGraph(dep.ids)
    for n_id, n_pos in dep.tags:
        for m_id, m_pos in dep.tags:
            if n_id == m_id:
                continue
            w = link_weight(env, dep, n_pos, m_pos)
            if w < env.tag_sensitivity:
                continue
            if cancellation.kind == "geometric" and link_cancelled(env, dep, n_pos, m_pos):
                continue
            if cancellation.kind == "bernoulli" and rng.random() < cancellation.p_c:
                continue
            g.links[(n_id, m_id)] = w
    return g


def is_single_hop_connected(g: LinkGraph) -> bool:
    return all((n, m) in g.links for n in g.nodes for m in g.nodes if n != m)


def _reachable(adj: dict[int, list[int]], start: int) -> set[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def is_multi_hop_connected(g: LinkGraph) -> bool:
    """Strong connectivity: forward and reverse reachability from one node cover all."""
    if len(g.nodes) <= 1:
        return True
    adj = g.adjacency()
    radj: dict[int, list[int]] = {n: [] for n in g.nodes}
    for n, m in g.links:
        radj[m].append(n)
    root = g.nodes[0]
    everyone = set(g.nodes)
    return _reachable(adj, root) == everyone and _reachable(radj, root) == everyone


def hop_count(g: LinkGraph, src: int, dst: int) -> int | None:
    """Fewest directed hops from ``src`` to ``dst``; ``None`` if unreachable."""
    for node in (src, dst):
        if node not in g.nodes:
            raise KeyError(f"unknown node {node}")
    if src == dst:
        return 0
    adj = g.adjacency()
    dist = {src: 0}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                if v == dst:
                    return dist[v]
                queue.append(v)
    return None


def shortest_path(g: LinkGraph, src: int, dst: int) -> list[int] | None:
    if src == dst:
        return [src]
    adj = g.adjacency()
    parent: dict[int, int] = {}
    seen = {src}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v in seen:
                continue
            seen.add(v)
            parent[v] = u
            if v == dst:
                path = [v]
                while path[-1] != src:
                    path.append(parent[path[-1]])
                return path[::-1]
            queue.append(v)
    return None


# -- vectorised path used by the Monte Carlo study ---------------------------

def power_matrix(env: RfEnvironment, exciter: Position, xy: np.ndarray) -> np.ndarray:
    """Received power matrix ``P[n, m]`` (tx n, rx m) for isotropic or sector exciters.

    Diagonal entries are zero.
    """
    lam = env.wavelength
    ex = np.array([exciter.x, exciter.y])
    d_e = np.linalg.norm(xy - ex, axis=1)
    if np.any(d_e <= 0.0):
        raise ValueError("tag coincides with exciter")
    if env.gain_pattern_mode == "isotropic":
        g_e = np.full(len(xy), env.exciter_boresight_gain)
    else:
        bearing = np.degrees(np.arctan2(xy[:, 1] - ex[1], xy[:, 0] - ex[0]))
        off = (bearing - env.exciter_beam_direction + 180.0) % 360.0 - 180.0
        g_e = np.where(np.abs(off) <= env.exciter_beam_width / 2.0, env.exciter_boresight_gain, env.sector_floor_gain)
    p_avail = env.exciter_power * g_e * env.tag_gain * lam**2 / (4.0 * math.pi * d_e) ** 2
    diff = xy[:, None, :] - xy[None, :, :]
    d = np.linalg.norm(diff, axis=2)
    np.fill_diagonal(d, np.inf)
    p = p_avail[:, None] * (env.k0 * env.tag_gain * lam) ** 2 / (4.0 * math.pi * d) ** 2
    return p


def cancellation_matrix(env: RfEnvironment, exciter: Position, xy: np.ndarray, phase_offset: float = 0.0) -> np.ndarray:
    """Boolean ``C[n, m]``: tx n -> rx m link sits inside a cancellation null."""
    lam = env.wavelength
    ex = np.array([exciter.x, exciter.y])
    d_e = np.linalg.norm(xy - ex, axis=1)
    d = np.linalg.norm(xy[:, None, :] - xy[None, :, :], axis=2)
    np.fill_diagonal(d, np.inf)
    with np.errstate(invalid="ignore", divide="ignore"):
        arg = -(env.k0 + env.k1) * d_e[None, :] * lam * env.tag_gain / (8.0 * math.pi * d_e[:, None] * d)
        theta_c = np.arccos(np.clip(arg, -1.0, 1.0))
        extra = d_e[:, None] + d - d_e[None, :]
        theta_d = np.mod(2.0 * math.pi * extra / lam + phase_offset, 2.0 * math.pi)
    gap = np.abs(theta_d - theta_c) % (2.0 * math.pi)
    gap = np.minimum(gap, 2.0 * math.pi - gap)
    gap2 = np.abs(theta_d + theta_c) % (2.0 * math.pi)
    gap2 = np.minimum(gap2, 2.0 * math.pi - gap2)
    c = (np.minimum(gap, gap2) < env.cancellation_tolerance) & (np.abs(arg) <= 1.0)
    np.fill_diagonal(c, False)
    return c


def strongly_connected_matrix(adj: np.ndarray) -> bool:
    """Strong connectivity of a boolean adjacency matrix via forward/backward sweeps."""
    n = adj.shape[0]
    if n <= 1:
        return True
    for a in (adj, adj.T):
        reach = np.zeros(n, dtype=bool)
        reach[0] = True
        frontier = reach.copy()
        while frontier.any():
            nxt = a[frontier].any(axis=0) & ~reach
            reach |= nxt
            frontier = nxt
        if not reach.all():
            return False
    return True


def positions_array(tags: Iterable[tuple[int, Position]]) -> np.ndarray:
    return np.array([[p.x, p.y] for _, p in tags], dtype=float)

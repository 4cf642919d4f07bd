"""Scenario presets run by the command line tool.

Every scenario takes a resolved :class:`ScenarioConfig` and returns a mapping
of output file name to CSV text. Nothing here touches the file system.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Callable

import numpy as np

from .codec import Frame
from .coverage import CoverageExperiment, coverage_csv, max_range_csv, run_coverage, run_max_range_curve
from .efficiency import CASES, RANGES, TOPOLOGIES, EfficiencyParams, cross_validate, table_csv
from .flood import RelayPolicy
from .mac import MacConfig, Traffic, simulate
from .rf import Position, RfEnvironment, link_alive
from .topology import OFF, CancellationMode, Deployment, build_graph, random_deployment, shortest_path


class ConfigError(ValueError):
    """Raised for anything wrong with the user's configuration."""


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _f(x: float, digits: int = 6) -> str:
    return f"{x:.{digits}f}"


# -- parameter blocks ------------------------------------------------------------

@dataclass
class CoverageParams:
    area_side: float = 30.0
    tag_counts: list[int] = field(default_factory=lambda: list(range(2, 16)))
    modes: list[str] = field(default_factory=lambda: ["off", "geometric"])
    exciter: list[float] = field(default_factory=lambda: [0.0, 3.0])
    min_spacing: float | None = None
    antenna_dimension: float = 0.17


@dataclass
class RangeParams:
    d1: float = 3.0
    antenna_dimension: float = 0.17
    max_tags: int = 1000


@dataclass
class LineRangeParams:
    d1: float = 3.0  # exciter to the tag closest to it
    max_hops: int = 6
    margin: float = 0.98  # fraction of the longest live hop actually used
    frames: int = 5


@dataclass
class GridParams:
    side: float = 2.0
    backward_side: float = 1.5
    step: float = 0.5
    source: list[float] = field(default_factory=lambda: [0.5, 0.5])
    exciter: list[float] = field(default_factory=lambda: [0.0, 0.0])
    cancellation: str = "geometric"
    jitter: float = 0.02  # std of the per-run placement error, m
    frames: int = 25
    frame_interval_ms: float = 300.0


@dataclass
class MacSimParams:
    n_tags: int = 5
    area_side: float = 3.0
    exciter: list[float] = field(default_factory=lambda: [0.0, 0.0])
    messages: int = 10
    interval_ms: float = 500.0
    duration_ms: float = 10000.0
    cancellation: str = "off"
    phase_policy: str = "single"
    noise_edge_rate: float = 100.0


@dataclass
class EfficiencyScenarioParams:
    H: int | None = 3
    M: float | None = 2
    p_c: float | None = 0.3
    t_f: float = 44.8
    t_proc: float = 1.0
    sim_runs: int = 0  # 0 skips the simulation cross-check


@dataclass
class BridgeParams:
    exciter_gap: float = 12.0
    frames: int = 10
    frame_interval_ms: float = 400.0


PARAMS: dict[str, type] = {
    "coverage": CoverageParams,
    "range": RangeParams,
    "line-range": LineRangeParams,
    "grid-coverage": GridParams,
    "mac-sim": MacSimParams,
    "efficiency": EfficiencyScenarioParams,
    "bridge": BridgeParams,
}

DEFAULT_RUNS = {
    "coverage": 1000,
    "range": 1,
    "line-range": 1,
    "grid-coverage": 3,
    "mac-sim": 1,
    "efficiency": 1,
    "bridge": 1,
}


@dataclass
class ScenarioConfig:
    scenario: str
    seed: int = 0
    runs: int | None = None
    env: dict[str, Any] = field(default_factory=dict)
    params: dict[str, Any] = field(default_factory=dict)

    TOP_KEYS = ("scenario", "seed", "runs", "env", "params", "out")

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(raw) - set(cls.TOP_KEYS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "scenario" not in raw:
            raise ConfigError("config needs a scenario")
        cfg = cls(
            scenario=raw["scenario"],
            seed=raw.get("seed", 0),
            runs=raw.get("runs"),
            env=dict(raw.get("env") or {}),
            params=dict(raw.get("params") or {}),
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.scenario not in PARAMS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {', '.join(PARAMS)}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.runs is not None and (not isinstance(self.runs, int) or self.runs < 1):
            raise ConfigError("runs must be a positive integer")
        self.environment()
        self.scenario_params()

    def environment(self) -> RfEnvironment:
        names = {f.name for f in fields(RfEnvironment)}
        unknown = sorted(set(self.env) - names)
        if unknown:
            raise ConfigError(f"unknown env keys: {', '.join(unknown)}")
        try:
            return RfEnvironment().with_overrides(**self.env)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad env override: {e}") from e

    def scenario_params(self):
        kind = PARAMS[self.scenario]
        names = {f.name for f in fields(kind)}
        unknown = sorted(set(self.params) - names)
        if unknown:
            raise ConfigError(f"unknown {self.scenario} params: {', '.join(unknown)}")
        try:
            return kind(**self.params)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad {self.scenario} params: {e}") from e

    @property
    def effective_runs(self) -> int:
        return self.runs if self.runs is not None else DEFAULT_RUNS[self.scenario]

    def resolved(self) -> dict:
        """Fully expanded config, defaults included, for the manifest."""
        env = self.environment()
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "runs": self.effective_runs,
            "env": {f.name: getattr(env, f.name) for f in fields(RfEnvironment)},
            "params": asdict(self.scenario_params()),
        }


def _seed(cfg: ScenarioConfig, *path: int) -> int:
    seq = np.random.SeedSequence([cfg.seed % 2**32, cfg.seed >> 32, *path])
    return int(seq.generate_state(1)[0])


def _cancellation(text: str) -> CancellationMode:
    try:
        return CancellationMode.parse(text)
    except ValueError as e:
        raise ConfigError(str(e)) from e


# -- scenarios -------------------------------------------------------------------

def run_coverage_scenario(cfg: ScenarioConfig) -> dict[str, str]:
    p: CoverageParams = cfg.scenario_params()
    env = cfg.environment()
    parts = []
    for mode_text in p.modes:
        mode = _cancellation(mode_text)
        exp = CoverageExperiment(
            env=env,
            area_side=p.area_side,
            tag_counts=tuple(p.tag_counts),
            runs_per_point=cfg.effective_runs,
            cancellation=mode,
            base_seed=cfg.seed,
            exciter=Position(*p.exciter),
            min_spacing=p.min_spacing,
            antenna_dimension=p.antenna_dimension,
        )
        text = coverage_csv(run_coverage(exp), mode, cfg.seed)
        parts.append(text if not parts else text.split("\n", 1)[1])
    return {"coverage.csv": "".join(parts)}


def run_range_scenario(cfg: ScenarioConfig) -> dict[str, str]:
    p: RangeParams = cfg.scenario_params()
    rows = run_max_range_curve(cfg.environment(), p.d1, p.antenna_dimension, p.max_tags)
    return {"range.csv": max_range_csv(rows)}


def _longest_hop(env: RfEnvironment, exciter: Position, anchor: float, backward: bool) -> float:
    """Longest live hop along the boresight next to a tag ``anchor`` m from the exciter.

    Backward: the transmitter sits farther out and sends toward the anchor.
    Forward: the anchor transmits to a tag farther out. Found by bisection on
    the link budget itself.
    """
    a = Position(anchor, 0.0)

    def alive(d: float) -> bool:
        b = Position(anchor + d, 0.0)
        return link_alive(env, exciter, b, a) if backward else link_alive(env, exciter, a, b)

    lo, hi = 0.0, 1.0
    while alive(hi):
        lo, hi = hi, 2 * hi
        if hi > 1e6:
            raise ConfigError("link budget never closes; check env overrides")
    for _ in range(80):
        mid = (lo + hi) / 2
        if alive(mid):
            lo = mid
        else:
            hi = mid
    return lo


def line_chain(env: RfEnvironment, d1: float, hops: int, backward: bool, margin: float) -> list[float]:
    """Tag distances from the exciter for a greedy chain of ``hops`` hops starting at ``d1``."""
    exciter = Position(0.0, 0.0)
    xs = [d1]
    for _ in range(hops):
        xs.append(xs[-1] + margin * _longest_hop(env, exciter, xs[-1], backward))
    return xs


def _chain_delivers(env: RfEnvironment, xs: list[float], backward: bool, frames: int, seed: int) -> int:
    """Frames that cross the chain end to end in a MAC simulation."""
    ids = list(range(1, len(xs) + 1))
    tags = [(i, Position(x, 0.0)) for i, x in zip(ids, xs)]
    dep = Deployment([Position(0.0, 0.0)], tags, xs[-1] + 1.0)
    src, dst = (ids[-1], ids[0]) if backward else (ids[0], ids[-1])
    traffic = [Traffic(5.0 + 400.0 * k, src, Frame(src, dst, 0xFF, k % 256)) for k in range(frames)]
    rep = simulate(env, dep, MacConfig(), traffic, 400.0 * frames + 2000.0, seed, stop_when_idle=True)
    return len(rep.delivered_keys(dst))


def run_line_range_scenario(cfg: ScenarioConfig) -> dict[str, str]:
    p: LineRangeParams = cfg.scenario_params()
    if p.max_hops < 1 or not 0 < p.margin < 1 or p.d1 <= 0:
        raise ConfigError("line-range needs max_hops >= 1, 0 < margin < 1 and d1 > 0")
    env = cfg.environment()
    rows = []
    for di, (name, backward) in enumerate((("backward", True), ("forward", False))):
        single = None
        for hops in range(1, p.max_hops + 1):
            xs = line_chain(env, p.d1, hops, backward, p.margin)
            span = xs[-1] - xs[0]
            single = span if single is None else single
            delivered = _chain_delivers(env, xs, backward, p.frames, _seed(cfg, di, hops))
            rows.append([name, hops, _f(span), _f(span / single), delivered, p.frames])
    return {"line_range.csv": _csv(["direction", "hops", "range_m", "gain_vs_single_hop", "delivered", "frames"], rows)}


def _grid_points(side: float, step: float) -> list[tuple[float, float]]:
    n = int(round(side / step))
    return [(round(i * step, 9), round(j * step, 9)) for i in range(n + 1) for j in range(n + 1)]


def relay_point(src: tuple[float, float], dst: tuple[float, float], grid: list[tuple[float, float]],
                taken: set[tuple[float, float]]) -> tuple[float, float] | None:
    """Free grid point closest to the midpoint of ``src`` and ``dst``; ties go to lower x, then y."""
    mx, my = (src[0] + dst[0]) / 2, (src[1] + dst[1]) / 2
    free = [g for g in grid if g not in taken]
    if not free:
        return None
    return min(free, key=lambda g: (round(math.hypot(g[0] - mx, g[1] - my), 9), g[0], g[1]))


GRID_METHODS = ("vanilla", "phase_shift", "multi_hop")


def run_grid_scenario(cfg: ScenarioConfig) -> dict[str, str]:
    p: GridParams = cfg.scenario_params()
    if p.step <= 0 or p.side <= 0 or p.frames < 1 or p.jitter < 0:
        raise ConfigError("grid-coverage needs positive side, step and frames and a non-negative jitter")
    env = cfg.environment()
    mode = _cancellation(p.cancellation)
    exciter = Position(*p.exciter)
    src_pt = (float(p.source[0]), float(p.source[1]))
    cells = []
    summary = []
    for di, (direction, side) in enumerate((("forward", p.side), ("backward", p.backward_side))):
        grid = _grid_points(side, p.step)
        targets = [g for g in grid if g != src_pt and g != (exciter.x, exciter.y)]
        totals = {m: 0.0 for m in GRID_METHODS}
        for ci, dst_pt in enumerate(targets):
            relay = relay_point(src_pt, dst_pt, grid, {src_pt, dst_pt, (exciter.x, exciter.y)})
            for mi, method in enumerate(GRID_METHODS):
                got = 0
                for run in range(cfg.effective_runs):
                    rng = np.random.default_rng(_seed(cfg, di, ci, mi, run))
                    # the same placement error for every method within a run keeps the comparison paired
                    jit = np.random.default_rng(_seed(cfg, di, ci, 99, run)).normal(0.0, p.jitter, size=(3, 2))
                    a = Position(src_pt[0] + jit[0, 0], src_pt[1] + jit[0, 1])
                    b = Position(dst_pt[0] + jit[1, 0], dst_pt[1] + jit[1, 1])
                    tx, rx = (a, b) if direction == "forward" else (b, a)
                    tags = [(1, tx), (2, rx)]
                    if method == "multi_hop" and relay is not None:
                        tags.append((3, Position(relay[0] + jit[2, 0], relay[1] + jit[2, 1])))
                    dep = Deployment([exciter], tags, side + 1.0)
                    mac = MacConfig(phase_policy="phase_shift_repeat" if method == "phase_shift" else "single")
                    traffic = [Traffic(5.0 + p.frame_interval_ms * k, 1, Frame(1, 2, 0xFF, k % 256))
                               for k in range(p.frames)]
                    rep = simulate(env, dep, mac, traffic, p.frame_interval_ms * p.frames + 1000.0,
                                   int(rng.integers(2**63)), mode, stop_when_idle=True)
                    got += len(rep.delivered_keys(2))
                rate = got / (p.frames * cfg.effective_runs)
                totals[method] += rate
                rx_ = "" if relay is None or method != "multi_hop" else relay
                cells.append([direction, method, dst_pt[0], dst_pt[1],
                              "" if not rx_ else rx_[0], "" if not rx_ else rx_[1], _f(rate, 4)])
        for method in GRID_METHODS:
            summary.append([direction, method, len(targets), _f(totals[method] / len(targets), 4)])
    return {
        "grid_cells.csv": _csv(["direction", "method", "x", "y", "relay_x", "relay_y", "rate"], cells),
        "grid_summary.csv": _csv(["direction", "method", "cells", "coverage"], summary),
    }


def run_mac_scenario(cfg: ScenarioConfig) -> dict[str, str]:
    p: MacSimParams = cfg.scenario_params()
    if p.n_tags < 2 or p.messages < 0:
        raise ConfigError("mac-sim needs at least two tags")
    env = cfg.environment()
    mode = _cancellation(p.cancellation)
    try:
        mac = MacConfig(phase_policy=p.phase_policy, noise_edge_rate=p.noise_edge_rate)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    deliveries = []
    energy = []
    counters = []
    for run in range(cfg.effective_runs):
        rng = np.random.default_rng(_seed(cfg, run))
        dep = random_deployment(p.n_tags, p.area_side, Position(*p.exciter), rng)
        ids = dep.ids
        traffic = []
        for k in range(p.messages):
            src, dst = rng.choice(ids, size=2, replace=False)
            t = 5.0 + k * p.interval_ms
            if t > p.duration_ms:
                raise ConfigError("messages do not fit in duration_ms")
            traffic.append(Traffic(t, int(src), Frame(int(src), int(dst), 0xFF, k % 256)))
        rep = simulate(env, dep, mac, traffic, p.duration_ms, int(rng.integers(2**63)), mode)
        for d in rep.deliveries:
            deliveries.append([run, d.src, d.dst, d.message_id, _f(d.latency_us / 1000.0, 4),
                               "-".join(map(str, d.path))])
        for node, led in sorted(rep.energy.items()):
            energy.append([run, node, _f(led.rx_time, 4), _f(led.tx_time, 4), _f(led.rx_energy),
                           _f(led.tx_energy), _f(led.mcu_active_energy), _f(led.total_energy)])
        counters.append([run, p.messages, len(rep.delivered_keys()), rep.collisions, rep.false_triggers,
                         rep.missed_preambles, rep.reception_timeouts, len(rep.transmissions)])
    return {
        "deliveries.csv": _csv(["run", "src", "dst", "message_id", "latency_ms", "path"], deliveries),
        "energy.csv": _csv(["run", "node", "rx_ms", "tx_ms", "rx_mJ", "tx_mJ", "mcu_mJ", "total_mJ"], energy),
        "summary.csv": _csv(["run", "sent", "delivered", "collisions", "false_triggers", "missed_preambles",
                             "rx_timeouts", "transmissions"], counters),
    }


def run_efficiency_scenario(cfg: ScenarioConfig) -> dict[str, str]:
    p: EfficiencyScenarioParams = cfg.scenario_params()
    params = EfficiencyParams(p.H, p.M, p.p_c, p.t_f, p.t_proc)
    out = {"efficiency.csv": table_csv(params)}
    if p.sim_runs > 0:
        rows = []
        for topology in TOPOLOGIES:
            for rng in RANGES:
                for case in CASES:
                    try:
                        r = cross_validate(case, topology, rng, params, p.sim_runs, cfg.seed)
                    except ValueError:
                        continue
                    rows.append([topology, rng, case, r.runs, _f(r.analytic.success_probability),
                                 _f(r.simulated_success), _f(r.sigma), f"{r.analytic.expected_messages:g}",
                                 _f(r.simulated_messages, 4), r.collisions, int(r.agrees), r.note])
        out["cross_validation.csv"] = _csv(
            ["topology", "range", "case", "runs", "Pr_s", "sim_Pr_s", "sigma", "E_m", "sim_E_m", "collisions",
             "agrees", "note"], rows)
    return out


def bridge_deployment(gap: float = 12.0) -> Deployment:
    """Two exciters ``gap`` m apart, each with its own cluster, joined by one tag.

    Source 1 and two neighbours sit around the first exciter. Tag 5 is the
    bridge. Tags 6, 7, 8 form a chain that runs back toward the second
    exciter, where destination 2 sits. The first cluster reaches the bridge
    on a forward link; the second cluster is entered on backward links.
    """
    if gap < 10.0:
        raise ConfigError("exciter_gap below 10 m lets the source skip the bridge")
    tags = [
        (1, Position(1.5, 0.0)),
        (3, Position(-1.0, 0.5)),
        (4, Position(-0.8, -0.6)),
        (5, Position(gap - 6.5, 0.0)),
        (6, Position(gap - 5.3, 0.0)),
        (7, Position(gap - 4.1, 0.0)),
        (8, Position(gap - 2.6, 0.0)),
        (2, Position(gap - 1.2, 0.0)),
    ]
    return Deployment([Position(0.0, 0.0), Position(gap, 0.0)], tags, gap)


def run_bridge_scenario(cfg: ScenarioConfig) -> dict[str, str]:
    p: BridgeParams = cfg.scenario_params()
    env = cfg.environment()
    dep = bridge_deployment(p.exciter_gap)
    rows = []
    for run in range(cfg.effective_runs):
        traffic = [Traffic(5.0 + p.frame_interval_ms * k, 1, Frame(1, 2, 0xFF, k % 256)) for k in range(p.frames)]
        rep = simulate(env, dep, MacConfig(), traffic, p.frame_interval_ms * p.frames + 3000.0, _seed(cfg, run),
                       stop_when_idle=True)
        for d in rep.deliveries:
            if d.dst == 2:
                rows.append([run, d.message_id, len(d.path) - 1, "-".join(map(str, d.path)),
                             _f(d.latency_us / 1000.0, 4)])
    graph_path = shortest_path(build_graph(env, dep), 1, 2)
    layout = _csv(["id", "x", "y"], [[i, pos.x, pos.y] for i, pos in dep.tags])
    return {
        "bridge_deliveries.csv": _csv(["run", "message_id", "hops", "path", "latency_ms"], rows),
        "bridge_layout.csv": layout,
        "bridge_graph.csv": _csv(["shortest_path"], [["-".join(map(str, graph_path)) if graph_path else ""]]),
    }


RUNNERS: dict[str, Callable[[ScenarioConfig], dict[str, str]]] = {
    "coverage": run_coverage_scenario,
    "range": run_range_scenario,
    "line-range": run_line_range_scenario,
    "grid-coverage": run_grid_scenario,
    "mac-sim": run_mac_scenario,
    "efficiency": run_efficiency_scenario,
    "bridge": run_bridge_scenario,
}


def run_scenario(cfg: ScenarioConfig) -> dict[str, str]:
    cfg.validate()
    return RUNNERS[cfg.scenario](cfg)

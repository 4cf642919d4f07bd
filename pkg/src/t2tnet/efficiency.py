"""Expected message count, delivery time and success probability for
single-hop phase shifting (case A) versus multi-hop flooding (case B).

``t_proc`` is the per-hop forwarding processing time. It is unrelated to the
MAC preamble length.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

Case = Literal["A", "B"]
Topology = Literal["known", "unknown"]
Range = Literal["SHR", "MHR"]

CASES: tuple[Case, ...] = ("A", "B")
TOPOLOGIES: tuple[Topology, ...] = ("known", "unknown")
RANGES: tuple[Range, ...] = ("MHR", "SHR")


@dataclass(frozen=True)
class EfficiencyParams:
    H: int | None = None
    M: float | None = None
    p_c: float | None = None
    t_f: float = 44.8
    t_proc: float = 1.0

    def __post_init__(self):
        if self.H is not None and self.H < 1:
            raise ValueError("H must be >= 1")
        if self.M is not None and self.M < 0:
            raise ValueError("M must be >= 0")
        if self.p_c is not None and not 0.0 <= self.p_c <= 1.0:
            raise ValueError("p_c must be in [0, 1]")


@dataclass(frozen=True)
class Metrics:
    expected_messages: float
    expected_time: float
    success_probability: float


def _need(p: EfficiencyParams, cell: str, *names: str) -> None:
    missing = [n for n in names if getattr(p, n) is None]
    if missing:
        raise ValueError(f"cell {cell} needs {', '.join(missing)}")


def evaluate(case: Case, topology: Topology, rng: Range, p: EfficiencyParams) -> Metrics:
    cell = f"({case}, {topology}, {rng})"
    if case not in CASES or topology not in TOPOLOGIES or rng not in RANGES:
        raise ValueError(f"unknown cell {cell}")
    if case == "A":
        return Metrics(2, 2 * p.t_f, 1.0 if rng == "SHR" else 0.0)
    if topology == "known":
        if rng == "SHR":
            return Metrics(1, p.t_f, 1.0)
        _need(p, cell, "H")
        return Metrics(p.H, p.H * (p.t_f + p.t_proc) - p.t_proc, 1.0)
    # the unknown-topology rows are identical for SHR and MHR
    _need(p, cell, "M", "p_c")
    return Metrics(p.M + 1, p.M * (p.t_f + p.t_proc) + p.t_f, 1.0 - p.p_c ** (p.M + 1))


def table_csv(p: EfficiencyParams) -> str:
    """All eight cells as rows ``topology, range, case, E_m, E_t_ms, Pr_s``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["topology", "range", "case", "E_m", "E_t_ms", "Pr_s"])
    for topology in TOPOLOGIES:
        for rng in RANGES:
            for case in CASES:
                try:
                    m = evaluate(case, topology, rng, p)
                except ValueError:
                    w.writerow([topology, rng, case, "", "", ""])
                    continue
                w.writerow([topology, rng, case, f"{m.expected_messages:g}", f"{m.expected_time:.6g}", f"{m.success_probability:.6g}"])
    return buf.getvalue()


# -- simulation cross-check ---------------------------------------------------

@dataclass(frozen=True)
class CrossValidation:
    cell: tuple[str, str, str]
    runs: int
    analytic: Metrics
    simulated_success: float
    success_ci: tuple[float, float]
    sigma: float
    simulated_messages: float
    simulated_latency_ms: float
    collisions: int
    agrees: bool
    note: str = ""


def _star(shr: bool, relays: int):
    """Source 1 and destination 2 with ``relays`` candidates between them.

    The exciter sits at the origin; the source is 4 m out on the boresight.
    In SHR the destination is 1.5 m from the source (direct link alive), in
    MHR 2.5 m (direct link dead). Relays share the midline and hear each other.
    """
    from .rf import Position
    from .topology import Deployment

    gap = 1.5 if shr else 2.5
    tags = [(1, Position(4.0, 0.0)), (2, Position(4.0, gap))]
    for k in range(relays):
        dx = 0.0 if relays == 1 else -0.3 + 0.6 * k / (relays - 1)
        tags.append((10 + k, Position(4.0 + dx, gap / 2)))
    return Deployment([Position(0.0, 0.0)], tags, 5.0)


def cross_validate(case: Case, topology: Topology, rng: Range, p: EfficiencyParams, sim_runs: int = 2000,
                   base_seed: int = 0) -> CrossValidation:
    """Compare the closed-form cell with repeated MAC simulations.

    Layouts per cell:

    * case B, unknown topology: a star. The final hops into the destination
      are cancelled independently with probability ``p_c``. SHR uses ``M``
      relays plus the direct link; MHR has no direct link and uses ``M + 1``
      relays, so its simulated message count runs one above the table's.
    * case B, known topology, MHR: a chain of ``H`` hops towards the
      exciter, no cancellation.
    * case A: the same layouts with forwarding disabled and every frame sent
      twice, the second copy phase shifted.

    Relay wake-up grids are spread evenly over the sleep period so that MAC
    contention, which the closed forms ignore, cannot merge two forwards.
    """
    from .codec import Frame
    from .flood import RelayPolicy
    from .mac import MacConfig, Traffic, simulate
    from .rf import Position, RfEnvironment
    from .topology import OFF, CancellationMode, Deployment

    analytic = evaluate(case, topology, rng, p)
    env = RfEnvironment()
    cancellation = OFF
    cancellable = None
    note = ""
    if topology == "unknown" or rng == "SHR":
        if p.M is None and topology == "unknown":
            raise ValueError("unknown-topology cells need M")
        m = int(p.M) if p.M is not None else 0
        if p.M is not None and m != p.M:
            raise ValueError("simulation needs an integer relay count M")
        shr = rng == "SHR"
        if topology == "known":
            m = 0
        n_relays = m if shr else m + 1
        dep = _star(shr, n_relays)
        if topology == "unknown":
            if p.p_c is None:
                raise ValueError("unknown-topology cells need p_c")
            cancellation = CancellationMode("bernoulli", p.p_c)
            cancellable = [(r, 2) for r in dep.ids if r != 2]
        if not shr:
            note = "MHR star realises the source's extra attempt as one more relay"
    else:
        if p.H is None:
            raise ValueError("known MHR cells need H")
        # backward chain: destination 1 m from the exciter, each hop just inside
        # the range limit so that skipping a hop always fails
        from .link_analysis import optimal_spacing
        gain = env.exciter_boresight_gain
        xs = [1.0]
        for _ in range(p.H):
            xs.append(xs[-1] + 0.98 * optimal_spacing(env, xs[-1], gain))
        dep = Deployment([Position(0.0, 0.0)], [(2, Position(xs[0], 0.0)), (1, Position(xs[-1], 0.0))]
                         + [(10 + k, Position(x, 0.0)) for k, x in enumerate(xs[1:-1])], 10.0)
        cancellable = None
    relays = [t for t in dep.ids if t >= 10]
    t_s = MacConfig().sleep_period
    phases = {r: k * t_s / len(relays) for k, r in enumerate(relays)}
    if case == "A":
        mac = MacConfig(noise_edge_rate=0.0, phase_policy="phase_shift_repeat", relay=RelayPolicy(rebroadcast_limit=0))
    else:
        mac = MacConfig(noise_edge_rate=0.0)
    frame = Frame(1, 2, 0xFF, 1)
    successes = 0
    messages = 0
    latency = 0.0
    collisions = 0
    for run in range(sim_runs):
        seed = int(np.random.SeedSequence([base_seed, run]).generate_state(1)[0])
        rep = simulate(env, dep, mac, [Traffic(5.0, 1, frame)], 5000.0, seed, cancellation, cancellable,
                       stop_when_idle=True, wake_phases=phases)
        hits = [d for d in rep.deliveries if d.dst == 2]
        if hits:
            successes += 1
            latency += hits[0].latency_us / 1000.0
        messages += len(rep.transmissions)
        collisions += rep.collisions
    p_hat = successes / sim_runs
    p0 = analytic.success_probability
    sigma = math.sqrt(p0 * (1 - p0) / sim_runs)
    agrees = p_hat == p0 if sigma == 0 else abs(p_hat - p0) <= 3 * sigma
    from .coverage import wilson_interval

    return CrossValidation(
        cell=(case, topology, rng),
        runs=sim_runs,
        analytic=analytic,
        simulated_success=p_hat,
        success_ci=wilson_interval(successes, sim_runs),
        sigma=sigma,
        simulated_messages=messages / sim_runs,
        simulated_latency_ms=latency / successes if successes else float("nan"),
        collisions=collisions,
        agrees=agrees,
        note=note,
    )

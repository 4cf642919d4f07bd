"""Monte Carlo study of full single-hop versus multi-hop connectivity."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .link_analysis import LadderRow, fraunhofer_distance, ladder_csv, max_range_ladder
from .rf import Position, RfEnvironment
from .topology import OFF, CancellationMode, cancellation_matrix, power_matrix, strongly_connected_matrix

DEFAULT_EXCITER = Position(0.0, 3.0)


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if trials <= 0:
        raise ValueError("need at least one trial")
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    # the end points are exact at k = 0 and k = n; keep rounding from leaking in
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


def run_seed(base_seed: int, point: int, run: int) -> np.random.SeedSequence:
    """Per-run seed derived from (base seed, point index, run index) only."""
    return np.random.SeedSequence([base_seed, point, run])


@dataclass
class CoverageExperiment:
    env: RfEnvironment = field(default_factory=RfEnvironment)
    area_side: float = 30.0
    tag_counts: Sequence[int] = tuple(range(2, 16))
    runs_per_point: int = 1000
    cancellation: CancellationMode = OFF
    base_seed: int = 0
    exciter: Position = DEFAULT_EXCITER
    min_spacing: float | None = None  # None: Fraunhofer distance of ``antenna_dimension``
    antenna_dimension: float = 0.17

    def __post_init__(self):
        if self.runs_per_point < 1:
            raise ValueError("runs_per_point must be >= 1")
        if not len(self.tag_counts):
            raise ValueError("tag_counts must not be empty")
        if any(n < 1 for n in self.tag_counts):
            raise ValueError("tag counts must be positive")

    @property
    def spacing(self) -> float:
        if self.min_spacing is not None:
            return self.min_spacing
        return fraunhofer_distance(self.antenna_dimension, self.env.wavelength)


@dataclass(frozen=True)
class CoveragePoint:
    n_tags: int
    sh_probability: float
    mh_probability: float
    confidence_halfwidth: float
    sh_count: int
    mh_count: int
    runs: int


def _place(n: int, side: float, exciter: np.ndarray, spacing: float, rng: np.random.Generator) -> np.ndarray:
    pts = np.empty((n, 2))
    k = 0
    attempts = 0
    while k < n:
        attempts += 1
        if attempts > 1000 * n + 1000:
            raise RuntimeError(f"cannot place {n} tags {spacing} m apart in a {side} m square")
        p = rng.uniform(0.0, side, size=2)
        if np.all(p == exciter):
            continue
        if k and np.min(np.hypot(*(pts[:k] - p).T)) < spacing:
            continue
        pts[k] = p
        k += 1
    return pts


def connectivity_once(
    env: RfEnvironment, exciter: Position, xy: np.ndarray, cancellation: CancellationMode, rng: np.random.Generator
) -> tuple[bool, bool]:
    """(single-hop connected, multi-hop connected) for one placement."""
    n = len(xy)
    if n <= 1:
        return True, True
    alive = power_matrix(env, exciter, xy) >= env.tag_sensitivity
    np.fill_diagonal(alive, False)
    if cancellation.kind == "geometric":
        alive &= ~cancellation_matrix(env, exciter, xy)
    elif cancellation.kind == "bernoulli":
        alive &= rng.random((n, n)) >= cancellation.p_c
        np.fill_diagonal(alive, False)
    off_diag = ~np.eye(n, dtype=bool)
    sh = bool(alive[off_diag].all())
    mh = sh or strongly_connected_matrix(alive)
    return sh, mh


def run_coverage(exp: CoverageExperiment) -> list[CoveragePoint]:
    ex = np.array([exp.exciter.x, exp.exciter.y])
    points = []
    for idx, n in enumerate(exp.tag_counts):
        sh_count = mh_count = 0
        for run in range(exp.runs_per_point):
            rng = np.random.default_rng(run_seed(exp.base_seed, idx, run))
            xy = _place(n, exp.area_side, ex, exp.spacing, rng)
            sh, mh = connectivity_once(exp.env, exp.exciter, xy, exp.cancellation, rng)
            sh_count += sh
            mh_count += mh
        runs = exp.runs_per_point
        halves = []
        for c in (sh_count, mh_count):
            lo, hi = wilson_interval(c, runs)
            halves.append((hi - lo) / 2)
        points.append(CoveragePoint(n, sh_count / runs, mh_count / runs, max(halves), sh_count, mh_count, runs))
    return points


def coverage_csv(points: Sequence[CoveragePoint], mode: CancellationMode, seed: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "sh_prob", "mh_prob", "ci", "mode", "seed"])
    for p in points:
        w.writerow([p.n_tags, f"{p.sh_probability:.6f}", f"{p.mh_probability:.6f}", f"{p.confidence_halfwidth:.6f}", str(mode), seed])
    return buf.getvalue()


def run_max_range_curve(env: RfEnvironment, d1: float = 3.0, antenna_dimension: float = 0.17, n_max: int = 1000) -> list[LadderRow]:
    return max_range_ladder(env, d1, antenna_dimension, n_max)


def max_range_csv(rows: Sequence[LadderRow]) -> str:
    return ladder_csv(rows)

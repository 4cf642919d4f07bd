"""Closed-form range analysis of line topologies.

A line starts at the exciter: tag 1 sits ``d1`` away and tag ``k`` sits
``spacings[k-2]`` beyond tag ``k-1``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

from .rf import Position, RfEnvironment, exciter_gain_toward


@dataclass(frozen=True)
class LineTopology:
    d1: float
    spacings: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "spacings", tuple(float(s) for s in self.spacings))
        if self.d1 <= 0 or any(s <= 0 for s in self.spacings):
            raise ValueError("all line distances must be positive")

    @classmethod
    def equal(cls, d: float, n_tags: int) -> "LineTopology":
        return cls(d, (d,) * (n_tags - 1))

    @property
    def n_tags(self) -> int:
        return 1 + len(self.spacings)

    @property
    def d(self) -> tuple[float, ...]:
        """All distances indexed from 1: ``d[k-1]`` is d_k."""
        return (self.d1,) + self.spacings

    def length(self, a: int, b: int) -> float:
        """Sum of d_a..d_b (1-based, inclusive)."""
        if not 1 <= a <= b <= self.n_tags:
            raise IndexError(f"bad span [{a}, {b}] for {self.n_tags} tags")
        return math.fsum(self.d[a - 1 : b])


def asymmetry_ratio(env: RfEnvironment, exciter_pos: Position, n: Position, m: Position) -> float:
    """Forward (n -> m) over backward (m -> n) received power."""
    d_en = exciter_pos.distance_to(n)
    d_em = exciter_pos.distance_to(m)
    if d_en <= 0 or d_em <= 0:
        raise ValueError("tag coincides with exciter")
    g = exciter_gain_toward(env, exciter_pos, n) / exciter_gain_toward(env, exciter_pos, m)
    return g * (d_em / d_en) ** 2


def backward_multihop_gain(line: LineTopology, i: int) -> float:
    """Power gain of relaying the last backward hop through tag ``i`` instead of N -> 1 directly."""
    n = line.n_tags
    if not 1 < i < n:
        raise ValueError(f"relay index {i} outside (1, {n})")
    return (line.length(1, n) * line.length(2, n) / (line.length(1, i) * line.length(2, i))) ** 2


def equal_spacing_gain(n_tags: int, i: int) -> float:
    """Closed form of :func:`backward_multihop_gain` when every spacing is equal."""
    if not 1 < i < n_tags:
        raise ValueError(f"relay index {i} outside (1, {n_tags})")
    return (n_tags * (n_tags - 1)) ** 2 / (i * (i - 1)) ** 2


def optimal_relay_index(line: LineTopology) -> int:
    n = line.n_tags
    if n < 3:
        raise ValueError("need at least 3 tags to have a relay")
    return max(range(2, n), key=lambda i: (backward_multihop_gain(line, i), -i))


def spacing_epsilon(env: RfEnvironment, exciter_gain: float) -> float:
    lam = env.wavelength
    g = env.tag_gain
    return lam**2 / (4.0 * math.pi) ** 2 * g * env.k0 * math.sqrt(
        env.exciter_power * exciter_gain * g / env.tag_sensitivity
    )


def optimal_spacing(env: RfEnvironment, prefix_length: float, exciter_gain: float) -> float:
    """Largest spacing d for tag i that still closes the backward link to tag i-1.

    ``prefix_length`` is the distance from the exciter to tag i-1. Solves
    ``d**2 + prefix_length*d - eps = 0`` for its positive root.
    """
    if prefix_length < 0:
        raise ValueError("prefix length must be non-negative")
    eps = spacing_epsilon(env, exciter_gain)
    if not eps > 0:
        raise ValueError(f"non-positive epsilon {eps}")
    ell = prefix_length
    # cancellation-free form of (sqrt(ell^2 + 4 eps) - ell) / 2
    return 2.0 * eps / (math.sqrt(ell * ell + 4.0 * eps) + ell)


def optimal_spacing_for_line(env: RfEnvironment, line_prefix: LineTopology, i: int, exciter_gain: float) -> float:
    """d_i* given the first ``i-1`` tags of ``line_prefix``."""
    if not 2 <= i <= line_prefix.n_tags + 1:
        raise ValueError(f"index {i} does not extend a prefix of {line_prefix.n_tags} tags")
    return optimal_spacing(env, line_prefix.length(1, i - 1), exciter_gain)


def fraunhofer_distance(antenna_dimension: float, wavelength: float) -> float:
    return 2.0 * antenna_dimension**2 / wavelength


@dataclass(frozen=True)
class LadderRow:
    n_tags: int
    range_m: float
    spacing_m: float


def max_range_ladder(
    env: RfEnvironment,
    d1: float,
    antenna_dimension: float = 0.17,
    max_tags: int = 1000,
    beam_direction_gain: float | None = None,
) -> list[LadderRow]:
    """Grow a line of tags at optimal spacing until it would enter the near field.

    Row ``N`` holds the distance from the exciter to tag N and the last
    spacing d_N; row 1 is the lone first tag (range and spacing both d1).
    The first spacing smaller than the Fraunhofer distance is not placed.
    ``beam_direction_gain`` defaults to the exciter boresight gain (tags on
    the boresight line).
    """
    if d1 <= 0 or antenna_dimension <= 0:
        raise ValueError("d1 and antenna dimension must be positive")
    d_min = fraunhofer_distance(antenna_dimension, env.wavelength)
    g_e = env.exciter_boresight_gain if beam_direction_gain is None else beam_direction_gain
    rows = [LadderRow(1, d1, d1)]
    prefix = d1
    for n in range(2, max_tags + 1):
        d_n = optimal_spacing(env, prefix, g_e)
        if d_n < d_min:
            break
        prefix += d_n
        rows.append(LadderRow(n, prefix, d_n))
    return rows


def ladder_csv(rows: Sequence[LadderRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "range_m", "d_N_m"])
    for r in rows:
        w.writerow([r.n_tags, f"{r.range_m:.9g}", f"{r.spacing_m:.9g}"])
    return buf.getvalue()

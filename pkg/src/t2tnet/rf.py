"""Free-space backscatter link budget for tag-to-tag links.

All power arithmetic is done in linear watts; use :func:`dbm_to_watts` and
:func:`watts_to_dbm` at the edges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Literal, Sequence

SPEED_OF_LIGHT = 299_792_458.0
TWO_PI = 2.0 * math.pi


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts * 1000.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite position ({self.x}, {self.y})")

    def distance_to(self, other: "Position") -> float:
        return math.hypot(other.x - self.x, other.y - self.y)

    def bearing_to(self, other: "Position") -> float:
        """Angle in degrees of the vector self -> other, counter-clockwise from +x."""
        return math.degrees(math.atan2(other.y - self.y, other.x - self.x))


@dataclass(frozen=True)
class RfEnvironment:
    """Radio parameters shared by every tag and the exciter.

    Defaults are the realistic 868 MHz numerical example: 33 dBm exciter with a
    4 dBi antenna, 0 dBi tags, -50 dBm tag sensitivity.
    """

    carrier_frequency: float = 868e6
    k0: float = 0.4
    k1: float = 0.9
    exciter_power: float = field(default_factory=lambda: dbm_to_watts(33.0))
    tag_sensitivity: float = field(default_factory=lambda: dbm_to_watts(-50.0))
    tag_gain: float = 1.0
    exciter_boresight_gain: float = field(default_factory=lambda: db_to_linear(4.0))
    exciter_beam_direction: float = -45.0
    exciter_beam_width: float = 40.0
    gain_pattern_mode: Literal["isotropic", "sector"] = "isotropic"
    sector_floor_gain: float = 0.01
    cancellation_tolerance: float = 0.2

    def __post_init__(self):
        if not 0.0 < self.k0 < self.k1 <= 1.0:
            raise ValueError(f"need 0 < k0 < k1 <= 1, got k0={self.k0}, k1={self.k1}")
        positive = {
            "carrier_frequency": self.carrier_frequency,
            "exciter_power": self.exciter_power,
            "tag_sensitivity": self.tag_sensitivity,
            "tag_gain": self.tag_gain,
            "exciter_boresight_gain": self.exciter_boresight_gain,
            "sector_floor_gain": self.sector_floor_gain,
            "exciter_beam_width": self.exciter_beam_width,
        }
        for name, value in positive.items():
            if not value > 0.0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.gain_pattern_mode not in ("isotropic", "sector"):
            raise ValueError(f"unknown gain pattern {self.gain_pattern_mode!r}")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    def with_overrides(self, **kwargs) -> "RfEnvironment":
        return replace(self, **kwargs)


def _checked_distance(a: Position, b: Position, what: str) -> float:
    d = a.distance_to(b)
    if d <= 0.0:
        raise ValueError(f"zero distance between {what}")
    return d


def exciter_gain_toward(env: RfEnvironment, exciter_pos: Position, target: Position) -> float:
    _checked_distance(exciter_pos, target, "exciter and target")
    if env.gain_pattern_mode == "isotropic":
        return env.exciter_boresight_gain
    off = (exciter_pos.bearing_to(target) - env.exciter_beam_direction + 180.0) % 360.0 - 180.0
    if abs(off) <= env.exciter_beam_width / 2.0:
        return env.exciter_boresight_gain
    return env.sector_floor_gain


def available_power(env: RfEnvironment, exciter_pos: Position, tag: Position) -> float:
    """Carrier power available for backscatter at ``tag``."""
    d = _checked_distance(exciter_pos, tag, "exciter and tag")
    lam = env.wavelength
    g_e = exciter_gain_toward(env, exciter_pos, tag)
    return env.exciter_power * g_e * env.tag_gain * lam**2 / (4.0 * math.pi * d) ** 2


def received_power(env: RfEnvironment, exciter_pos: Position, tx: Position, rx: Position) -> float:
    """Power received at ``rx`` from a backscattering ``tx``.

    Uses the weaker reflection coefficient k0, so the result is a lower bound
    on what the receiver sees.
    """
    d = _checked_distance(tx, rx, "tx and rx")
    lam = env.wavelength
    return available_power(env, exciter_pos, tx) * (env.k0 * env.tag_gain * lam) ** 2 / (4.0 * math.pi * d) ** 2


def link_alive(env: RfEnvironment, exciter_pos: Position, tx: Position, rx: Position) -> bool:
    return received_power(env, exciter_pos, tx, rx) >= env.tag_sensitivity


def strongest_exciter(env: RfEnvironment, exciters: Sequence[Position], tag: Position) -> Position:
    """The exciter delivering the most carrier power to ``tag``.

    With several exciters a tag backscatters its strongest carrier only.
    Ties go to the first exciter in the sequence.
    """
    best, best_power = None, -1.0
    for e in exciters:
        p = available_power(env, e, tag)
        if p > best_power:
            best, best_power = e, p
    if best is None:
        raise ValueError("at least one exciter is required")
    return best


def cancellation_argument(
    env: RfEnvironment, d_exciter_tx: float, d_exciter_rx: float, d_tx_rx: float, gain: float | None = None
) -> float:
    """Argument of the arccos in the destructive-interference condition."""
    if min(d_exciter_tx, d_exciter_rx, d_tx_rx) <= 0.0:
        raise ValueError("distances must be positive")
    g = env.tag_gain if gain is None else gain
    return -(env.k0 + env.k1) * d_exciter_rx * env.wavelength * g / (8.0 * math.pi * d_exciter_tx * d_tx_rx)


def cancellation_angle_from_distances(
    env: RfEnvironment, d_exciter_tx: float, d_exciter_rx: float, d_tx_rx: float, gain: float | None = None
) -> float | None:
    """Critical phase difference of arrival, or ``None`` when no null exists."""
    arg = cancellation_argument(env, d_exciter_tx, d_exciter_rx, d_tx_rx, gain)
    if not -1.0 <= arg <= 1.0:
        return None
    return math.acos(arg)


def phase_cancellation_angle(
    env: RfEnvironment, exciter_pos: Position, tx: Position, rx: Position, rx_gain: float | None = None
) -> float | None:
    return cancellation_angle_from_distances(
        env,
        _checked_distance(exciter_pos, tx, "exciter and tx"),
        _checked_distance(exciter_pos, rx, "exciter and rx"),
        _checked_distance(tx, rx, "tx and rx"),
        rx_gain,
    )


def phase_difference_of_arrival(env: RfEnvironment, exciter_pos: Position, tx: Position, rx: Position) -> float:
    """Phase of the backscattered path relative to the direct carrier at ``rx``, in [0, 2*pi)."""
    d_e_tx = _checked_distance(exciter_pos, tx, "exciter and tx")
    d_tx_rx = _checked_distance(tx, rx, "tx and rx")
    d_e_rx = _checked_distance(exciter_pos, rx, "exciter and rx")
    extra = (d_e_tx + d_tx_rx) - d_e_rx
    phase = math.fmod(TWO_PI * extra / env.wavelength, TWO_PI)
    if phase < 0.0:
        phase += TWO_PI
    # fmod can land exactly on 2*pi after the shift above
    return 0.0 if phase >= TWO_PI else phase


def circular_distance(a: float, b: float) -> float:
    d = abs(a - b) % TWO_PI
    return min(d, TWO_PI - d)


def is_cancelled(
    env: RfEnvironment,
    exciter_pos: Position,
    tx: Position,
    rx: Position,
    phase_offset: float = 0.0,
    tolerance: float | None = None,
) -> bool:
    """True when the tx->rx link sits inside a phase-cancellation null.

    ``phase_offset`` is added to the geometric phase difference; a 90 degree
    shifted retransmission passes ``pi/2``. The null is matched against both
    roots +/- theta_c of the cosine condition.
    """
    theta_c = phase_cancellation_angle(env, exciter_pos, tx, rx)
    if theta_c is None:
        return False
    tol = env.cancellation_tolerance if tolerance is None else tolerance
    theta_d = (phase_difference_of_arrival(env, exciter_pos, tx, rx) + phase_offset) % TWO_PI
    return min(circular_distance(theta_d, theta_c), circular_distance(theta_d, -theta_c)) < tol


def link_power_multi(env: RfEnvironment, exciters: Iterable[Position], tx: Position, rx: Position) -> float:
    """Received power when ``tx`` reflects the strongest of several carriers."""
    return received_power(env, strongest_exciter(env, list(exciters), tx), tx, rx)

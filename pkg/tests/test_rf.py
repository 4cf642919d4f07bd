import math

import pytest
from hypothesis import given, settings, strategies as st

from t2tnet.rf import (
    Position,
    RfEnvironment,
    available_power,
    cancellation_angle_from_distances,
    circular_distance,
    dbm_to_watts,
    exciter_gain_toward,
    is_cancelled,
    link_alive,
    phase_cancellation_angle,
    phase_difference_of_arrival,
    received_power,
    watts_to_dbm,
)

ENV = RfEnvironment()
EXC = Position(0.0, 0.0)

# Hand-evaluated constants, written out rather than taken from the package.
P_E = 10 ** (33 / 10) / 1000
G_E = 10 ** (4 / 10)
LAM = 299_792_458.0 / 868e6


def hand_available(d):
    return P_E * G_E * LAM**2 / (4 * math.pi * d) ** 2


def hand_received(d_e, d):
    return hand_available(d_e) * (0.4 * LAM) ** 2 / (4 * math.pi * d) ** 2


def test_defaults_convert_to_linear_units():
    assert ENV.exciter_power == pytest.approx(1.99526, rel=1e-5)
    assert ENV.exciter_boresight_gain == pytest.approx(2.512, rel=1e-3)
    assert ENV.tag_sensitivity == pytest.approx(1e-8)
    assert ENV.wavelength == pytest.approx(0.345383, rel=1e-6)


def test_dbm_roundtrip():
    assert watts_to_dbm(dbm_to_watts(-48.5)) == pytest.approx(-48.5)


def test_available_power_at_three_metres():
    p = available_power(ENV, EXC, Position(3.0, 0.0))
    assert p == pytest.approx(hand_available(3.0), rel=1e-12)
    assert p == pytest.approx(4.21e-4, rel=2e-3)
    assert watts_to_dbm(p) == pytest.approx(-3.76, abs=0.01)


def test_available_power_inverse_square_and_gain():
    near = available_power(ENV, EXC, Position(3.0, 0.0))
    far = available_power(ENV, EXC, Position(6.0, 0.0))
    assert near / far == pytest.approx(4.0, rel=1e-12)
    half = ENV.with_overrides(exciter_boresight_gain=ENV.exciter_boresight_gain / 2)
    assert available_power(half, EXC, Position(3.0, 0.0)) == pytest.approx(near / 2, rel=1e-12)


def test_received_power_examples_and_link_decision():
    tx = Position(3.0, 0.0)
    alive_rx = Position(3.0, 2.0)
    dead_rx = Position(3.0, 3.0)
    p_alive = received_power(ENV, EXC, tx, alive_rx)
    p_dead = received_power(ENV, EXC, tx, dead_rx)
    assert p_alive == pytest.approx(hand_received(3.0, 2.0), rel=1e-12)
    assert watts_to_dbm(p_alive) == pytest.approx(-48.95, abs=0.02)
    assert p_dead == pytest.approx(hand_received(3.0, 3.0), rel=1e-12)
    assert watts_to_dbm(p_dead) == pytest.approx(-52.48, abs=0.02)
    assert link_alive(ENV, EXC, tx, alive_rx)
    assert not link_alive(ENV, EXC, tx, dead_rx)


def test_received_power_quadratic_in_k0():
    tx, rx = Position(3.0, 0.0), Position(3.0, 2.0)
    base = received_power(ENV, EXC, tx, rx)
    assert received_power(ENV.with_overrides(k0=0.8), EXC, tx, rx) == pytest.approx(4 * base, rel=1e-12)


def test_coincident_positions_are_rejected():
    with pytest.raises(ValueError):
        received_power(ENV, EXC, EXC, Position(1.0, 0.0))
    with pytest.raises(ValueError):
        received_power(ENV, EXC, Position(1.0, 0.0), Position(1.0, 0.0))


def test_sector_pattern():
    sector = ENV.with_overrides(gain_pattern_mode="sector")
    boresight = Position(math.cos(math.radians(-45)), math.sin(math.radians(-45)))
    assert exciter_gain_toward(sector, EXC, boresight) == pytest.approx(ENV.exciter_boresight_gain)
    off = Position(math.cos(math.radians(45)), math.sin(math.radians(45)))
    assert exciter_gain_toward(sector, EXC, off) == pytest.approx(0.01)
    assert exciter_gain_toward(ENV, EXC, off) == pytest.approx(ENV.exciter_boresight_gain)


def test_cancellation_angle_example():
    arg = -(0.4 + 0.9) * 3.0 * LAM / (8 * math.pi * 3.0 * 2.0)
    theta = cancellation_angle_from_distances(ENV, 3.0, 3.0, 2.0)
    assert theta == pytest.approx(math.acos(arg), rel=1e-12)
    assert theta == pytest.approx(1.580, abs=1e-3)


def test_cancellation_angle_edge_cases():
    # a zero numerator leaves arccos(0)
    assert cancellation_angle_from_distances(ENV, 3.0, 3.0, 2.0, gain=0.0) == pytest.approx(math.pi / 2)
    # tiny tx distances push |argument| past one
    assert cancellation_angle_from_distances(ENV, 0.001, 3.0, 0.001) is None


def test_phase_difference_of_arrival_cases():
    tx, rx = Position(3.0, 0.0), Position(3.0, 2.0)
    extra = 5.0 - math.sqrt(13.0)
    expect = (2 * math.pi * extra / LAM) % (2 * math.pi)
    assert phase_difference_of_arrival(ENV, EXC, tx, rx) == pytest.approx(expect, abs=1e-9)
    assert expect == pytest.approx(0.2350, abs=1e-4)
    # tx behind rx on a straight line: the extra path is exactly 2 * |tx rx|
    lam = ENV.wavelength
    on_line_tx, on_line_rx = Position(1.0 + lam / 2, 0.0), Position(1.0, 0.0)
    assert circular_distance(phase_difference_of_arrival(ENV, EXC, on_line_tx, on_line_rx), 0.0) < 1e-9
    quarter_tx = Position(1.0 + lam / 4, 0.0)
    assert phase_difference_of_arrival(ENV, EXC, quarter_tx, on_line_rx) == pytest.approx(math.pi, abs=1e-9)


def test_shifted_copy_escapes_a_null():
    rx = Position(1.0, 0.0)
    theta_c = cancellation_angle_from_distances(ENV, 1.5, 1.0, 0.5)
    # walk tx along the line until the geometric phase lands on the null
    for k in range(20000):
        tx = Position(1.2 + k * 1e-5, 0.0)
        if is_cancelled(ENV, EXC, tx, rx, tolerance=0.01):
            break
    else:
        pytest.fail("no null found on the line")
    assert theta_c is not None
    assert phase_cancellation_angle(ENV, EXC, tx, rx) is not None
    assert not is_cancelled(ENV, EXC, tx, rx, phase_offset=math.pi / 2)


dist = st.floats(0.2, 20.0)


@given(dist, dist, dist, st.floats(1.01, 3.0))
def test_received_power_strictly_decreasing(d_e, d, _, scale):
    tx = Position(d_e, 0.0)
    rx = Position(d_e, d)
    further = Position(d_e, d * scale)
    assert received_power(ENV, EXC, tx, further) < received_power(ENV, EXC, tx, rx)
    farther_tx = Position(d_e * scale, 0.0)
    rx2 = Position(d_e * scale, d)
    assert received_power(ENV, EXC, farther_tx, rx2) < received_power(ENV, EXC, tx, rx)


coord = st.floats(-10.0, 10.0)


@given(coord, coord, coord, coord)
def test_asymmetry_identity(x1, y1, x2, y2):
    a, b = Position(x1, y1), Position(x2, y2)
    if min(EXC.distance_to(a), EXC.distance_to(b), a.distance_to(b)) < 1e-3:
        return
    for env in (ENV, ENV.with_overrides(gain_pattern_mode="sector")):
        ratio = received_power(env, EXC, a, b) / received_power(env, EXC, b, a)
        g = exciter_gain_toward(env, EXC, a) / exciter_gain_toward(env, EXC, b)
        assert ratio == pytest.approx(g * (EXC.distance_to(b) / EXC.distance_to(a)) ** 2, rel=1e-12)


@given(st.floats(0.1, 10.0), st.floats(0.5, 2.0), st.floats(0.2, 10.0))
def test_available_power_scaling(p_mult, f_mult, d):
    tag = Position(d, 0.0)
    base = available_power(ENV, EXC, tag)
    scaled = ENV.with_overrides(exciter_power=ENV.exciter_power * p_mult)
    assert available_power(scaled, EXC, tag) == pytest.approx(base * p_mult, rel=1e-12)
    # wavelength scales as 1/f, power as wavelength squared
    shifted = ENV.with_overrides(carrier_frequency=ENV.carrier_frequency * f_mult)
    assert available_power(shifted, EXC, tag) == pytest.approx(base / f_mult**2, rel=1e-12)


@settings(max_examples=300)
@given(coord, coord, coord, coord)
def test_pdoa_range(x1, y1, x2, y2):
    a, b = Position(x1, y1), Position(x2, y2)
    if min(EXC.distance_to(a), EXC.distance_to(b), a.distance_to(b)) < 1e-6:
        return
    v = phase_difference_of_arrival(ENV, EXC, a, b)
    assert 0.0 <= v < 2 * math.pi


@given(st.floats(-50, 50), st.floats(-50, 50))
def test_circular_distance_bounds(a, b):
    d = circular_distance(a, b)
    assert 0.0 <= d <= math.pi + 1e-12
    assert d == pytest.approx(circular_distance(b, a), abs=1e-9)

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from t2tnet.codec import (
    FRAME_LEN,
    BitTiming,
    Frame,
    bytes_to_bits,
    count_transitions,
    crc16,
    decode_rle,
    decode_stream,
    encode_frame,
    encode_rle,
    fm0_decode,
    fm0_encode,
    frame_bits,
    iter_frames,
    preamble_bytes,
    transition_offsets,
)


def crc_bitwise(data: bytes) -> int:
    """Shift-register CRC-16/CCITT-FALSE, one bit at a time."""
    crc = 0xFFFF
    for byte in data:
        crc ^= byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021) if crc & 0x8000 else crc << 1
            crc &= 0xFFFF
    return crc


byte = st.integers(0, 255)
frames = st.builds(Frame, byte, byte, byte, byte, st.binary(min_size=4, max_size=4))


def test_crc_check_value():
    assert crc_bitwise(b"123456789") == 0x29B1
    assert crc16(b"123456789") == 0x29B1


@given(st.binary(max_size=64))
def test_crc_matches_bitwise_reference(data):
    assert crc16(data) == crc_bitwise(data)


@given(st.binary(min_size=1, max_size=32))
def test_crc_sees_an_appended_zero(data):
    assert crc16(data) != crc16(data + b"\x00")


@given(st.binary(min_size=8, max_size=8), st.integers(0, 63))
def test_crc_catches_any_single_flip(data, pos):
    flipped = bytearray(data)
    flipped[pos // 8] ^= 0x80 >> (pos % 8)
    assert crc16(bytes(flipped)) != crc16(data)


def test_fm0_symbol_table():
    # (bit, level before the bit) -> half-bit levels
    table = {(1, 1): [0, 0], (1, 0): [1, 1], (0, 1): [0, 1], (0, 0): [1, 0]}
    for (bit, start), levels in table.items():
        assert fm0_encode([bit], start_level=start).tolist() == levels


@given(st.lists(st.integers(0, 1), min_size=1, max_size=200), st.integers(0, 1))
def test_fm0_boundaries_and_roundtrip(bits, start):
    lv = fm0_encode(bits, start)
    # a level change at every bit boundary, including the one entering bit 0
    prev = np.concatenate([[start], lv[1::2][:-1]])
    assert np.all(lv[0::2] != prev)
    mids = lv[0::2] != lv[1::2]
    assert mids.tolist() == [b == 0 for b in bits]
    out, ok = fm0_decode(lv)
    assert out.tolist() == list(bits) and ok.all()


def test_frame_layout_and_airtime():
    f = Frame(1, 2, 0xFF, 7, b"\x01\x02\x03\x04")
    raw = f.to_bytes()
    assert len(raw) == FRAME_LEN == 11
    assert raw[0] == 0xAA and raw[1:9] == bytes([1, 2, 0xFF, 7, 1, 2, 3, 4])
    assert int.from_bytes(raw[9:], "big") == crc_bitwise(raw[1:9])
    t = BitTiming()
    assert t.data_rate == 10_000
    assert t.airtime_us(8 * FRAME_LEN) == pytest.approx(8800.0)
    assert preamble_bytes(36.0, t) == 45
    assert frame_bits(36.0, t) == 8 * 56
    assert len(encode_frame(f)) == 2 * 8 * 56


def test_frame_rejects_bad_fields():
    with pytest.raises(ValueError):
        Frame(256, 0)
    with pytest.raises(ValueError):
        Frame(1, 2, payload=b"abc")


@settings(max_examples=200)
@given(frames)
def test_decode_roundtrip(f):
    out, diag = decode_stream(encode_frame(f))
    assert [(d.frame, d.crc_ok) for d in out] == [(f, True)]
    assert diag.false_triggers == 0


@pytest.mark.parametrize("message_type", range(256))
def test_every_message_type_roundtrips(message_type):
    f = Frame(3, 9, message_type, 200, b"\xde\xad\xbe\xef")
    assert iter_frames(decode_stream(encode_frame(f))[0]) == [f]


@given(frames)
def test_decoder_ignores_polarity(f):
    lv = encode_frame(f)
    assert iter_frames(decode_stream(1 - lv)[0]) == iter_frames(decode_stream(lv)[0]) == [f]


@given(frames, st.integers(0, 79))
def test_corrupted_body_bit_fails_crc(f, pos):
    raw = bytes([0xBB]) * 45 + f.to_bytes()
    bits = bytes_to_bits(raw)
    bits[8 * 46 + pos] ^= 1  # somewhere in body or CRC, after the SFD
    out, diag = decode_stream(fm0_encode(bits))
    assert len(out) == 1 and not out[0].crc_ok
    assert diag.hex_dumps


def test_alternating_noise_is_not_a_frame():
    noise = fm0_encode(np.tile([0, 1], 300))
    out, diag = decode_stream(noise)
    assert out == []
    assert diag.false_triggers > 0


def test_truncated_frame_times_out():
    lv = encode_frame(Frame(1, 2))
    out, diag = decode_stream(lv[: len(lv) - 40])
    assert out == [] and diag.timeouts == 1


def test_two_frames_with_idle_gap():
    a, b = Frame(1, 2, message_id=1), Frame(2, 1, message_id=2)
    la = encode_frame(a)
    gap = np.full(60, la[-1], dtype=np.uint8)
    lb = encode_frame(b)
    if lb[0] == gap[-1]:
        lb = 1 - lb
    out, _ = decode_stream(np.concatenate([la, gap, lb]))
    assert iter_frames(out) == [a, b]


@given(st.lists(st.integers(0, 1), max_size=300))
def test_rle_roundtrip(levels):
    assert decode_rle(encode_rle(levels)).tolist() == levels


def test_transition_counting():
    lv = np.array([0, 0, 1, 1, 0, 1], dtype=np.uint8)
    assert transition_offsets(lv).tolist() == [2, 4, 5]
    edges = np.array([1.0, 2.0, 3.0, 7.0])
    assert count_transitions(edges, 2.0, 7.0) == 2
